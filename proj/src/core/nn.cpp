#include "satpose/core/nn.hpp"

#include <cmath>

#include "satpose/util/errors.hpp"

SATPOSE_NS_BEGIN

const char* param_role_name(ParamRole role) {
  switch (role) {
    case ParamRole::EncoderNormAffine:
      return "encoder-norm-affine";
    case ParamRole::EncoderOther:
      return "encoder-other";
    case ParamRole::Head:
      return "head";
  }
  return "?";
}

ParamRole param_role_from_name(const std::string& name) {
  if (name == "encoder-norm-affine") return ParamRole::EncoderNormAffine;
  if (name == "encoder-other") return ParamRole::EncoderOther;
  if (name == "head") return ParamRole::Head;
  throw DataError("unknown parameter role: " + name);
}

Tensor ParamRegistry::add(const std::string& name, ParamRole role, Tensor tensor) {
  if (find(name)) throw ConfigError("duplicate parameter name: " + name);
  tensor.set_requires_grad(true);
  params_.push_back({name, role, tensor});
  return tensor;
}

void ParamRegistry::add_norm_state(const std::string& prefix, ParamRole affine_role,
                                   NormLayerState& state) {
  add(prefix + ".gamma", affine_role, state.gamma);
  add(prefix + ".beta", affine_role, state.beta);
  if (state.kind == NormKind::BatchNorm) {
    buffers_.push_back({prefix + ".running_mean", &state.running_mean});
    buffers_.push_back({prefix + ".running_var", &state.running_var});
  }
}

std::vector<Tensor> ParamRegistry::tensors(std::initializer_list<ParamRole> roles) const {
  std::vector<Tensor> out;
  for (const auto& p : params_) {
    if (roles.size() == 0) {
      out.push_back(p.tensor);
      continue;
    }
    for (const ParamRole r : roles) {
      if (p.role == r) {
        out.push_back(p.tensor);
        break;
      }
    }
  }
  return out;
}

std::vector<Parameter> ParamRegistry::filtered(ParamRole role) const {
  std::vector<Parameter> out;
  for (const auto& p : params_) {
    if (p.role == role) out.push_back(p);
  }
  return out;
}

const Parameter* ParamRegistry::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::int64_t ParamRegistry::count(std::initializer_list<ParamRole> roles) const {
  std::int64_t n = 0;
  for (const auto& p : params_) {
    bool match = roles.size() == 0;
    for (const ParamRole r : roles) match = match || p.role == r;
    if (match) n += p.tensor.numel();
  }
  return n;
}

void ParamRegistry::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

Conv2dLayer make_conv2d(ParamRegistry& reg, const std::string& name, ParamRole role, Rng& rng,
                        int cin, int cout, int k, int stride, int pad, bool with_bias,
                        real bias_init) {
  const double stddev = std::sqrt(2.0 / (static_cast<double>(cin) * k * k));
  std::vector<real> w(static_cast<std::size_t>(cout) * cin * k * k);
  for (auto& v : w) v = static_cast<real>(rng.normal(0.0, stddev));
  Conv2dLayer layer;
  layer.weight = reg.add(name + ".weight", role, Tensor::from_data({cout, cin, k, k}, std::move(w)));
  if (with_bias) {
    layer.bias = reg.add(name + ".bias", role, Tensor::full({cout}, bias_init));
  }
  layer.stride = stride;
  layer.pad = pad;
  return layer;
}

NormLayer make_norm(ParamRegistry& reg, const std::string& name, ParamRole affine_role,
                    NormKind kind, int channels, int gn_groups, double eps, double momentum) {
  NormLayer layer;
  layer.state = std::make_shared<NormLayerState>(
      kind == NormKind::BatchNorm ? NormLayerState::batch_norm(channels, eps, momentum)
                                  : NormLayerState::group_norm(channels, gn_groups, eps));
  reg.add_norm_state(name, affine_role, *layer.state);
  return layer;
}

SATPOSE_NS_END
