#pragma once

#include <string>
#include <vector>

#include "satpose/core/norm.hpp"
#include "satpose/core/ops.hpp"
#include "satpose/util/rng.hpp"

SATPOSE_NS_BEGIN

// Role tags drive the optimizer/backward filters; the refinement stage is
// only allowed to touch EncoderNormAffine.
enum class ParamRole { EncoderNormAffine, EncoderOther, Head };

const char* param_role_name(ParamRole role);
ParamRole param_role_from_name(const std::string& name);

struct Parameter {
  std::string name;
  ParamRole role;
  Tensor tensor;
};

// Named BN running-statistic buffers (not learnable, still checkpointed).
struct NormBuffer {
  std::string name;
  std::vector<double>* values;
};

class ParamRegistry {
 public:
  Tensor add(const std::string& name, ParamRole role, Tensor tensor);
  void add_norm_state(const std::string& prefix, ParamRole affine_role, NormLayerState& state);

  const std::vector<Parameter>& params() const { return params_; }
  std::vector<Parameter>& params() { return params_; }
  const std::vector<NormBuffer>& buffers() const { return buffers_; }

  std::vector<Tensor> tensors(std::initializer_list<ParamRole> roles = {}) const;
  std::vector<Parameter> filtered(ParamRole role) const;
  const Parameter* find(const std::string& name) const;

  std::int64_t count(std::initializer_list<ParamRole> roles = {}) const;
  void zero_grad();

 private:
  std::vector<Parameter> params_;
  std::vector<NormBuffer> buffers_;
};

// ---- layers ----

struct Conv2dLayer {
  Tensor weight;  // [Cout,Cin,k,k]
  Tensor bias;    // optional
  int stride = 1;
  int pad = 0;

  Tensor operator()(const Tensor& x) const { return conv2d(x, weight, bias, stride, pad); }
};

// He-normal weight init; optional bias starts at bias_init.
Conv2dLayer make_conv2d(ParamRegistry& reg, const std::string& name, ParamRole role, Rng& rng,
                        int cin, int cout, int k, int stride, int pad, bool with_bias = false,
                        real bias_init = real(0));

// State sits behind a shared_ptr so registered buffer pointers stay valid
// wherever the layer object moves.
struct NormLayer {
  std::shared_ptr<NormLayerState> state;

  Tensor operator()(const Tensor& x, NormMode mode) { return norm_forward(x, *state, mode); }
};

NormLayer make_norm(ParamRegistry& reg, const std::string& name, ParamRole affine_role,
                    NormKind kind, int channels, int gn_groups, double eps = 1e-5,
                    double momentum = 0.9);

SATPOSE_NS_END
