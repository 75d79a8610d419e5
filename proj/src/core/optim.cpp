#include "satpose/core/optim.hpp"

#include <cmath>

SATPOSE_NS_BEGIN

AdamW::AdamW(std::vector<Tensor> params, AdamWConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  slots_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto n = static_cast<std::size_t>(params_[i].numel());
    slots_[i].m.assign(n, real(0));
    slots_[i].v.assign(n, real(0));
  }
}

void AdamW::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  const real b1 = static_cast<real>(cfg_.beta1);
  const real b2 = static_cast<real>(cfg_.beta2);
  const real lr = static_cast<real>(cfg_.lr);
  const real eps = static_cast<real>(cfg_.eps);
  const real decay = static_cast<real>(1.0 - cfg_.lr * cfg_.weight_decay);
  const real inv_bc1 = static_cast<real>(1.0 / bc1);
  const real inv_bc2 = static_cast<real>(1.0 / bc2);

  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    auto p = params_[pi].data();
    auto g = params_[pi].grad();
    auto& slot = slots_[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      slot.m[i] = b1 * slot.m[i] + (real(1) - b1) * g[i];
      slot.v[i] = b2 * slot.v[i] + (real(1) - b2) * g[i] * g[i];
      const real mhat = slot.m[i] * inv_bc1;
      const real vhat = slot.v[i] * inv_bc2;
      p[i] = p[i] * decay - lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

void sgd_step(std::vector<Tensor>& params, double lr) {
  const real r = static_cast<real>(lr);
  for (auto& param : params) {
    auto p = param.data();
    auto g = param.grad();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= r * g[i];
  }
}

SATPOSE_NS_END
