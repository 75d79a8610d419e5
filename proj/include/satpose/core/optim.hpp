#pragma once

#include <vector>

#include "satpose/core/tensor.hpp"

SATPOSE_NS_BEGIN

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
};

// AdamW with decoupled weight decay. Moment buffers are owned here, matched
// by position to the parameter list given at construction.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, AdamWConfig cfg);

  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  long long step_count() const { return step_; }

  void step();  // reads grads, updates params in place, bumps the counter

 private:
  struct Slot {
    std::vector<real> m;
    std::vector<real> v;
  };
  std::vector<Tensor> params_;
  std::vector<Slot> slots_;
  AdamWConfig cfg_;
  long long step_ = 0;
};

// Plain gradient descent (used by the online refinement stage).
void sgd_step(std::vector<Tensor>& params, double lr);

SATPOSE_NS_END
