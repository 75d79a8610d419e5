#pragma once

#include <cstdint>
#include <vector>

#include "satpose/core/tensor.hpp"

SATPOSE_NS_BEGIN

enum class NormKind { BatchNorm, GroupNorm };

enum class NormMode {
  Train,      // batch statistics; running averages updated
  Eval,       // running statistics
  OdrCollect  // running statistics; per-image stats accumulated for deferred updates
};

// Streaming (single-pass, shift-free) pooled mean/variance over per-image
// channel statistics. Double accumulation regardless of the engine precision.
struct StreamStats {
  std::vector<double> mean;
  std::vector<double> m2;  // sum of squared deviations
  std::int64_t count = 0;  // pixels pooled
  int images = 0;

  void reset(std::size_t channels);
  bool empty() const { return count == 0; }
  // Merge one image's per-channel biased statistics over n pixels.
  void add_image(std::span<const double> image_mean, std::span<const double> image_var,
                 std::int64_t n);
  std::vector<double> variance() const;  // biased
};

// Per-channel affine normalization state. Running statistics are kept in
// double and serialized as float32 in checkpoints.
struct NormLayerState {
  NormKind kind = NormKind::BatchNorm;
  int channels = 0;
  Tensor gamma;  // [C]
  Tensor beta;   // [C]
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.9;  // running <- m * running + (1-m) * batch
  int groups = 1;         // GroupNorm only
  double eps = 1e-5;
  StreamStats stream;  // OdrCollect accumulator (BatchNorm only)

  static NormLayerState batch_norm(int channels, double eps = 1e-5, double momentum = 0.9);
  static NormLayerState group_norm(int channels, int groups, double eps = 1e-5);
};

// BatchNorm over (N,H,W) per channel. Train mode updates the running
// statistics in place; OdrCollect normalizes with the running statistics and
// accumulates each image's statistics into `state.stream`.
Tensor batch_norm(const Tensor& x, NormLayerState& state, NormMode mode);

// GroupNorm: per-sample, per-group statistics; batch-agnostic by construction.
Tensor group_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, int groups,
                  double eps = 1e-5);

// Dispatches on state.kind.
Tensor norm_forward(const Tensor& x, NormLayerState& state, NormMode mode);

SATPOSE_NS_END
