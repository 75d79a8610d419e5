#include "satpose/core/norm.hpp"

#include <cmath>

#include "satpose/util/errors.hpp"
#include "satpose/util/thread_pool.hpp"

SATPOSE_NS_BEGIN

void StreamStats::reset(std::size_t channels) {
  mean.assign(channels, 0.0);
  m2.assign(channels, 0.0);
  count = 0;
  images = 0;
}

void StreamStats::add_image(std::span<const double> image_mean, std::span<const double> image_var,
                            std::int64_t n) {
  if (mean.size() != image_mean.size() || m2.size() != image_var.size()) {
    throw ShapeError("StreamStats: channel count mismatch");
  }
  for (const double v : image_var) {
    if (v < 0.0) throw NumericalError("StreamStats: negative variance");
  }
  const double nn = static_cast<double>(n);
  const double total = static_cast<double>(count) + nn;
  for (std::size_t c = 0; c < mean.size(); ++c) {
    const double delta = image_mean[c] - mean[c];
    mean[c] += delta * (nn / total);
    m2[c] += image_var[c] * nn + delta * delta * (static_cast<double>(count) * nn / total);
  }
  count = static_cast<std::int64_t>(total);
  ++images;
}

std::vector<double> StreamStats::variance() const {
  std::vector<double> v(m2.size(), 0.0);
  if (count > 0) {
    for (std::size_t c = 0; c < v.size(); ++c) v[c] = m2[c] / static_cast<double>(count);
  }
  return v;
}

NormLayerState NormLayerState::batch_norm(int channels, double eps, double momentum) {
  NormLayerState s;
  s.kind = NormKind::BatchNorm;
  s.channels = channels;
  s.gamma = Tensor::full({channels}, real(1), true);
  s.beta = Tensor::zeros({channels}, true);
  s.running_mean.assign(static_cast<std::size_t>(channels), 0.0);
  s.running_var.assign(static_cast<std::size_t>(channels), 1.0);
  s.eps = eps;
  s.momentum = momentum;
  s.stream.reset(static_cast<std::size_t>(channels));
  return s;
}

NormLayerState NormLayerState::group_norm(int channels, int groups, double eps) {
  if (groups <= 0 || channels % groups != 0) {
    throw ShapeError("group_norm: channels " + std::to_string(channels) +
                     " not divisible by groups " + std::to_string(groups));
  }
  NormLayerState s;
  s.kind = NormKind::GroupNorm;
  s.channels = channels;
  s.groups = groups;
  s.gamma = Tensor::full({channels}, real(1), true);
  s.beta = Tensor::zeros({channels}, true);
  s.eps = eps;
  return s;
}

namespace {

struct BnDims {
  int n, c, h, w;
  std::int64_t per_channel;  // N*H*W
};

BnDims bn_dims(const Tensor& x) {
  if (x.shape().size() != 4) throw ShapeError("norm: expected 4-d input");
  BnDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3), 0};
  if (d.n == 0) throw ShapeError("norm: empty batch");
  d.per_channel = static_cast<std::int64_t>(d.n) * d.h * d.w;
  return d;
}

// Per-channel mean/biased variance over (N,H,W), double accumulation.
void channel_stats(const Tensor& x, const BnDims& d, std::vector<double>& mean,
                   std::vector<double>& var, int sample_begin = -1, int sample_end = -1) {
  const int n0 = sample_begin < 0 ? 0 : sample_begin;
  const int n1 = sample_end < 0 ? d.n : sample_end;
  const auto in = x.data();
  const std::int64_t plane = static_cast<std::int64_t>(d.h) * d.w;
  const std::int64_t count = static_cast<std::int64_t>(n1 - n0) * plane;
  mean.assign(static_cast<std::size_t>(d.c), 0.0);
  var.assign(static_cast<std::size_t>(d.c), 0.0);
  parallel_for(static_cast<std::size_t>(d.c), [&](std::size_t c) {
    double s = 0.0, sq = 0.0;
    for (int ni = n0; ni < n1; ++ni) {
      const real* src = in.data() + (static_cast<std::int64_t>(ni) * d.c + c) * plane;
      for (std::int64_t i = 0; i < plane; ++i) {
        const double v = static_cast<double>(src[i]);
        s += v;
        sq += v * v;
      }
    }
    const double m = s / static_cast<double>(count);
    mean[c] = m;
    var[c] = std::max(0.0, sq / static_cast<double>(count) - m * m);
  });
}

// Shared affine-normalization forward + backward for a fixed per-channel
// (mean, inv_std). Covers eval and odr_collect BatchNorm.
Tensor affine_norm_fixed(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         std::vector<double> mean, std::vector<double> inv_std) {
  const BnDims d = bn_dims(x);
  const std::int64_t plane = static_cast<std::int64_t>(d.h) * d.w;
  std::vector<real> out(static_cast<std::size_t>(x.numel()));
  const auto in = x.data();
  parallel_for(static_cast<std::size_t>(d.n) * d.c, [&](std::size_t p) {
    const std::size_t c = p % static_cast<std::size_t>(d.c);
    const real g = gamma.data()[c];
    const real b = beta.data()[c];
    const real m = static_cast<real>(mean[c]);
    const real is = static_cast<real>(inv_std[c]);
    const real* src = in.data() + p * plane;
    real* dst = out.data() + p * plane;
    for (std::int64_t i = 0; i < plane; ++i) dst[i] = (src[i] - m) * is * g + b;
  });
  Tensor tx = x, tg = gamma, tb = beta;
  auto mean_h = std::make_shared<std::vector<double>>(std::move(mean));
  auto istd_h = std::make_shared<std::vector<double>>(std::move(inv_std));
  return Tensor::make_op(
      x.shape(), std::move(out), {x, gamma, beta},
      [tx, tg, tb, mean_h, istd_h, d, plane](detail::Node& node) mutable {
        const auto in = tx.data();
        for (int c = 0; c < d.c; ++c) {
          const real m = static_cast<real>((*mean_h)[static_cast<std::size_t>(c)]);
          const real is = static_cast<real>((*istd_h)[static_cast<std::size_t>(c)]);
          const real g = tg.data()[static_cast<std::size_t>(c)];
          double dg = 0.0, db = 0.0;
          for (int ni = 0; ni < d.n; ++ni) {
            const std::int64_t base = (static_cast<std::int64_t>(ni) * d.c + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
              const real gy = node.grad[static_cast<std::size_t>(base + i)];
              db += static_cast<double>(gy);
              dg += static_cast<double>(gy) * static_cast<double>((in[static_cast<std::size_t>(base + i)] - m) * is);
            }
          }
          if (tg.requires_grad()) tg.grad()[static_cast<std::size_t>(c)] += static_cast<real>(dg);
          if (tb.requires_grad()) tb.grad()[static_cast<std::size_t>(c)] += static_cast<real>(db);
          if (tx.requires_grad()) {
            auto gx = tx.grad();
            const real scale = g * is;
            for (int ni = 0; ni < d.n; ++ni) {
              const std::int64_t base = (static_cast<std::int64_t>(ni) * d.c + c) * plane;
              for (std::int64_t i = 0; i < plane; ++i) {
                gx[static_cast<std::size_t>(base + i)] +=
                    node.grad[static_cast<std::size_t>(base + i)] * scale;
              }
            }
          }
        }
      });
}

}  // namespace

Tensor batch_norm(const Tensor& x, NormLayerState& state, NormMode mode) {
  if (state.kind != NormKind::BatchNorm) throw ShapeError("batch_norm: state is not BatchNorm");
  const BnDims d = bn_dims(x);
  if (d.c != state.channels) throw ShapeError("batch_norm: channel mismatch");
  for (const double v : state.running_var) {
    if (v < 0.0) throw NumericalError("batch_norm: negative running variance");
  }

  if (mode == NormMode::Eval || mode == NormMode::OdrCollect) {
    if (mode == NormMode::OdrCollect) {
      // Per-image statistics pooled for the deferred running-average update.
      const std::int64_t plane = static_cast<std::int64_t>(d.h) * d.w;
      if (state.stream.mean.empty()) state.stream.reset(static_cast<std::size_t>(d.c));
      for (int ni = 0; ni < d.n; ++ni) {
        std::vector<double> m, v;
        channel_stats(x, d, m, v, ni, ni + 1);
        state.stream.add_image(m, v, plane);
      }
    }
    std::vector<double> inv_std(static_cast<std::size_t>(d.c));
    for (int c = 0; c < d.c; ++c) {
      inv_std[static_cast<std::size_t>(c)] =
          1.0 / std::sqrt(state.running_var[static_cast<std::size_t>(c)] + state.eps);
    }
    return affine_norm_fixed(x, state.gamma, state.beta, state.running_mean, std::move(inv_std));
  }

  // Train mode: batch statistics + running update.
  std::vector<double> mean, var;
  channel_stats(x, d, mean, var);
  for (int c = 0; c < d.c; ++c) {
    state.running_mean[static_cast<std::size_t>(c)] =
        state.momentum * state.running_mean[static_cast<std::size_t>(c)] +
        (1.0 - state.momentum) * mean[static_cast<std::size_t>(c)];
    state.running_var[static_cast<std::size_t>(c)] =
        state.momentum * state.running_var[static_cast<std::size_t>(c)] +
        (1.0 - state.momentum) * var[static_cast<std::size_t>(c)];
  }

  const std::int64_t plane = static_cast<std::int64_t>(d.h) * d.w;
  std::vector<double> inv_std(static_cast<std::size_t>(d.c));
  for (int c = 0; c < d.c; ++c) {
    inv_std[static_cast<std::size_t>(c)] = 1.0 / std::sqrt(var[static_cast<std::size_t>(c)] + state.eps);
  }
  std::vector<real> out(static_cast<std::size_t>(x.numel()));
  const auto in = x.data();
  parallel_for(static_cast<std::size_t>(d.n) * d.c, [&](std::size_t p) {
    const std::size_t c = p % static_cast<std::size_t>(d.c);
    const real g = state.gamma.data()[c];
    const real b = state.beta.data()[c];
    const real m = static_cast<real>(mean[c]);
    const real is = static_cast<real>(inv_std[c]);
    const real* src = in.data() + p * plane;
    real* dst = out.data() + p * plane;
    for (std::int64_t i = 0; i < plane; ++i) dst[i] = (src[i] - m) * is * g + b;
  });

  Tensor tx = x, tg = state.gamma, tb = state.beta;
  auto mean_h = std::make_shared<std::vector<double>>(std::move(mean));
  auto istd_h = std::make_shared<std::vector<double>>(std::move(inv_std));
  return Tensor::make_op(
      x.shape(), std::move(out), {x, state.gamma, state.beta},
      [tx, tg, tb, mean_h, istd_h, d, plane](detail::Node& node) mutable {
        // Classic batch-stat backward; reductions run per channel.
        const auto in = tx.data();
        const double count = static_cast<double>(d.per_channel);
        const bool need_dx = tx.requires_grad();
        auto gx = need_dx ? tx.grad() : std::span<real>();
        std::vector<double> dgs(static_cast<std::size_t>(d.c), 0.0);
        std::vector<double> dbs(static_cast<std::size_t>(d.c), 0.0);
        parallel_for(static_cast<std::size_t>(d.c), [&](std::size_t c) {
          const real m = static_cast<real>((*mean_h)[c]);
          const real is = static_cast<real>((*istd_h)[c]);
          double sum_g = 0.0, sum_gx = 0.0;
          for (int ni = 0; ni < d.n; ++ni) {
            const std::int64_t base = (static_cast<std::int64_t>(ni) * d.c + static_cast<std::int64_t>(c)) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
              const double gy = static_cast<double>(node.grad[static_cast<std::size_t>(base + i)]);
              const double xh = static_cast<double>((in[static_cast<std::size_t>(base + i)] - m) * is);
              sum_g += gy;
              sum_gx += gy * xh;
            }
          }
          dbs[c] = sum_g;
          dgs[c] = sum_gx;
          if (need_dx) {
            const double g = static_cast<double>(tg.data()[c]);
            const double mean_g = sum_g / count;
            const double mean_gx = sum_gx / count;
            for (int ni = 0; ni < d.n; ++ni) {
              const std::int64_t base = (static_cast<std::int64_t>(ni) * d.c + static_cast<std::int64_t>(c)) * plane;
              for (std::int64_t i = 0; i < plane; ++i) {
                const double gy = static_cast<double>(node.grad[static_cast<std::size_t>(base + i)]);
                const double xh = static_cast<double>((in[static_cast<std::size_t>(base + i)] - m) * is);
                gx[static_cast<std::size_t>(base + i)] +=
                    static_cast<real>(g * static_cast<double>(is) * (gy - mean_g - xh * mean_gx));
              }
            }
          }
        });
        if (tg.requires_grad()) {
          auto gg = tg.grad();
          for (int c = 0; c < d.c; ++c) gg[static_cast<std::size_t>(c)] += static_cast<real>(dgs[static_cast<std::size_t>(c)]);
        }
        if (tb.requires_grad()) {
          auto gb = tb.grad();
          for (int c = 0; c < d.c; ++c) gb[static_cast<std::size_t>(c)] += static_cast<real>(dbs[static_cast<std::size_t>(c)]);
        }
      });
}

Tensor group_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, int groups,
                  double eps) {
  const BnDims d = bn_dims(x);
  if (groups <= 0 || d.c % groups != 0) {
    throw ShapeError("group_norm: channels " + std::to_string(d.c) + " not divisible by groups " +
                     std::to_string(groups));
  }
  const int cpg = d.c / groups;
  const std::int64_t plane = static_cast<std::int64_t>(d.h) * d.w;
  const std::int64_t group_count = cpg * plane;

  const std::size_t ng = static_cast<std::size_t>(d.n) * groups;
  std::vector<double> mean(ng, 0.0), inv_std(ng, 0.0);
  const auto in = x.data();
  parallel_for(ng, [&](std::size_t p) {
    const std::size_t ni = p / static_cast<std::size_t>(groups);
    const std::size_t gi = p % static_cast<std::size_t>(groups);
    double s = 0.0, sq = 0.0;
    const real* base = in.data() + (ni * d.c + gi * cpg) * plane;
    for (std::int64_t i = 0; i < group_count; ++i) {
      const double v = static_cast<double>(base[i]);
      s += v;
      sq += v * v;
    }
    const double m = s / static_cast<double>(group_count);
    mean[p] = m;
    inv_std[p] = 1.0 / std::sqrt(std::max(0.0, sq / static_cast<double>(group_count) - m * m) + eps);
  });

  std::vector<real> out(static_cast<std::size_t>(x.numel()));
  parallel_for(ng, [&](std::size_t p) {
    const std::size_t ni = p / static_cast<std::size_t>(groups);
    const std::size_t gi = p % static_cast<std::size_t>(groups);
    const real m = static_cast<real>(mean[p]);
    const real is = static_cast<real>(inv_std[p]);
    for (int cc = 0; cc < cpg; ++cc) {
      const std::size_t c = gi * cpg + static_cast<std::size_t>(cc);
      const real g = gamma.data()[c];
      const real b = beta.data()[c];
      const real* src = in.data() + (ni * d.c + c) * plane;
      real* dst = out.data() + (ni * d.c + c) * plane;
      for (std::int64_t i = 0; i < plane; ++i) dst[i] = (src[i] - m) * is * g + b;
    }
  });

  Tensor tx = x, tg = gamma, tb = beta;
  auto mean_h = std::make_shared<std::vector<double>>(std::move(mean));
  auto istd_h = std::make_shared<std::vector<double>>(std::move(inv_std));
  return Tensor::make_op(
      x.shape(), std::move(out), {x, gamma, beta},
      [tx, tg, tb, mean_h, istd_h, d, groups, cpg, plane, group_count](detail::Node& node) mutable {
        const auto in = tx.data();
        const bool need_dx = tx.requires_grad();
        auto gx = need_dx ? tx.grad() : std::span<real>();
        std::vector<double> dgs(static_cast<std::size_t>(d.c), 0.0);
        std::vector<double> dbs(static_cast<std::size_t>(d.c), 0.0);
        // Group reductions are per (n, group); channel grads reduced after.
        for (int ni = 0; ni < d.n; ++ni) {
          for (int gi = 0; gi < groups; ++gi) {
            const std::size_t p = static_cast<std::size_t>(ni) * groups + static_cast<std::size_t>(gi);
            const real m = static_cast<real>((*mean_h)[p]);
            const real is = static_cast<real>((*istd_h)[p]);
            double sum_h = 0.0, sum_hx = 0.0;
            for (int cc = 0; cc < cpg; ++cc) {
              const std::size_t c = static_cast<std::size_t>(gi) * cpg + static_cast<std::size_t>(cc);
              const double g = static_cast<double>(tg.data()[c]);
              const std::int64_t base = (static_cast<std::int64_t>(ni) * d.c + static_cast<std::int64_t>(c)) * plane;
              for (std::int64_t i = 0; i < plane; ++i) {
                const double gy = static_cast<double>(node.grad[static_cast<std::size_t>(base + i)]);
                const double xh = static_cast<double>((in[static_cast<std::size_t>(base + i)] - m) * is);
                dbs[c] += gy;
                dgs[c] += gy * xh;
                sum_h += gy * g;
                sum_hx += gy * g * xh;
              }
            }
            if (need_dx) {
              const double mean_h_d = sum_h / static_cast<double>(group_count);
              const double mean_hx = sum_hx / static_cast<double>(group_count);
              for (int cc = 0; cc < cpg; ++cc) {
                const std::size_t c = static_cast<std::size_t>(gi) * cpg + static_cast<std::size_t>(cc);
                const double g = static_cast<double>(tg.data()[c]);
                const std::int64_t base = (static_cast<std::int64_t>(ni) * d.c + static_cast<std::int64_t>(c)) * plane;
                for (std::int64_t i = 0; i < plane; ++i) {
                  const double gy = static_cast<double>(node.grad[static_cast<std::size_t>(base + i)]);
                  const double xh = static_cast<double>((in[static_cast<std::size_t>(base + i)] - m) * is);
                  gx[static_cast<std::size_t>(base + i)] += static_cast<real>(
                      static_cast<double>(is) * (gy * g - mean_h_d - xh * mean_hx));
                }
              }
            }
          }
        }
        if (tg.requires_grad()) {
          auto gg = tg.grad();
          for (int c = 0; c < d.c; ++c) gg[static_cast<std::size_t>(c)] += static_cast<real>(dgs[static_cast<std::size_t>(c)]);
        }
        if (tb.requires_grad()) {
          auto gb = tb.grad();
          for (int c = 0; c < d.c; ++c) gb[static_cast<std::size_t>(c)] += static_cast<real>(dbs[static_cast<std::size_t>(c)]);
        }
      });
}

Tensor norm_forward(const Tensor& x, NormLayerState& state, NormMode mode) {
  if (state.kind == NormKind::BatchNorm) return batch_norm(x, state, mode);
  return group_norm(x, state.gamma, state.beta, state.groups, state.eps);
}

SATPOSE_NS_END
