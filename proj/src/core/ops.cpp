#include "satpose/core/ops.hpp"

#include <cmath>

#include "satpose/util/errors.hpp"
#include "satpose/util/thread_pool.hpp"

SATPOSE_NS_BEGIN

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

void axpy(std::span<real> out, std::span<const real> in, real c) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * in[i];
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<real> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.data()[i];
  Tensor ta = a, tb = b;
  return Tensor::make_op(a.shape(), std::move(out), {a, b}, [ta, tb](detail::Node& n) mutable {
    if (ta.requires_grad()) axpy(ta.grad(), n.grad, real(1));
    if (tb.requires_grad()) axpy(tb.grad(), n.grad, real(1));
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<real> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.data()[i];
  Tensor ta = a, tb = b;
  return Tensor::make_op(a.shape(), std::move(out), {a, b}, [ta, tb](detail::Node& n) mutable {
    if (ta.requires_grad()) axpy(ta.grad(), n.grad, real(1));
    if (tb.requires_grad()) axpy(tb.grad(), n.grad, real(-1));
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<real> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  Tensor ta = a, tb = b;
  return Tensor::make_op(a.shape(), std::move(out), {a, b}, [ta, tb](detail::Node& n) mutable {
    if (ta.requires_grad()) {
      auto g = ta.grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * tb.data()[i];
    }
    if (tb.requires_grad()) {
      auto g = tb.grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * ta.data()[i];
    }
  });
}

Tensor scale(const Tensor& a, real c) {
  std::vector<real> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
  Tensor ta = a;
  return Tensor::make_op(a.shape(), std::move(out), {a}, [ta, c](detail::Node& n) mutable {
    if (ta.requires_grad()) axpy(ta.grad(), n.grad, c);
  });
}

Tensor activation(const Tensor& x, Activation kind) {
  const auto n = static_cast<std::size_t>(x.numel());
  std::vector<real> out(n);
  const auto in = x.data();
  switch (kind) {
    case Activation::Relu:
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > real(0) ? in[i] : real(0);
      break;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < n; ++i) out[i] = real(1) / (real(1) + std::exp(-in[i]));
      break;
    case Activation::Swish:
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] / (real(1) + std::exp(-in[i]));
      break;
  }
  Tensor tx = x;
  return Tensor::make_op(x.shape(), std::move(out), {x}, [tx, kind](detail::Node& node) mutable {
    if (!tx.requires_grad()) return;
    auto g = tx.grad();
    const auto in = tx.data();
    switch (kind) {
      case Activation::Relu:
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (in[i] > real(0)) g[i] += node.grad[i];
        }
        break;
      case Activation::Sigmoid:
        for (std::size_t i = 0; i < g.size(); ++i) {
          const real s = node.values[i];
          g[i] += node.grad[i] * s * (real(1) - s);
        }
        break;
      case Activation::Swish:
        for (std::size_t i = 0; i < g.size(); ++i) {
          const real s = real(1) / (real(1) + std::exp(-in[i]));
          g[i] += node.grad[i] * (s + in[i] * s * (real(1) - s));
        }
        break;
    }
  });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (const real v : x.data()) acc += static_cast<double>(v);
  Tensor tx = x;
  return Tensor::make_op({1}, {static_cast<real>(acc)}, {x}, [tx](detail::Node& n) mutable {
    if (tx.requires_grad()) axpy(tx.grad(), std::span<const real>(n.grad), real(1));
  });
}

Tensor mean(const Tensor& x) {
  const real inv = real(1.0 / static_cast<double>(x.numel()));
  double acc = 0.0;
  for (const real v : x.data()) acc += static_cast<double>(v);
  Tensor tx = x;
  return Tensor::make_op({1}, {static_cast<real>(acc) * inv}, {x},
                         [tx, inv](detail::Node& n) mutable {
                           if (tx.requires_grad()) axpy(tx.grad(), std::span<const real>(n.grad), inv);
                         });
}

Tensor reshape(const Tensor& x, Shape new_shape) {
  if (numel_of(new_shape) != x.numel()) {
    throw ShapeError("reshape: numel mismatch " + shape_str(x.shape()) + " -> " +
                     shape_str(new_shape));
  }
  std::vector<real> out(x.data().begin(), x.data().end());
  Tensor tx = x;
  return Tensor::make_op(std::move(new_shape), std::move(out), {x}, [tx](detail::Node& n) mutable {
    if (tx.requires_grad()) axpy(tx.grad(), n.grad, real(1));
  });
}

Tensor anchors_to_rows(const Tensor& x, int per_cell, int d) {
  if (x.shape().size() != 4) throw ShapeError("anchors_to_rows: expected 4-d input");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (c != per_cell * d) throw ShapeError("anchors_to_rows: channel count mismatch");
  const int rows = h * w * per_cell;
  std::vector<real> out(static_cast<std::size_t>(n) * rows * d);
  const auto in = x.data();
  const auto src_index = [=](int ni, int ci, int yi, int xi) {
    return ((static_cast<std::size_t>(ni) * c + ci) * h + yi) * w + xi;
  };
  for (int ni = 0; ni < n; ++ni) {
    std::size_t o = static_cast<std::size_t>(ni) * rows * d;
    for (int yi = 0; yi < h; ++yi) {
      for (int xi = 0; xi < w; ++xi) {
        for (int a = 0; a < per_cell; ++a) {
          for (int di = 0; di < d; ++di) {
            out[o++] = in[src_index(ni, a * d + di, yi, xi)];
          }
        }
      }
    }
  }
  Tensor tx = x;
  return Tensor::make_op({n, rows, d}, std::move(out), {x},
                         [tx, per_cell, d](detail::Node& node) mutable {
                           if (!tx.requires_grad()) return;
                           auto g = tx.grad();
                           const int n = tx.dim(0), c = tx.dim(1), h = tx.dim(2), w = tx.dim(3);
                           const int rows = h * w * per_cell;
                           for (int ni = 0; ni < n; ++ni) {
                             std::size_t o = static_cast<std::size_t>(ni) * rows * d;
                             for (int yi = 0; yi < h; ++yi) {
                               for (int xi = 0; xi < w; ++xi) {
                                 for (int a = 0; a < per_cell; ++a) {
                                   for (int di = 0; di < d; ++di) {
                                     g[((static_cast<std::size_t>(ni) * c + a * d + di) * h + yi) * w +
                                       xi] += node.grad[o++];
                                   }
                                 }
                               }
                             }
                           }
                         });
}

Tensor concat_rows(const std::vector<Tensor>& blocks) {
  if (blocks.empty()) throw ShapeError("concat_rows: empty input");
  const int n = blocks[0].dim(0);
  const int d = blocks[0].dim(2);
  int rows = 0;
  for (const auto& b : blocks) {
    if (b.shape().size() != 3 || b.dim(0) != n || b.dim(2) != d) {
      throw ShapeError("concat_rows: incompatible block shapes");
    }
    rows += b.dim(1);
  }
  std::vector<real> out(static_cast<std::size_t>(n) * rows * d);
  for (int ni = 0; ni < n; ++ni) {
    std::size_t o = static_cast<std::size_t>(ni) * rows * d;
    for (const auto& b : blocks) {
      const std::size_t len = static_cast<std::size_t>(b.dim(1)) * d;
      const auto src = b.data().subspan(static_cast<std::size_t>(ni) * len, len);
      std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(o));
      o += len;
    }
  }
  std::vector<Tensor> held = blocks;
  return Tensor::make_op({n, rows, d}, std::move(out), blocks,
                         [held, n, d, rows](detail::Node& node) mutable {
                           for (int ni = 0; ni < n; ++ni) {
                             std::size_t o = static_cast<std::size_t>(ni) * rows * d;
                             for (auto& b : held) {
                               const std::size_t len = static_cast<std::size_t>(b.dim(1)) * d;
                               if (b.requires_grad()) {
                                 auto g = b.grad().subspan(static_cast<std::size_t>(ni) * len, len);
                                 for (std::size_t i = 0; i < len; ++i) g[i] += node.grad[o + i];
                               }
                               o += len;
                             }
                           }
                         });
}

Tensor gather_rows(const Tensor& x, int batch_index, const std::vector<int>& rows) {
  if (x.shape().size() != 3) throw ShapeError("gather_rows: expected [N,R,D]");
  const int r = x.dim(1), d = x.dim(2);
  const int m = static_cast<int>(rows.size());
  std::vector<real> out(static_cast<std::size_t>(m) * d);
  const auto in = x.data();
  const std::size_t base = static_cast<std::size_t>(batch_index) * r * d;
  for (int i = 0; i < m; ++i) {
    const int row = rows[static_cast<std::size_t>(i)];
    if (row < 0 || row >= r) throw ShapeError("gather_rows: row out of range");
    for (int di = 0; di < d; ++di) {
      out[static_cast<std::size_t>(i) * d + di] = in[base + static_cast<std::size_t>(row) * d + di];
    }
  }
  Tensor tx = x;
  std::vector<int> held_rows = rows;
  return Tensor::make_op({m, d}, std::move(out), {x},
                         [tx, batch_index, held_rows, d](detail::Node& node) mutable {
                           if (!tx.requires_grad()) return;
                           auto g = tx.grad();
                           const std::size_t base =
                               static_cast<std::size_t>(batch_index) * tx.dim(1) * d;
                           for (std::size_t i = 0; i < held_rows.size(); ++i) {
                             const std::size_t row = static_cast<std::size_t>(held_rows[i]);
                             for (int di = 0; di < d; ++di) {
                               g[base + row * d + di] += node.grad[i * d + di];
                             }
                           }
                         });
}

Tensor max_pool2x2(const Tensor& x) {
  if (x.shape().size() != 4) throw ShapeError("max_pool2x2: expected 4-d input");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 || w % 2) throw ShapeError("max_pool2x2: odd spatial size");
  const int ho = h / 2, wo = w / 2;
  std::vector<real> out(static_cast<std::size_t>(n) * c * ho * wo);
  std::vector<std::int32_t> argmax(out.size());
  const auto in = x.data();
  const std::size_t planes = static_cast<std::size_t>(n) * c;
  parallel_for(planes, [&](std::size_t p) {
    const real* src = in.data() + p * h * w;
    real* dst = out.data() + p * ho * wo;
    std::int32_t* arg = argmax.data() + p * ho * wo;
    for (int y = 0; y < ho; ++y) {
      for (int xo = 0; xo < wo; ++xo) {
        int best = (2 * y) * w + 2 * xo;
        real bv = src[best];
        const int candidates[3] = {(2 * y) * w + 2 * xo + 1, (2 * y + 1) * w + 2 * xo,
                                   (2 * y + 1) * w + 2 * xo + 1};
        for (const int idx : candidates) {
          if (src[idx] > bv) {
            bv = src[idx];
            best = idx;
          }
        }
        dst[y * wo + xo] = bv;
        arg[y * wo + xo] = best;
      }
    }
  });
  Tensor tx = x;
  auto arg_holder = std::make_shared<std::vector<std::int32_t>>(std::move(argmax));
  return Tensor::make_op({n, c, ho, wo}, std::move(out), {x},
                         [tx, arg_holder, ho, wo, h, w](detail::Node& node) mutable {
                           if (!tx.requires_grad()) return;
                           auto g = tx.grad();
                           const auto& arg = *arg_holder;
                           const std::size_t planes = arg.size() / (static_cast<std::size_t>(ho) * wo);
                           for (std::size_t p = 0; p < planes; ++p) {
                             for (int i = 0; i < ho * wo; ++i) {
                               g[p * h * w + static_cast<std::size_t>(arg[p * ho * wo + i])] +=
                                   node.grad[p * ho * wo + i];
                             }
                           }
                         });
}

Tensor upsample_nearest2x(const Tensor& x) {
  if (x.shape().size() != 4) throw ShapeError("upsample_nearest2x: expected 4-d input");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int ho = h * 2, wo = w * 2;
  std::vector<real> out(static_cast<std::size_t>(n) * c * ho * wo);
  const auto in = x.data();
  const std::size_t planes = static_cast<std::size_t>(n) * c;
  parallel_for(planes, [&](std::size_t p) {
    const real* src = in.data() + p * h * w;
    real* dst = out.data() + p * ho * wo;
    for (int y = 0; y < ho; ++y) {
      for (int xo = 0; xo < wo; ++xo) dst[y * wo + xo] = src[(y / 2) * w + xo / 2];
    }
  });
  Tensor tx = x;
  return Tensor::make_op({n, c, ho, wo}, std::move(out), {x},
                         [tx, h, w, ho, wo](detail::Node& node) mutable {
                           if (!tx.requires_grad()) return;
                           auto g = tx.grad();
                           const std::size_t planes = g.size() / (static_cast<std::size_t>(h) * w);
                           for (std::size_t p = 0; p < planes; ++p) {
                             const real* ng = node.grad.data() + p * ho * wo;
                             real* gp = g.data() + p * h * w;
                             for (int y = 0; y < ho; ++y) {
                               for (int xo = 0; xo < wo; ++xo) {
                                 gp[(y / 2) * w + xo / 2] += ng[y * wo + xo];
                               }
                             }
                           }
                         });
}

SATPOSE_NS_END
