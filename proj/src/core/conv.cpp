#include <cblas.h>

#include <cstring>
#include <mutex>

// Present in OpenBLAS; not declared by every cblas.h flavor.
extern "C" void openblas_set_num_threads(int num_threads);

#include "satpose/core/ops.hpp"
#include "satpose/util/errors.hpp"
#include "satpose/util/thread_pool.hpp"

SATPOSE_NS_BEGIN

namespace {

// Per-sample GEMMs run single-threaded inside our own task pool so results
// do not depend on the worker count.
void pin_blas_threads() {
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
}

struct ConvDims {
  int n, cin, h, w;
  int cout, k;
  int stride, pad;
  int ho, wo;
};

ConvDims conv_dims(const Shape& xs, const Shape& ws, int stride, int pad) {
  if (xs.size() != 4 || ws.size() != 4) throw ShapeError("conv2d: expected 4-d input and weight");
  ConvDims d;
  d.n = xs[0];
  d.cin = xs[1];
  d.h = xs[2];
  d.w = xs[3];
  d.cout = ws[0];
  d.k = ws[2];
  d.stride = stride;
  d.pad = pad;
  if (ws[1] != d.cin) {
    throw ShapeError("conv2d: weight expects " + std::to_string(ws[1]) + " input channels, got " +
                     std::to_string(d.cin));
  }
  if (ws[3] != d.k) throw ShapeError("conv2d: non-square kernel");
  if (d.k % 2 == 0) throw ShapeError("conv2d: kernel size must be odd");
  if (pad < 0) throw ShapeError("conv2d: negative padding");
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  d.ho = (d.h + 2 * pad - d.k) / stride + 1;
  d.wo = (d.w + 2 * pad - d.k) / stride + 1;
  if (d.ho <= 0 || d.wo <= 0) throw ShapeError("conv2d: empty output");
  return d;
}

// col is [cin*k*k, ho*wo] row-major.
void im2col(const real* x, const ConvDims& d, real* col) {
  const int l = d.ho * d.wo;
  for (int c = 0; c < d.cin; ++c) {
    for (int ky = 0; ky < d.k; ++ky) {
      for (int kx = 0; kx < d.k; ++kx) {
        real* row = col + (static_cast<std::size_t>(c) * d.k * d.k + ky * d.k + kx) * l;
        for (int oy = 0; oy < d.ho; ++oy) {
          const int iy = oy * d.stride - d.pad + ky;
          if (iy < 0 || iy >= d.h) {
            std::memset(row + oy * d.wo, 0, sizeof(real) * d.wo);
            continue;
          }
          const real* src = x + (static_cast<std::size_t>(c) * d.h + iy) * d.w;
          for (int ox = 0; ox < d.wo; ++ox) {
            const int ix = ox * d.stride - d.pad + kx;
            row[oy * d.wo + ox] = (ix >= 0 && ix < d.w) ? src[ix] : real(0);
          }
        }
      }
    }
  }
}

void col2im_add(const real* col, const ConvDims& d, real* dx) {
  const int l = d.ho * d.wo;
  for (int c = 0; c < d.cin; ++c) {
    for (int ky = 0; ky < d.k; ++ky) {
      for (int kx = 0; kx < d.k; ++kx) {
        const real* row = col + (static_cast<std::size_t>(c) * d.k * d.k + ky * d.k + kx) * l;
        for (int oy = 0; oy < d.ho; ++oy) {
          const int iy = oy * d.stride - d.pad + ky;
          if (iy < 0 || iy >= d.h) continue;
          real* dst = dx + (static_cast<std::size_t>(c) * d.h + iy) * d.w;
          for (int ox = 0; ox < d.wo; ++ox) {
            const int ix = ox * d.stride - d.pad + kx;
            if (ix >= 0 && ix < d.w) dst[ix] += row[oy * d.wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace

void gemm(bool trans_a, bool trans_b, int m, int n, int k, real alpha, const real* a, int lda,
          const real* b, int ldb, real beta, real* c, int ldc) {
  pin_blas_threads();
  const CBLAS_TRANSPOSE ta = trans_a ? CblasTrans : CblasNoTrans;
  const CBLAS_TRANSPOSE tb = trans_b ? CblasTrans : CblasNoTrans;
#ifdef SATPOSE_REAL64
  cblas_dgemm(CblasRowMajor, ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
#else
  cblas_sgemm(CblasRowMajor, ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
#endif
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad) {
  const ConvDims d = conv_dims(x.shape(), w.shape(), stride, pad);
  if (bias.defined() && bias.numel() != d.cout) throw ShapeError("conv2d: bias size mismatch");

  const int kk = d.cin * d.k * d.k;
  const int l = d.ho * d.wo;
  std::vector<real> out(static_cast<std::size_t>(d.n) * d.cout * l);

  parallel_for(static_cast<std::size_t>(d.n), [&](std::size_t ni) {
    std::vector<real> col(static_cast<std::size_t>(kk) * l);
    im2col(x.data().data() + ni * d.cin * d.h * d.w, d, col.data());
    real* dst = out.data() + ni * d.cout * l;
    gemm(false, false, d.cout, l, kk, real(1), w.data().data(), kk, col.data(), l, real(0), dst, l);
    if (bias.defined()) {
      for (int co = 0; co < d.cout; ++co) {
        const real b = bias.data()[static_cast<std::size_t>(co)];
        for (int i = 0; i < l; ++i) dst[co * l + i] += b;
      }
    }
  });

  Tensor tx = x, tw = w, tb = bias;
  return Tensor::make_op(
      {d.n, d.cout, d.ho, d.wo}, std::move(out), {x, w, bias}, [tx, tw, tb, d](detail::Node& node) mutable {
        const int kk = d.cin * d.k * d.k;
        const int l = d.ho * d.wo;
        const bool need_dx = tx.requires_grad();
        const bool need_dw = tw.requires_grad();
        const bool need_db = tb.defined() && tb.requires_grad();

        // Per-sample partials, reduced serially in sample order.
        std::vector<std::vector<real>> dw_parts;
        if (need_dw) dw_parts.assign(static_cast<std::size_t>(d.n), {});
        auto dx = need_dx ? tx.grad() : std::span<real>();

        parallel_for(static_cast<std::size_t>(d.n), [&](std::size_t ni) {
          std::vector<real> col(static_cast<std::size_t>(kk) * l);
          im2col(tx.data().data() + ni * d.cin * d.h * d.w, d, col.data());
          const real* dy = node.grad.data() + ni * d.cout * l;
          if (need_dw) {
            auto& part = dw_parts[ni];
            part.assign(static_cast<std::size_t>(d.cout) * kk, real(0));
            gemm(false, true, d.cout, kk, l, real(1), dy, l, col.data(), l, real(0), part.data(),
                 kk);
          }
          if (need_dx) {
            std::vector<real> dcol(static_cast<std::size_t>(kk) * l);
            gemm(true, false, kk, l, d.cout, real(1), tw.data().data(), kk, dy, l, real(0),
                 dcol.data(), l);
            col2im_add(dcol.data(), d, dx.data() + ni * d.cin * d.h * d.w);
          }
        });

        if (need_dw) {
          auto dw = tw.grad();
          for (const auto& part : dw_parts) {
            for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += part[i];
          }
        }
        if (need_db) {
          auto db = tb.grad();
          for (int ni = 0; ni < d.n; ++ni) {
            const real* dy = node.grad.data() + static_cast<std::size_t>(ni) * d.cout * l;
            for (int co = 0; co < d.cout; ++co) {
              double acc = 0.0;
              for (int i = 0; i < l; ++i) acc += static_cast<double>(dy[co * l + i]);
              db[static_cast<std::size_t>(co)] += static_cast<real>(acc);
            }
          }
        }
      });
}

std::vector<real> conv2d_direct(std::span<const real> x, const Shape& x_shape,
                                std::span<const real> w, const Shape& w_shape,
                                std::span<const real> bias, int stride, int pad) {
  const ConvDims d = conv_dims(x_shape, w_shape, stride, pad);
  std::vector<real> out(static_cast<std::size_t>(d.n) * d.cout * d.ho * d.wo);
  for (int ni = 0; ni < d.n; ++ni) {
    for (int co = 0; co < d.cout; ++co) {
      for (int oy = 0; oy < d.ho; ++oy) {
        for (int ox = 0; ox < d.wo; ++ox) {
          double acc = bias.empty() ? 0.0 : static_cast<double>(bias[static_cast<std::size_t>(co)]);
          for (int ci = 0; ci < d.cin; ++ci) {
            for (int ky = 0; ky < d.k; ++ky) {
              const int iy = oy * d.stride - d.pad + ky;
              if (iy < 0 || iy >= d.h) continue;
              for (int kx = 0; kx < d.k; ++kx) {
                const int ix = ox * d.stride - d.pad + kx;
                if (ix < 0 || ix >= d.w) continue;
                const real xv =
                    x[((static_cast<std::size_t>(ni) * d.cin + ci) * d.h + iy) * d.w + ix];
                const real wv =
                    w[((static_cast<std::size_t>(co) * d.cin + ci) * d.k + ky) * d.k + kx];
                acc += static_cast<double>(xv) * static_cast<double>(wv);
              }
            }
          }
          out[((static_cast<std::size_t>(ni) * d.cout + co) * d.ho + oy) * d.wo + ox] =
              static_cast<real>(acc);
        }
      }
    }
  }
  return out;
}

SATPOSE_NS_END
