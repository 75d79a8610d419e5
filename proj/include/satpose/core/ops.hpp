#pragma once

#include <vector>

#include "satpose/core/tensor.hpp"

SATPOSE_NS_BEGIN

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, real c);

enum class Activation { Relu, Swish, Sigmoid };
Tensor activation(const Tensor& x, Activation kind);
inline Tensor relu(const Tensor& x) { return activation(x, Activation::Relu); }
inline Tensor swish(const Tensor& x) { return activation(x, Activation::Swish); }
inline Tensor sigmoid(const Tensor& x) { return activation(x, Activation::Sigmoid); }

// ---- reductions ----
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// ---- structural ----
Tensor reshape(const Tensor& x, Shape new_shape);
// [N, A*D, H, W] -> [N, H*W*A, D]; anchor index varies fastest within a cell.
Tensor anchors_to_rows(const Tensor& x, int per_cell, int d);
// Concatenate along dim 1 of [N, R_i, D] blocks.
Tensor concat_rows(const std::vector<Tensor>& blocks);
// Select rows of a [N, R, D] tensor for a fixed batch index -> [M, D].
Tensor gather_rows(const Tensor& x, int batch_index, const std::vector<int>& rows);

// ---- convolution & spatial ----
// x: [N,Cin,H,W], w: [Cout,Cin,k,k], odd k, pad >= 0. Optional bias [Cout].
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad);

// Reference path: direct six-nested-loop evaluation (no graph). Used as the
// oracle the im2col path is checked against.
std::vector<real> conv2d_direct(std::span<const real> x, const Shape& x_shape,
                                std::span<const real> w, const Shape& w_shape,
                                std::span<const real> bias, int stride, int pad);

Tensor max_pool2x2(const Tensor& x);         // [N,C,H,W] -> [N,C,H/2,W/2]
Tensor upsample_nearest2x(const Tensor& x);  // [N,C,H,W] -> [N,C,2H,2W]

// Single-threaded row-major GEMM: C = alpha * op(A) * op(B) + beta * C.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, real alpha, const real* a, int lda,
          const real* b, int ldb, real beta, real* c, int ldc);

SATPOSE_NS_END
