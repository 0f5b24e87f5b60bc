#pragma once

#include <cstddef>
#include <vector>

#include "aq/nn/tensor.hpp"

namespace aq::nn {

/**
 * Differentiable primitives.
 *
 * Every operation validates shapes (ShapeError names the offending shapes),
 * computes the forward value, and — when `tape` is non-null — records a
 * backward closure on it. Passing a null tape gives a plain forward pass.
 */

// Matrix product a[m,k] x b[k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b, Tape* tape);

// Per-channel spatial convolution. x[C,H,W], kernel[C,Kh,Kw], zero padding.
// Output channel c depends only on input channel c.
// H' = floor((H + 2*pad - Kh) / stride) + 1, likewise W'.
Tensor depthwise_conv(const Tensor& x, const Tensor& kernel, int stride, int pad, Tape* tape);

// 1x1 cross-channel convolution. x[C,H,W], w[N,C] -> [N,H,W].
Tensor pointwise_conv(const Tensor& x, const Tensor& w, Tape* tape);

// Mean over the spatial plane of each channel. x[C,H,W] -> [C].
Tensor global_avg_pool(const Tensor& x, Tape* tape);

// Channel-axis concatenation of [Ci,H,W] maps, in argument order.
// A single map is returned as-is.
Tensor dense_concat(const std::vector<Tensor>& maps, Tape* tape);

// Elementwise max(x, 0).
Tensor relu(const Tensor& x, Tape* tape);

// Affine map for vectors: w[m,n] * x[n] + b[m] -> [m].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b, Tape* tape);

// Adds b[c] to every row of x[r,c].
Tensor add_row_bias(const Tensor& x, const Tensor& b, Tape* tape);

// Column-wise concatenation: a[r,c1] | b[r,c2] -> [r,c1+c2].
Tensor concat_cols(const Tensor& a, const Tensor& b, Tape* tape);

// Stacks k vectors of length n into [k,n].
Tensor stack_rows(const std::vector<Tensor>& rows, Tape* tape);

// [r,c] -> [c,r].
Tensor transpose(const Tensor& x, Tape* tape);

// Mean over the batch of log-sum-exp(logits_i) - logits_i[label_i],
// stabilized by max subtraction. logits[B,classes], labels in [0, classes).
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<std::size_t>& labels,
                             Tape* tape);

// Mean squared difference over all elements; `target` is a constant.
Tensor mse_loss(const Tensor& pred, const Tensor& target, Tape* tape);

// Fixed-weight projection to a scalar: sum_i weights[i] * x[i].
Tensor weighted_sum(const Tensor& x, const std::vector<double>& weights, Tape* tape);

// Row-major softmax of one logit row (plain math helper, not recorded).
std::vector<double> softmax(const std::vector<double>& logits);

}  // namespace aq::nn
