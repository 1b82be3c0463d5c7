#pragma once

#include <vector>

#include "colt/autograd.hpp"
#include "colt/tensor.hpp"

namespace colt {

// Forward operations. Each records its backward closure on the active tape
// when some input requires a gradient; without an active tape they evaluate
// plainly (inference mode). Reductions accumulate in double.

Tensor matmul(const Tensor& a, const Tensor& b);  // [MxK]x[KxN] -> [MxN]

/// Cross-correlation (no kernel flip). input [B,C,H,W], kernel [F,C,k,k].
Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding);

Tensor relu(const Tensor& x);
Tensor max_pool2d(const Tensor& x, int kernel, int stride);
Tensor global_avg_pool(const Tensor& x);  // [B,C,H,W] -> [B,C]

Tensor add(const Tensor& a, const Tensor& b);  // elementwise, same shape
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise, same shape
Tensor add_scalar(const Tensor& x, float c);
Tensor sum(const Tensor& x);                   // -> scalar [1]
Tensor reshape(const Tensor& x, Shape shape);

Tensor add_row_bias(const Tensor& x, const Tensor& bias);      // [R,C] + [C]
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);  // [B,C,H,W] + [C]

/// Per-batch channel normalization (no running statistics).
Tensor batch_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                    float eps = 1e-5f);

/// Mean cross-entropy over the batch, max-stabilized. logits [B,K],
/// labels in [0,K).
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace colt
