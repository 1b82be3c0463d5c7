#include "colt/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "colt/error.hpp"

namespace colt {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

bool tracing(std::initializer_list<const Tensor*> inputs) {
  if (!Tape::active()) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

void check_rank(const Tensor& t, int64_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     " tensor, got " + shape_str(t.shape()));
  }
}

// Unrolls one image into a [C*k*k, Ho*Wo] patch matrix; out-of-range taps
// read as zero.
void im2col(const float* img, int64_t C, int64_t H, int64_t W, int64_t k,
            int64_t stride, int64_t pad, int64_t Ho, int64_t Wo, float* cols) {
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t ki = 0; ki < k; ++ki) {
      for (int64_t kj = 0; kj < k; ++kj) {
        float* row = cols + ((c * k + ki) * k + kj) * (Ho * Wo);
        for (int64_t oh = 0; oh < Ho; ++oh) {
          const int64_t ih = oh * stride + ki - pad;
          float* dst = row + oh * Wo;
          if (ih < 0 || ih >= H) {
            std::fill(dst, dst + Wo, 0.0f);
            continue;
          }
          const float* src = img + (c * H + ih) * W;
          for (int64_t ow = 0; ow < Wo; ++ow) {
            const int64_t iw = ow * stride + kj - pad;
            dst[ow] = (iw >= 0 && iw < W) ? src[iw] : 0.0f;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters patch-matrix gradients back onto the image.
void col2im_add(const float* cols, int64_t C, int64_t H, int64_t W, int64_t k,
                int64_t stride, int64_t pad, int64_t Ho, int64_t Wo, float* img) {
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t ki = 0; ki < k; ++ki) {
      for (int64_t kj = 0; kj < k; ++kj) {
        const float* row = cols + ((c * k + ki) * k + kj) * (Ho * Wo);
        for (int64_t oh = 0; oh < Ho; ++oh) {
          const int64_t ih = oh * stride + ki - pad;
          if (ih < 0 || ih >= H) continue;
          float* dst = img + (c * H + ih) * W;
          const float* src = row + oh * Wo;
          for (int64_t ow = 0; ow < Wo; ++ow) {
            const int64_t iw = ow * stride + kj - pad;
            if (iw >= 0 && iw < W) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_rank(a, 2, "matmul");
  check_rank(b, 2, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
  const int64_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
  Tensor out = Tensor::zeros({M, N});
  CMapMat A(a.data().data(), M, K);
  CMapMat B(b.data().data(), K, N);
  MapMat(out.data().data(), M, N).noalias() = A * B;

  if (tracing({&a, &b})) {
    out.set_requires_grad(true);
    Tensor ta = a, tb = b, to = out;
    Tape::active()->record("matmul", [ta, tb, to, M, K, N]() mutable {
      if (!to.has_grad()) return;
      CMapMat dC(to.grad().data(), M, N);
      if (ta.requires_grad()) {
        CMapMat B(tb.data().data(), K, N);
        MapMat(ta.grad().data(), M, K).noalias() += dC * B.transpose();
      }
      if (tb.requires_grad()) {
        CMapMat A(ta.data().data(), M, K);
        MapMat(tb.grad().data(), K, N).noalias() += A.transpose() * dC;
      }
    });
  }
  return out;
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding) {
  check_rank(input, 4, "conv2d");
  check_rank(kernel, 4, "conv2d");
  if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");
  if (padding < 0) throw ConfigError("conv2d: padding must be >= 0");
  const int64_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const int64_t F = kernel.dim(0), k = kernel.dim(2);
  if (kernel.dim(1) != C) {
    throw ShapeError("conv2d: kernel channels " + shape_str(kernel.shape()) +
                     " do not match input " + shape_str(input.shape()));
  }
  if (kernel.dim(3) != k) throw ShapeError("conv2d: kernel must be square, got " + shape_str(kernel.shape()));
  if (k > H + 2 * padding || k > W + 2 * padding) {
    throw ShapeError("conv2d: kernel " + shape_str(kernel.shape()) +
                     " exceeds padded input " + shape_str(input.shape()));
  }
  if ((H + 2 * padding - k) % stride != 0 || (W + 2 * padding - k) % stride != 0) {
    throw ConfigError("conv2d: non-integral output size for input " + shape_str(input.shape()) +
                      ", kernel " + shape_str(kernel.shape()) + ", stride " +
                      std::to_string(stride) + ", padding " + std::to_string(padding));
  }
  const int64_t Ho = (H + 2 * padding - k) / stride + 1;
  const int64_t Wo = (W + 2 * padding - k) / stride + 1;
  const int64_t patch = C * k * k;

  Tensor out = Tensor::zeros({B, F, Ho, Wo});
  std::vector<float> cols(static_cast<size_t>(patch * Ho * Wo));
  CMapMat Km(kernel.data().data(), F, patch);
  for (int64_t b = 0; b < B; ++b) {
    im2col(input.data().data() + b * C * H * W, C, H, W, k, stride, padding, Ho, Wo,
           cols.data());
    CMapMat Cm(cols.data(), patch, Ho * Wo);
    MapMat(out.data().data() + b * F * Ho * Wo, F, Ho * Wo).noalias() = Km * Cm;
  }

  if (tracing({&input, &kernel})) {
    out.set_requires_grad(true);
    Tensor tin = input, tk = kernel, to = out;
    const int64_t s = stride, p = padding;
    Tape::active()->record("conv2d", [tin, tk, to, B, C, H, W, F, k, s, p, Ho, Wo,
                                      patch]() mutable {
      if (!to.has_grad()) return;
      std::vector<float> cols(static_cast<size_t>(patch * Ho * Wo));
      std::vector<float> dcols;
      if (tin.requires_grad()) dcols.resize(static_cast<size_t>(patch * Ho * Wo));
      for (int64_t b = 0; b < B; ++b) {
        CMapMat dO(to.grad().data() + b * F * Ho * Wo, F, Ho * Wo);
        if (tk.requires_grad()) {
          im2col(tin.data().data() + b * C * H * W, C, H, W, k, s, p, Ho, Wo, cols.data());
          CMapMat Cm(cols.data(), patch, Ho * Wo);
          MapMat(tk.grad().data(), F, patch).noalias() += dO * Cm.transpose();
        }
        if (tin.requires_grad()) {
          CMapMat Km(tk.data().data(), F, patch);
          MapMat(dcols.data(), patch, Ho * Wo).noalias() = Km.transpose() * dO;
          col2im_add(dcols.data(), C, H, W, k, s, p, Ho, Wo,
                     tin.grad().data() + b * C * H * W);
        }
      }
    });
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const auto in = x.data();
  auto o = out.data();
  for (int64_t i = 0; i < x.numel(); ++i) o[i] = in[i] > 0.0f ? in[i] : 0.0f;

  if (tracing({&x})) {
    out.set_requires_grad(true);
    Tensor tx = x, to = out;
    Tape::active()->record("relu", [tx, to]() mutable {
      if (!to.has_grad() || !tx.requires_grad()) return;
      auto dx = tx.grad();
      const auto dy = to.grad();
      const auto in = tx.data();
      for (int64_t i = 0; i < tx.numel(); ++i) {
        if (in[i] > 0.0f) dx[i] += dy[i];
      }
    });
  }
  return out;
}

Tensor max_pool2d(const Tensor& x, int kernel, int stride) {
  check_rank(x, 4, "max_pool2d");
  if (kernel < 1 || stride < 1) throw ConfigError("max_pool2d: kernel and stride must be >= 1");
  const int64_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H < kernel || W < kernel) {
    throw ShapeError("max_pool2d: window " + std::to_string(kernel) + " exceeds input " +
                     shape_str(x.shape()));
  }
  const int64_t Ho = (H - kernel) / stride + 1;
  const int64_t Wo = (W - kernel) / stride + 1;
  Tensor out = Tensor::zeros({B, C, Ho, Wo});
  // Flat input index of each window maximum; first hit wins on ties.
  std::vector<int64_t> argmax(static_cast<size_t>(out.numel()));
  const auto in = x.data();
  auto o = out.data();
  int64_t oi = 0;
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t c = 0; c < C; ++c) {
      const int64_t base = (b * C + c) * H * W;
      for (int64_t oh = 0; oh < Ho; ++oh) {
        for (int64_t ow = 0; ow < Wo; ++ow, ++oi) {
          float best = -std::numeric_limits<float>::infinity();
          int64_t best_idx = -1;
          for (int64_t ki = 0; ki < kernel; ++ki) {
            const int64_t row = base + (oh * stride + ki) * W + ow * stride;
            for (int64_t kj = 0; kj < kernel; ++kj) {
              if (in[row + kj] > best) {
                best = in[row + kj];
                best_idx = row + kj;
              }
            }
          }
          o[oi] = best;
          argmax[static_cast<size_t>(oi)] = best_idx;
        }
      }
    }
  }

  if (tracing({&x})) {
    out.set_requires_grad(true);
    Tensor tx = x, to = out;
    Tape::active()->record("max_pool2d", [tx, to, argmax = std::move(argmax)]() mutable {
      if (!to.has_grad() || !tx.requires_grad()) return;
      auto dx = tx.grad();
      const auto dy = to.grad();
      for (int64_t i = 0; i < to.numel(); ++i) {
        dx[argmax[static_cast<size_t>(i)]] += dy[i];
      }
    });
  }
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  check_rank(x, 4, "global_avg_pool");
  const int64_t B = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  Tensor out = Tensor::zeros({B, C});
  const auto in = x.data();
  auto o = out.data();
  for (int64_t bc = 0; bc < B * C; ++bc) {
    double acc = 0.0;
    const float* src = in.data() + bc * HW;
    for (int64_t i = 0; i < HW; ++i) acc += src[i];
    o[bc] = static_cast<float>(acc / static_cast<double>(HW));
  }

  if (tracing({&x})) {
    out.set_requires_grad(true);
    Tensor tx = x, to = out;
    Tape::active()->record("global_avg_pool", [tx, to, B, C, HW]() mutable {
      if (!to.has_grad() || !tx.requires_grad()) return;
      auto dx = tx.grad();
      const auto dy = to.grad();
      const float inv = 1.0f / static_cast<float>(HW);
      for (int64_t bc = 0; bc < B * C; ++bc) {
        const float g = dy[bc] * inv;
        float* dst = dx.data() + bc * HW;
        for (int64_t i = 0; i < HW; ++i) dst[i] += g;
      }
    });
  }
  return out;
}

namespace {

Tensor elementwise_binary(const Tensor& a, const Tensor& b, bool is_mul) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(is_mul ? "mul" : "add") + ": shapes differ, " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor out = Tensor::zeros(a.shape());
  const auto pa = a.data();
  const auto pb = b.data();
  auto o = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) o[i] = is_mul ? pa[i] * pb[i] : pa[i] + pb[i];

  if (tracing({&a, &b})) {
    out.set_requires_grad(true);
    Tensor ta = a, tb = b, to = out;
    Tape::active()->record(is_mul ? "mul" : "add", [ta, tb, to, is_mul]() mutable {
      if (!to.has_grad()) return;
      const auto dy = to.grad();
      if (ta.requires_grad()) {
        auto da = ta.grad();
        const auto pb = tb.data();
        for (int64_t i = 0; i < ta.numel(); ++i) da[i] += is_mul ? dy[i] * pb[i] : dy[i];
      }
      if (tb.requires_grad()) {
        auto db = tb.grad();
        const auto pa = ta.data();
        for (int64_t i = 0; i < tb.numel(); ++i) db[i] += is_mul ? dy[i] * pa[i] : dy[i];
      }
    });
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return elementwise_binary(a, b, false); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise_binary(a, b, true); }

Tensor add_scalar(const Tensor& x, float c) {
  Tensor out = Tensor::zeros(x.shape());
  const auto in = x.data();
  auto o = out.data();
  for (int64_t i = 0; i < x.numel(); ++i) o[i] = in[i] + c;
  if (tracing({&x})) {
    out.set_requires_grad(true);
    Tensor tx = x, to = out;
    Tape::active()->record("add_scalar", [tx, to]() mutable {
      if (!to.has_grad() || !tx.requires_grad()) return;
      auto dx = tx.grad();
      const auto dy = to.grad();
      for (int64_t i = 0; i < tx.numel(); ++i) dx[i] += dy[i];
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (float v : x.data()) acc += v;
  Tensor out = Tensor::scalar(static_cast<float>(acc));
  if (tracing({&x})) {
    out.set_requires_grad(true);
    Tensor tx = x, to = out;
    Tape::active()->record("sum", [tx, to]() mutable {
      if (!to.has_grad() || !tx.requires_grad()) return;
      const float g = to.grad()[0];
      auto dx = tx.grad();
      for (int64_t i = 0; i < tx.numel(); ++i) dx[i] += g;
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  Tensor out = Tensor::from_vector(std::move(shape),
                                   std::vector<float>(x.data().begin(), x.data().end()));
  if (tracing({&x})) {
    out.set_requires_grad(true);
    Tensor tx = x, to = out;
    Tape::active()->record("reshape", [tx, to]() mutable {
      if (!to.has_grad() || !tx.requires_grad()) return;
      auto dx = tx.grad();
      const auto dy = to.grad();
      for (int64_t i = 0; i < tx.numel(); ++i) dx[i] += dy[i];
    });
  }
  return out;
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  check_rank(x, 2, "add_row_bias");
  check_rank(bias, 1, "add_row_bias");
  const int64_t R = x.dim(0), C = x.dim(1);
  if (bias.dim(0) != C) {
    throw ShapeError("add_row_bias: bias " + shape_str(bias.shape()) + " vs columns of " +
                     shape_str(x.shape()));
  }
  Tensor out = Tensor::zeros(x.shape());
  const auto in = x.data();
  const auto pb = bias.data();
  auto o = out.data();
  for (int64_t r = 0; r < R; ++r) {
    for (int64_t c = 0; c < C; ++c) o[r * C + c] = in[r * C + c] + pb[c];
  }

  if (tracing({&x, &bias})) {
    out.set_requires_grad(true);
    Tensor tx = x, tb = bias, to = out;
    Tape::active()->record("add_row_bias", [tx, tb, to, R, C]() mutable {
      if (!to.has_grad()) return;
      const auto dy = to.grad();
      if (tx.requires_grad()) {
        auto dx = tx.grad();
        for (int64_t i = 0; i < R * C; ++i) dx[i] += dy[i];
      }
      if (tb.requires_grad()) {
        auto db = tb.grad();
        for (int64_t c = 0; c < C; ++c) {
          double acc = 0.0;
          for (int64_t r = 0; r < R; ++r) acc += dy[r * C + c];
          db[c] += static_cast<float>(acc);
        }
      }
    });
  }
  return out;
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
  check_rank(x, 4, "add_channel_bias");
  check_rank(bias, 1, "add_channel_bias");
  const int64_t B = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (bias.dim(0) != C) {
    throw ShapeError("add_channel_bias: bias " + shape_str(bias.shape()) + " vs channels of " +
                     shape_str(x.shape()));
  }
  Tensor out = Tensor::zeros(x.shape());
  const auto in = x.data();
  const auto pb = bias.data();
  auto o = out.data();
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t c = 0; c < C; ++c) {
      const int64_t base = (b * C + c) * HW;
      const float v = pb[c];
      for (int64_t i = 0; i < HW; ++i) o[base + i] = in[base + i] + v;
    }
  }

  if (tracing({&x, &bias})) {
    out.set_requires_grad(true);
    Tensor tx = x, tb = bias, to = out;
    Tape::active()->record("add_channel_bias", [tx, tb, to, B, C, HW]() mutable {
      if (!to.has_grad()) return;
      const auto dy = to.grad();
      if (tx.requires_grad()) {
        auto dx = tx.grad();
        for (int64_t i = 0; i < B * C * HW; ++i) dx[i] += dy[i];
      }
      if (tb.requires_grad()) {
        auto db = tb.grad();
        for (int64_t c = 0; c < C; ++c) {
          double acc = 0.0;
          for (int64_t b = 0; b < B; ++b) {
            const float* src = dy.data() + (b * C + c) * HW;
            for (int64_t i = 0; i < HW; ++i) acc += src[i];
          }
          db[c] += static_cast<float>(acc);
        }
      }
    });
  }
  return out;
}

Tensor batch_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  check_rank(x, 4, "batch_norm2d");
  check_rank(gamma, 1, "batch_norm2d");
  check_rank(beta, 1, "batch_norm2d");
  const int64_t B = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (gamma.dim(0) != C || beta.dim(0) != C) {
    throw ShapeError("batch_norm2d: scale/shift " + shape_str(gamma.shape()) + "/" +
                     shape_str(beta.shape()) + " vs channels of " + shape_str(x.shape()));
  }
  const int64_t n = B * HW;  // per-channel sample count
  Tensor out = Tensor::zeros(x.shape());
  std::vector<float> xhat(static_cast<size_t>(x.numel()));
  std::vector<float> inv_std(static_cast<size_t>(C));
  const auto in = x.data();
  const auto pg = gamma.data();
  const auto pbt = beta.data();
  auto o = out.data();
  for (int64_t c = 0; c < C; ++c) {
    double mean = 0.0, var = 0.0;
    for (int64_t b = 0; b < B; ++b) {
      const float* src = in.data() + (b * C + c) * HW;
      for (int64_t i = 0; i < HW; ++i) mean += src[i];
    }
    mean /= static_cast<double>(n);
    for (int64_t b = 0; b < B; ++b) {
      const float* src = in.data() + (b * C + c) * HW;
      for (int64_t i = 0; i < HW; ++i) {
        const double d = src[i] - mean;
        var += d * d;
      }
    }
    var /= static_cast<double>(n);
    const float inv = static_cast<float>(1.0 / std::sqrt(var + eps));
    inv_std[static_cast<size_t>(c)] = inv;
    for (int64_t b = 0; b < B; ++b) {
      const int64_t base = (b * C + c) * HW;
      for (int64_t i = 0; i < HW; ++i) {
        const float xh = (in[base + i] - static_cast<float>(mean)) * inv;
        xhat[static_cast<size_t>(base + i)] = xh;
        o[base + i] = pg[c] * xh + pbt[c];
      }
    }
  }

  if (tracing({&x, &gamma, &beta})) {
    out.set_requires_grad(true);
    Tensor tx = x, tg = gamma, tb = beta, to = out;
    Tape::active()->record("batch_norm2d", [tx, tg, tb, to, B, C, HW, n,
                                            xhat = std::move(xhat),
                                            inv_std = std::move(inv_std)]() mutable {
      if (!to.has_grad()) return;
      const auto dy = to.grad();
      for (int64_t c = 0; c < C; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int64_t b = 0; b < B; ++b) {
          const int64_t base = (b * C + c) * HW;
          for (int64_t i = 0; i < HW; ++i) {
            sum_dy += dy[base + i];
            sum_dy_xhat += dy[base + i] * xhat[static_cast<size_t>(base + i)];
          }
        }
        if (tg.requires_grad()) tg.grad()[c] += static_cast<float>(sum_dy_xhat);
        if (tb.requires_grad()) tb.grad()[c] += static_cast<float>(sum_dy);
        if (tx.requires_grad()) {
          auto dx = tx.grad();
          const float g = tg.data()[c];
          const float inv = inv_std[static_cast<size_t>(c)];
          const float invn = 1.0f / static_cast<float>(n);
          for (int64_t b = 0; b < B; ++b) {
            const int64_t base = (b * C + c) * HW;
            for (int64_t i = 0; i < HW; ++i) {
              const float xh = xhat[static_cast<size_t>(base + i)];
              dx[base + i] += g * inv * invn *
                              (static_cast<float>(n) * dy[base + i] -
                               static_cast<float>(sum_dy) - xh * static_cast<float>(sum_dy_xhat));
            }
          }
        }
      }
    });
  }
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  check_rank(logits, 2, "softmax_cross_entropy");
  const int64_t B = logits.dim(0), K = logits.dim(1);
  if (static_cast<int64_t>(labels.size()) != B) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for batch of " + std::to_string(B));
  }
  for (int64_t i = 0; i < B; ++i) {
    if (labels[static_cast<size_t>(i)] < 0 || labels[static_cast<size_t>(i)] >= K) {
      throw DataError("label " + std::to_string(labels[static_cast<size_t>(i)]) +
                      " out of range [0," + std::to_string(K) + ") at index " +
                      std::to_string(i));
    }
  }

  const auto z = logits.data();
  std::vector<float> probs(static_cast<size_t>(B * K));
  double loss_acc = 0.0;
  for (int64_t i = 0; i < B; ++i) {
    const float* row = z.data() + i * K;
    float m = row[0];
    for (int64_t j = 1; j < K; ++j) m = std::max(m, row[j]);
    double denom = 0.0;
    for (int64_t j = 0; j < K; ++j) denom += std::exp(static_cast<double>(row[j] - m));
    for (int64_t j = 0; j < K; ++j) {
      probs[static_cast<size_t>(i * K + j)] =
          static_cast<float>(std::exp(static_cast<double>(row[j] - m)) / denom);
    }
    const int y = labels[static_cast<size_t>(i)];
    loss_acc += std::log(denom) - static_cast<double>(row[y] - m);
  }
  Tensor out = Tensor::scalar(static_cast<float>(loss_acc / static_cast<double>(B)));

  if (tracing({&logits})) {
    out.set_requires_grad(true);
    Tensor tl = logits, to = out;
    Tape::active()->record("softmax_cross_entropy",
                           [tl, to, B, K, labels, probs = std::move(probs)]() mutable {
                             if (!to.has_grad() || !tl.requires_grad()) return;
                             const float g = to.grad()[0] / static_cast<float>(B);
                             auto dz = tl.grad();
                             for (int64_t i = 0; i < B; ++i) {
                               const int y = labels[static_cast<size_t>(i)];
                               for (int64_t j = 0; j < K; ++j) {
                                 float p = probs[static_cast<size_t>(i * K + j)];
                                 if (j == y) p -= 1.0f;
                                 dz[i * K + j] += g * p;
                               }
                             }
                           });
  }
  return out;
}

}  // namespace colt
