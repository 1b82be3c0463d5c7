#pragma once

// Finite-difference gradient checking of the engine against the
// double-precision reference in ref_double.hpp. Each check builds one random
// small network, backpropagates with the engine, then compares every
// parameter gradient with a central difference of the reference loss.
// Elements whose +/-h evaluations land on different relu/pool activation
// patterns straddle a kink where the derivative jumps; they are skipped and
// counted.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "colt/autograd.hpp"
#include "colt/ops.hpp"
#include "colt/rng.hpp"
#include "colt/tensor.hpp"
#include "ref_double.hpp"

namespace fdcheck {

struct NetResult {
  double max_rel = 0.0;
  int checked = 0;
  int skipped = 0;
};

namespace detail {

inline colt::Tensor randt(colt::Shape shape, colt::Rng& rng, float lo, float hi) {
  std::vector<float> v(static_cast<size_t>(colt::shape_numel(shape)));
  for (float& x : v) x = colt::uniform_float(rng, lo, hi);
  return colt::Tensor::from_vector(std::move(shape), std::move(v));
}

inline std::vector<double> to_double(std::span<const float> s) {
  return std::vector<double>(s.begin(), s.end());
}

// loss + activation signature of the conv graph:
// conv(3x3, pad 1) -> +bias -> relu -> maxpool2 -> gap -> linear -> +bias -> ce
struct ConvGraph {
  int B, C, H, W, F, K;
  std::vector<double> x;
  std::vector<int> labels;

  double eval(const std::vector<std::vector<double>>& p, std::string* sig) const {
    const auto& ker = p[0];
    const auto& cb = p[1];
    const auto& wh = p[2];
    const auto& bh = p[3];
    auto y = refd::conv2d(x, B, C, H, W, ker, F, 3, 1, 1);
    y = refd::add_channel_bias(y, B, F, H * W, cb);
    if (sig) {
      for (double v : y) sig->push_back(v > 0.0 ? '1' : '0');
    }
    y = refd::relu(y);
    // record pool argmax pattern
    if (sig) {
      const int Ho = (H - 2) / 2 + 1, Wo = (W - 2) / 2 + 1;
      for (int b = 0; b < B; ++b)
        for (int f = 0; f < F; ++f)
          for (int oh = 0; oh < Ho; ++oh)
            for (int ow = 0; ow < Wo; ++ow) {
              int best = 0;
              double bv = -1e300;
              for (int ki = 0; ki < 2; ++ki)
                for (int kj = 0; kj < 2; ++kj) {
                  const double v = y[((b * F + f) * H + oh * 2 + ki) * W + ow * 2 + kj];
                  if (v > bv) {
                    bv = v;
                    best = ki * 2 + kj;
                  }
                }
              sig->push_back(static_cast<char>('a' + best));
            }
    }
    y = refd::maxpool2d(y, B, F, H, W, 2, 2);
    y = refd::gap(y, B, F, (H / 2) * (W / 2));
    y = refd::add_row_bias(refd::matmul(y, B, F, wh, K), B, K, bh);
    return refd::softmax_cross_entropy(y, B, K, labels);
  }
};

// linear -> +bias -> relu -> linear -> +bias -> ce
struct MlpGraph {
  int B, I, Hdim, K;
  std::vector<double> x;
  std::vector<int> labels;

  double eval(const std::vector<std::vector<double>>& p, std::string* sig) const {
    auto h = refd::add_row_bias(refd::matmul(x, B, I, p[0], Hdim), B, Hdim, p[1]);
    if (sig) {
      for (double v : h) sig->push_back(v > 0.0 ? '1' : '0');
    }
    h = refd::relu(h);
    auto y = refd::add_row_bias(refd::matmul(h, B, Hdim, p[2], K), B, K, p[3]);
    return refd::softmax_cross_entropy(y, B, K, labels);
  }
};

template <typename Graph>
NetResult run_fd(const Graph& g, std::vector<colt::Tensor>& params, double h) {
  std::vector<std::vector<double>> vals;
  vals.reserve(params.size());
  for (auto& t : params) vals.push_back(to_double(t.data()));

  NetResult res;
  for (size_t p = 0; p < params.size(); ++p) {
    for (size_t i = 0; i < vals[p].size(); ++i) {
      auto vp = vals, vm = vals;
      vp[p][i] += h;
      vm[p][i] -= h;
      std::string sig_p, sig_m;
      const double fp = g.eval(vp, &sig_p);
      const double fm = g.eval(vm, &sig_m);
      if (sig_p != sig_m) {
        ++res.skipped;
        continue;
      }
      const double fd = (fp - fm) / (2 * h);
      const double an = params[p].grad()[static_cast<int64_t>(i)];
      res.max_rel = std::max(res.max_rel, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
      ++res.checked;
    }
  }
  return res;
}

}  // namespace detail

/// Builds one random network (conv for even seeds, mlp for odd), runs the
/// engine backward pass and compares against reference finite differences
/// with h = 1e-3.
inline NetResult check_net(uint64_t seed) {
  using namespace colt;
  using namespace detail;
  Rng rng = make_rng(mix_seed(seed, 0xFDC));
  const double h = 1e-3;

  if (seed % 2 == 0) {
    const int B = 2, C = 1 + static_cast<int>(bounded_u64(rng, 2));
    const int H = 6, W = 6, F = 2 + static_cast<int>(bounded_u64(rng, 3)), K = 3;
    Tensor x = randt({B, C, H, W}, rng, -1.0f, 1.0f);
    std::vector<Tensor> params = {randt({F, C, 3, 3}, rng, -0.5f, 0.5f),
                                  randt({F}, rng, -0.1f, 0.1f),
                                  randt({F, K}, rng, -0.5f, 0.5f),
                                  randt({K}, rng, -0.1f, 0.1f)};
    ConvGraph g;
    g.B = B;
    g.C = C;
    g.H = H;
    g.W = W;
    g.F = F;
    g.K = K;
    g.x = to_double(x.data());
    for (int i = 0; i < B; ++i) g.labels.push_back(static_cast<int>(bounded_u64(rng, K)));
    for (auto& t : params) t.set_requires_grad(true);
    {
      TapeScope scope;
      Tensor y = conv2d(x, params[0], 1, 1);
      y = add_channel_bias(y, params[1]);
      y = relu(y);
      y = max_pool2d(y, 2, 2);
      y = global_avg_pool(y);
      y = add_row_bias(matmul(y, params[2]), params[3]);
      Tensor loss = softmax_cross_entropy(y, g.labels);
      scope.backward(loss);
    }
    return run_fd(g, params, h);
  }

  const int B = 3, I = 4 + static_cast<int>(bounded_u64(rng, 5));
  const int Hdim = 5 + static_cast<int>(bounded_u64(rng, 8)), K = 4;
  Tensor x = randt({B, I}, rng, -1.0f, 1.0f);
  std::vector<Tensor> params = {randt({I, Hdim}, rng, -0.5f, 0.5f),
                                randt({Hdim}, rng, -0.2f, 0.2f),
                                randt({Hdim, K}, rng, -0.5f, 0.5f),
                                randt({K}, rng, -0.2f, 0.2f)};
  MlpGraph g;
  g.B = B;
  g.I = I;
  g.Hdim = Hdim;
  g.K = K;
  g.x = to_double(x.data());
  for (int i = 0; i < B; ++i) g.labels.push_back(static_cast<int>(bounded_u64(rng, K)));
  for (auto& t : params) t.set_requires_grad(true);
  {
    TapeScope scope;
    Tensor y = add_row_bias(matmul(x, params[0]), params[1]);
    y = relu(y);
    y = add_row_bias(matmul(y, params[2]), params[3]);
    Tensor loss = softmax_cross_entropy(y, g.labels);
    scope.backward(loss);
  }
  return run_fd(g, params, h);
}

}  // namespace fdcheck
