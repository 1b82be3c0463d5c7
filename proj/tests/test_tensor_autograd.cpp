#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "colt/autograd.hpp"
#include "colt/error.hpp"
#include "colt/ops.hpp"
#include "colt/optimizer.hpp"
#include "colt/rng.hpp"
#include "colt/tensor.hpp"
#include "ref_double.hpp"

using namespace colt;

namespace {

Tensor randt(Shape shape, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
  std::vector<float> v(static_cast<size_t>(shape_numel(shape)));
  for (float& x : v) x = uniform_float(rng, lo, hi);
  return Tensor::from_vector(std::move(shape), std::move(v));
}

std::vector<double> to_double(std::span<const float> s) {
  return std::vector<double>(s.begin(), s.end());
}

}  // namespace

TEST_CASE("matmul forward examples") {
  auto a = Tensor::from_vector({2, 2}, {1, 2, 3, 4});
  auto eye = Tensor::from_vector({2, 2}, {1, 0, 0, 1});
  auto c = matmul(a, eye);
  CHECK(c.data()[0] == 1.0f);
  CHECK(c.data()[1] == 2.0f);
  CHECK(c.data()[2] == 3.0f);
  CHECK(c.data()[3] == 4.0f);

  auto row = Tensor::from_vector({1, 2}, {1, 2});
  auto col = Tensor::from_vector({2, 1}, {3, 4});
  CHECK(matmul(row, col).data()[0] == doctest::Approx(11.0f));

  auto z = Tensor::zeros({2, 3});
  Rng rng = make_rng(7);
  auto b = randt({3, 2}, rng);
  auto zc = matmul(z, b);
  for (float v : zc.data()) CHECK(v == 0.0f);

  CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("conv2d forward examples") {
  auto ones = Tensor::full({1, 1, 3, 3}, 1.0f);
  auto k1 = Tensor::from_vector({1, 1, 1, 1}, {2.0f});
  auto y = conv2d(ones, k1, 1, 0);
  CHECK(y.shape() == Shape{1, 1, 3, 3});
  for (float v : y.data()) CHECK(v == 2.0f);

  auto x = Tensor::from_vector({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  auto k2 = Tensor::full({1, 1, 2, 2}, 1.0f);
  auto y2 = conv2d(x, k2, 1, 0);
  CHECK(y2.shape() == Shape{1, 1, 2, 2});
  CHECK(y2.data()[0] == 12.0f);
  CHECK(y2.data()[1] == 16.0f);
  CHECK(y2.data()[2] == 24.0f);
  CHECK(y2.data()[3] == 28.0f);

  auto zk = Tensor::zeros({2, 1, 2, 2});
  auto y3 = conv2d(x, zk, 1, 0);
  for (float v : y3.data()) CHECK(v == 0.0f);

  // (3 + 0 - 2) % 2 != 0 -> no integral output size
  CHECK_THROWS_AS(conv2d(x, k2, 2, 0), ConfigError);
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({1, 2, 2, 2}), 1, 0), ShapeError);
}

TEST_CASE("relu, pooling and loss examples") {
  auto x = Tensor::from_vector({1, 4}, {-1.0f, 0.0f, 2.5f, -0.5f});
  auto r = relu(x);
  CHECK(r.data()[0] == 0.0f);
  CHECK(r.data()[2] == 2.5f);

  auto cmap = Tensor::full({2, 3, 4, 4}, 0.625f);
  auto g = global_avg_pool(cmap);
  CHECK(g.shape() == Shape{2, 3});
  for (float v : g.data()) CHECK(v == 0.625f);

  // uniform logits -> loss = ln(num_classes)
  auto logits = Tensor::full({3, 5}, 0.42f);
  auto loss = softmax_cross_entropy(logits, {0, 3, 4});
  CHECK(loss.data()[0] == doctest::Approx(std::log(5.0)).epsilon(1e-6));

  // closed-form: ln(1 + e^-20)
  auto l2 = softmax_cross_entropy(Tensor::from_vector({1, 2}, {10.0f, -10.0f}), {0});
  CHECK(l2.data()[0] == doctest::Approx(2.0611536e-9f).epsilon(1e-3));

  CHECK_THROWS_AS(softmax_cross_entropy(logits, {0, 5, 1}), DataError);
  CHECK_THROWS_AS(softmax_cross_entropy(logits, {0, -1, 1}), DataError);
}

TEST_CASE("max_pool2d routes gradient to the window maximum") {
  auto x = Tensor::from_vector({1, 1, 2, 2}, {1.0f, 4.0f, 3.0f, 2.0f});
  x.set_requires_grad(true);
  TapeScope scope;
  auto y = max_pool2d(x, 2, 2);
  CHECK(y.data()[0] == 4.0f);
  auto s = sum(y);
  scope.backward(s);
  CHECK(x.grad()[0] == 0.0f);
  CHECK(x.grad()[1] == 1.0f);
  CHECK(x.grad()[3] == 0.0f);
}

TEST_CASE("backward basics") {
  SUBCASE("f(x) = x^2 at x=3 gives grad 6, via two-path accumulation") {
    auto x = Tensor::scalar(3.0f);
    x.set_requires_grad(true);
    TapeScope scope;
    auto y = mul(x, x);
    scope.backward(y);
    CHECK(x.grad()[0] == doctest::Approx(6.0f));
  }

  SUBCASE("non-scalar root is a usage error") {
    auto x = Tensor::zeros({2, 2}, true);
    TapeScope scope;
    auto y = relu(x);
    CHECK_THROWS_AS(scope.backward(y), UsageError);
  }

  SUBCASE("detached tensor receives no gradient") {
    auto x = Tensor::scalar(2.0f);  // requires_grad stays false
    auto w = Tensor::scalar(1.5f);
    w.set_requires_grad(true);
    TapeScope scope;
    auto y = mul(add(x, w), w);
    scope.backward(y);
    CHECK(!x.has_grad());
    CHECK(w.has_grad());
  }

  SUBCASE("a tensor feeding two ops receives both path gradients") {
    auto w = Tensor::from_vector({2, 1}, {1.0f, 2.0f});
    w.set_requires_grad(true);
    auto a = Tensor::from_vector({1, 2}, {3.0f, 5.0f});
    auto b = Tensor::from_vector({1, 2}, {7.0f, 11.0f});
    TapeScope scope;
    auto loss = sum(add(matmul(a, w), matmul(b, w)));
    scope.backward(loss);
    CHECK(w.grad()[0] == doctest::Approx(10.0f));  // 3 + 7
    CHECK(w.grad()[1] == doctest::Approx(16.0f));  // 5 + 11
  }
}

TEST_CASE("finite differences: f(x) = sum(A x)") {
  Rng rng = make_rng(11);
  auto A = randt({4, 3}, rng);
  auto x = randt({3, 2}, rng);
  x.set_requires_grad(true);
  {
    TapeScope scope;
    auto loss = sum(matmul(A, x));
    scope.backward(loss);
  }
  const auto ad = to_double(A.data());
  const double h = 1e-3;
  auto xd = to_double(x.data());
  for (size_t i = 0; i < xd.size(); ++i) {
    auto xp = xd, xm = xd;
    xp[i] += h;
    xm[i] -= h;
    double fp = 0.0, fm = 0.0;
    for (double v : refd::matmul(ad, 4, 3, xp, 2)) fp += v;
    for (double v : refd::matmul(ad, 4, 3, xm, 2)) fm += v;
    const double fd = (fp - fm) / (2 * h);
    const double rel = std::abs(x.grad()[static_cast<int64_t>(i)] - fd) /
                       std::max(1.0, std::abs(fd));
    CHECK(rel < 1e-4);
  }
}

namespace {

// Small random conv net: x -> conv(+bias) -> relu -> maxpool -> gap ->
// linear(+bias) -> cross-entropy. Returns max relative gradient error over
// all parameters vs central finite differences on the double reference.
double conv_net_fd_max_rel_error(uint64_t seed) {
  Rng rng = make_rng(seed);
  const int B = 2, C = 1 + static_cast<int>(bounded_u64(rng, 2));
  const int H = 6, W = 6, F = 2 + static_cast<int>(bounded_u64(rng, 2));
  const int k = 3, K = 3;
  auto x = randt({B, C, H, W}, rng);
  auto ker = randt({F, C, k, k}, rng, -0.5f, 0.5f);
  auto cb = randt({F}, rng, -0.1f, 0.1f);
  auto wh = randt({F, K}, rng, -0.5f, 0.5f);
  auto bh = randt({K}, rng, -0.1f, 0.1f);
  std::vector<int> labels(B);
  for (int i = 0; i < B; ++i) labels[static_cast<size_t>(i)] = static_cast<int>(bounded_u64(rng, K));
  for (Tensor* t : {&ker, &cb, &wh, &bh}) t->set_requires_grad(true);

  {
    TapeScope scope;
    auto y = conv2d(x, ker, 1, 1);
    y = add_channel_bias(y, cb);
    y = relu(y);
    y = max_pool2d(y, 2, 2);
    y = global_avg_pool(y);
    y = add_row_bias(matmul(y, wh), bh);
    auto loss = softmax_cross_entropy(y, labels);
    scope.backward(loss);
  }

  const auto xd = to_double(x.data());
  auto eval = [&](const std::vector<double>& kerd, const std::vector<double>& cbd,
                  const std::vector<double>& whd, const std::vector<double>& bhd) {
    auto y = refd::conv2d(xd, B, C, H, W, kerd, F, k, 1, 1);
    y = refd::add_channel_bias(y, B, F, H * W, cbd);
    y = refd::relu(y);
    y = refd::maxpool2d(y, B, F, H, W, 2, 2);
    y = refd::gap(y, B, F, (H / 2) * (W / 2));
    y = refd::add_row_bias(refd::matmul(y, B, F, whd, K), B, K, bhd);
    return refd::softmax_cross_entropy(y, B, K, labels);
  };

  const double h = 1e-3;
  double max_rel = 0.0;
  std::vector<Tensor*> params = {&ker, &cb, &wh, &bh};
  std::vector<std::vector<double>> vals = {to_double(ker.data()), to_double(cb.data()),
                                           to_double(wh.data()), to_double(bh.data())};
  for (size_t p = 0; p < params.size(); ++p) {
    for (size_t i = 0; i < vals[p].size(); ++i) {
      auto vp = vals, vm = vals;
      vp[p][i] += h;
      vm[p][i] -= h;
      const double fd =
          (eval(vp[0], vp[1], vp[2], vp[3]) - eval(vm[0], vm[1], vm[2], vm[3])) / (2 * h);
      const double an = params[p]->grad()[static_cast<int64_t>(i)];
      max_rel = std::max(max_rel, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  return max_rel;
}

}  // namespace

TEST_CASE("finite differences: conv net parameter gradients") {
  for (uint64_t seed : {101ull, 102ull, 103ull}) {
    CHECK(conv_net_fd_max_rel_error(seed) < 1e-4);
  }
}

TEST_CASE("finite differences: batch norm gradients") {
  Rng rng = make_rng(21);
  const int B = 3, C = 2, H = 4, W = 4, K = 3;
  auto x = randt({B, C, H, W}, rng);
  auto gamma = randt({C}, rng, 0.5f, 1.5f);
  auto beta = randt({C}, rng, -0.2f, 0.2f);
  auto wh = randt({C, K}, rng, -0.5f, 0.5f);
  std::vector<int> labels = {0, 2, 1};
  for (Tensor* t : {&gamma, &beta, &wh}) t->set_requires_grad(true);
  x.set_requires_grad(true);

  {
    TapeScope scope;
    auto y = batch_norm2d(x, gamma, beta);
    y = global_avg_pool(y);
    y = matmul(y, wh);
    auto loss = softmax_cross_entropy(y, labels);
    scope.backward(loss);
  }

  auto eval = [&](const std::vector<double>& xd, const std::vector<double>& gd,
                  const std::vector<double>& bd, const std::vector<double>& wd) {
    auto y = refd::batch_norm2d(xd, B, C, H * W, gd, bd, 1e-5);
    y = refd::gap(y, B, C, H * W);
    y = refd::matmul(y, B, C, wd, K);
    return refd::softmax_cross_entropy(y, B, K, labels);
  };

  std::vector<Tensor*> params = {&x, &gamma, &beta, &wh};
  std::vector<std::vector<double>> vals = {to_double(x.data()), to_double(gamma.data()),
                                           to_double(beta.data()), to_double(wh.data())};
  const double h = 1e-3;
  for (size_t p = 0; p < params.size(); ++p) {
    for (size_t i = 0; i < vals[p].size(); ++i) {
      auto vp = vals, vm = vals;
      vp[p][i] += h;
      vm[p][i] -= h;
      const double fd =
          (eval(vp[0], vp[1], vp[2], vp[3]) - eval(vm[0], vm[1], vm[2], vm[3])) / (2 * h);
      const double an = params[p]->grad()[static_cast<int64_t>(i)];
      CHECK(std::abs(an - fd) / std::max(1.0, std::abs(fd)) < 1e-4);
    }
  }
}

TEST_CASE("optimizer_step") {
  SUBCASE("sgd single step: lr=1, momentum=0, w=1, g=0.5 -> w=0.5") {
    ParameterSet ps;
    ps.add("w", ParamKind::linear, Tensor::scalar(1.0f));
    ps.at("w").value.grad()[0] = 0.5f;
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::sgd;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.0;
    LrSchedule sched;
    sched.base_lr = 1.0;
    sched.warmup = false;
    OptimizerState st(ps, cfg, sched);
    optimizer_step(ps, st);
    CHECK(ps.at("w").value.data()[0] == doctest::Approx(0.5f));
  }

  SUBCASE("zero gradient, zero weight decay leaves sgd weights unchanged") {
    ParameterSet ps;
    ps.add("w", ParamKind::linear, Tensor::from_vector({3}, {0.1f, -0.2f, 0.7f}));
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::sgd;
    cfg.weight_decay = 0.0;
    LrSchedule sched;
    sched.base_lr = 0.5;
    sched.warmup = false;
    OptimizerState st(ps, cfg, sched);
    for (int i = 0; i < 4; ++i) optimizer_step(ps, st);
    CHECK(ps.at("w").value.data()[0] == 0.1f);
    CHECK(ps.at("w").value.data()[1] == -0.2f);
    CHECK(ps.at("w").value.data()[2] == 0.7f);
  }

  SUBCASE("adam matches a scalar hand-rolled oracle to 1e-6") {
    ParameterSet ps;
    ps.add("w", ParamKind::linear, Tensor::scalar(1.0f));
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::adam;
    cfg.weight_decay = 0.0;
    LrSchedule sched;
    sched.base_lr = 0.01;
    sched.warmup = false;
    OptimizerState st(ps, cfg, sched);

    // independent scalar recurrence, float math like the engine
    float w = 1.0f, m = 0.0f, v = 0.0f;
    for (int t = 1; t <= 12; ++t) {
      const float g = 0.1f * static_cast<float>(t) - 0.35f;
      ps.at("w").value.grad()[0] = g;
      optimizer_step(ps, st);

      m = 0.9f * m + 0.1f * g;
      v = 0.999f * v + 0.001f * g * g;
      const float mhat = m / (1.0f - std::pow(0.9f, static_cast<float>(t)));
      const float vhat = v / (1.0f - std::pow(0.999f, static_cast<float>(t)));
      w -= 0.01f * mhat / (std::sqrt(vhat) + 1e-8f);
      CHECK(ps.at("w").value.data()[0] == doctest::Approx(w).epsilon(1e-6));
    }
  }

  SUBCASE("NaN in update raises a numeric fault naming the tensor") {
    ParameterSet ps;
    ps.add("conv1.weight", ParamKind::conv, Tensor::scalar(1.0f));
    ps.at("conv1.weight").value.grad()[0] = std::numeric_limits<float>::quiet_NaN();
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::sgd;
    LrSchedule sched;
    sched.warmup = false;
    OptimizerState st(ps, cfg, sched);
    try {
      optimizer_step(ps, st);
      CHECK(false);
    } catch (const NumericFault& e) {
      CHECK(std::string(e.what()).find("conv1.weight") != std::string::npos);
    }
  }
}

TEST_CASE("lr schedule: warmup ramp and step anneal") {
  LrSchedule s;
  s.base_lr = 0.1;
  s.warmup = true;
  s.steps_per_epoch = 10;
  s.anneal_epochs = {2, 4};
  s.anneal_factor = 5.0;
  CHECK(s.lr_at(0) == doctest::Approx(0.01));   // ramp start
  CHECK(s.lr_at(9) == doctest::Approx(0.1));    // ramp end
  CHECK(s.lr_at(15) == doctest::Approx(0.1));   // epoch 1
  CHECK(s.lr_at(20) == doctest::Approx(0.02));  // epoch 2 annealed
  CHECK(s.lr_at(45) == doctest::Approx(0.004)); // epoch 4 annealed twice
}

TEST_CASE("training determinism: same seed gives bit-identical weights") {
  auto run = [](uint64_t seed) {
    Rng rng = make_rng(seed);
    ParameterSet ps;
    ps.add("w1", ParamKind::linear, randt({4, 8}, rng));
    ps.add("w2", ParamKind::linear, randt({8, 3}, rng));
    OptimizerConfig cfg;
    LrSchedule sched;
    sched.base_lr = 0.01;
    sched.steps_per_epoch = 5;
    OptimizerState st(ps, cfg, sched);
    auto x = randt({6, 4}, rng);
    std::vector<int> labels(6);
    for (auto& l : labels) l = static_cast<int>(bounded_u64(rng, 3));
    for (int step = 0; step < 20; ++step) {
      ps.zero_grads();
      TapeScope scope;
      auto h = relu(matmul(x, ps.at("w1").value));
      auto loss = softmax_cross_entropy(matmul(h, ps.at("w2").value), labels);
      scope.backward(loss);
      optimizer_step(ps, st);
    }
    std::vector<float> flat;
    for (const auto& it : ps.items())
      flat.insert(flat.end(), it.value.data().begin(), it.value.data().end());
    return flat;
  };
  const auto a = run(42), b = run(42), c = run(43);
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
  CHECK(a.size() == c.size());
  CHECK(std::memcmp(a.data(), c.data(), a.size() * sizeof(float)) != 0);
}
