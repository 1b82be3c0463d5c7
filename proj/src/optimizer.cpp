#include "colt/optimizer.hpp"

#include <cmath>

#include "colt/error.hpp"

namespace colt {

double LrSchedule::lr_at(int64_t step) const {
  const int64_t spe = steps_per_epoch > 0 ? steps_per_epoch : 1;
  const int64_t epoch = step / spe;
  double lr = base_lr;
  if (warmup && epoch == 0) {
    lr = base_lr * static_cast<double>(step % spe + 1) / static_cast<double>(spe);
  }
  for (int a : anneal_epochs) {
    if (epoch >= a) lr /= anneal_factor;
  }
  return lr;
}

OptimizerState::OptimizerState(const ParameterSet& params, OptimizerConfig cfg,
                               LrSchedule sched)
    : config(cfg), schedule(std::move(sched)) {
  for (const auto& it : params.items()) {
    m1.emplace_back(static_cast<size_t>(it.value.numel()), 0.0f);
    if (config.kind == OptimizerKind::adam) {
      m2.emplace_back(static_cast<size_t>(it.value.numel()), 0.0f);
    }
  }
}

void optimizer_step(ParameterSet& params, OptimizerState& state) {
  if (state.m1.size() != params.items().size()) {
    throw StateError("optimizer state does not match parameter set");
  }
  const double lr = state.schedule.lr_at(state.step_count);
  state.step_count += 1;
  const OptimizerConfig& cfg = state.config;
  const float wd = static_cast<float>(cfg.weight_decay);

  for (size_t t = 0; t < params.items().size(); ++t) {
    ParamTensor& pt = params.items()[t];
    auto w = pt.value.data();
    const int64_t n = pt.value.numel();
    // Absent gradient buffers are treated as zero gradients.
    const float* g = pt.value.has_grad() ? pt.value.grad().data() : nullptr;

    if (cfg.kind == OptimizerKind::sgd) {
      auto& buf = state.m1[t];
      const float mom = static_cast<float>(cfg.momentum);
      const float flr = static_cast<float>(lr);
      for (int64_t i = 0; i < n; ++i) {
        const float gi = (g ? g[i] : 0.0f) + wd * w[i];
        buf[static_cast<size_t>(i)] = mom * buf[static_cast<size_t>(i)] + gi;
        w[i] -= flr * buf[static_cast<size_t>(i)];
      }
    } else {
      auto& m = state.m1[t];
      auto& v = state.m2[t];
      const float b1 = static_cast<float>(cfg.beta1);
      const float b2 = static_cast<float>(cfg.beta2);
      const double t_steps = static_cast<double>(state.step_count);
      const float corr1 = static_cast<float>(1.0 - std::pow(cfg.beta1, t_steps));
      const float corr2 = static_cast<float>(1.0 - std::pow(cfg.beta2, t_steps));
      const float flr = static_cast<float>(lr);
      const float feps = static_cast<float>(cfg.eps);
      for (int64_t i = 0; i < n; ++i) {
        const size_t si = static_cast<size_t>(i);
        const float gi = (g ? g[i] : 0.0f) + wd * w[i];
        m[si] = b1 * m[si] + (1.0f - b1) * gi;
        v[si] = b2 * v[si] + (1.0f - b2) * gi * gi;
        const float mhat = m[si] / corr1;
        const float vhat = v[si] / corr2;
        w[i] -= flr * mhat / (std::sqrt(vhat) + feps);
      }
    }

    for (int64_t i = 0; i < n; ++i) {
      if (!std::isfinite(w[i])) {
        throw NumericFault("non-finite value in '" + pt.name + "' after update step " +
                           std::to_string(state.step_count));
      }
    }
  }
}

}  // namespace colt
