#pragma once

#include <cstdint>
#include <vector>

#include "colt/params.hpp"

namespace colt {

enum class OptimizerKind { sgd, adam };

/// Step-indexed learning rate: optional linear ramp from 0 to base_lr over
/// the first epoch's steps, then division by anneal_factor at the start of
/// each listed epoch.
struct LrSchedule {
  double base_lr = 1.2e-3;
  bool warmup = true;
  int64_t steps_per_epoch = 1;
  std::vector<int> anneal_epochs;
  double anneal_factor = 5.0;

  double lr_at(int64_t step) const;
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double momentum = 0.9;  // sgd only
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;   // adam
  double eps = 1e-8;      // adam
  double weight_decay = 1e-4;
  bool operator==(const OptimizerConfig&) const = default;
};

/// Per-tensor moment buffers plus the global step counter.
class OptimizerState {
 public:
  OptimizerState(const ParameterSet& params, OptimizerConfig cfg, LrSchedule schedule);

  OptimizerConfig config;
  LrSchedule schedule;
  int64_t step_count = 0;

  std::vector<std::vector<float>> m1;  // sgd momentum / adam first moment
  std::vector<std::vector<float>> m2;  // adam second moment
};

/// Applies one SGD-with-momentum or Adam update (L2 weight decay folded into
/// the gradient) at the schedule's current learning rate.
void optimizer_step(ParameterSet& params, OptimizerState& state);

}  // namespace colt
