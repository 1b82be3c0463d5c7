#pragma once

#include <string>

#include "colt/mask.hpp"
#include "colt/params.hpp"

namespace colt {

struct PruneSchedule {
  double prune_fraction = 0.2;  // p, applied to currently-kept eligible weights
  EligibilityRule eligibility = EligibilityRule::conv_only;
  double target_sparsity = 89.0;  // percent, all-params denominator
  int max_rounds = 30;

  void validate() const;  // throws ConfigError
  bool operator==(const PruneSchedule&) const = default;
};

enum class SparsityDenominator { all_params, eligible_params };

struct PruneResult {
  Mask mask;
  int64_t pruned_count = 0;  // bits newly cleared this call
  bool noop = false;         // floor(p * kept) == 0 while kept > 0
};

/// Clears exactly floor(p * R) bits among the R currently-kept eligible
/// weights, pooled across all eligible tensors, lowest |w| first. Ties in
/// magnitude break by ascending (tensor order, flat index). Previously
/// cleared bits stay cleared.
PruneResult global_prune(const ParameterSet& params, const Mask& mask, double p);

/// Bitwise AND per tensor. Requires identical structure.
Mask intersect(const Mask& a, const Mask& b);

/// Pruned positions become exactly 0.0f; kept positions are untouched.
void apply_mask(ParameterSet& params, const Mask& mask);

/// theta <- m (*) theta_0: kept weights bit-equal to the initial snapshot,
/// pruned weights exactly 0.0f.
void rewind(ParameterSet& params, const Mask& mask);

/// Zeroes gradients at pruned positions so training never updates them.
void mask_gradients(ParameterSet& params, const Mask& mask);

double prune_rate_percent(const Mask& m, SparsityDenominator denom);

/// Renders a percentage at 0.1% precision, e.g. "33.3".
std::string format_percent(double pct);

}  // namespace colt
