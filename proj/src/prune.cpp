#include "colt/prune.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>
#include <vector>

#include "colt/error.hpp"

namespace colt {

void PruneSchedule::validate() const {
  if (!(prune_fraction > 0.0 && prune_fraction < 1.0)) {
    throw ConfigError("schedule prune fraction must lie in (0,1), got " +
                      std::to_string(prune_fraction));
  }
  if (!(target_sparsity >= 0.0 && target_sparsity < 100.0)) {
    throw ConfigError("schedule target sparsity must lie in [0,100), got " +
                      std::to_string(target_sparsity));
  }
  if (max_rounds < 0) throw ConfigError("schedule max rounds must be non-negative");
}

PruneResult global_prune(const ParameterSet& params, const Mask& mask, double p) {
  mask.check_aligned(params);
  if (!(p > 0.0 && p < 1.0)) {
    throw ConfigError("prune fraction must lie in (0,1), got " + std::to_string(p));
  }

  struct Candidate {
    float mag;
    int32_t entry;
    int64_t idx;
  };
  std::vector<Candidate> kept;
  for (size_t t = 0; t < mask.entries().size(); ++t) {
    const MaskEntry& e = mask.entries()[t];
    if (!e.eligible) continue;
    const auto w = params.items()[t].value.data();
    for (int64_t i = 0; i < e.bits; ++i) {
      if (e.field.get(i)) {
        kept.push_back({std::fabs(w[i]), static_cast<int32_t>(t), i});
      }
    }
  }

  PruneResult res;
  res.mask = mask;
  const int64_t R = static_cast<int64_t>(kept.size());
  const int64_t k = static_cast<int64_t>(std::floor(p * static_cast<double>(R)));
  if (k == 0) {
    res.noop = R > 0;
    return res;
  }

  std::nth_element(kept.begin(), kept.begin() + (k - 1), kept.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return std::tie(a.mag, a.entry, a.idx) < std::tie(b.mag, b.entry, b.idx);
                   });
  for (int64_t i = 0; i < k; ++i) {
    res.mask.entries()[static_cast<size_t>(kept[static_cast<size_t>(i)].entry)].field.set(
        kept[static_cast<size_t>(i)].idx, false);
  }
  res.pruned_count = k;
  return res;
}

Mask intersect(const Mask& a, const Mask& b) {
  if (!a.same_structure(b)) {
    throw AlignmentError("cannot intersect masks with different tensor structure");
  }
  Mask out = a;
  for (size_t i = 0; i < out.entries().size(); ++i) {
    out.entries()[i].field.and_with(b.entries()[i].field);
  }
  return out;
}

void apply_mask(ParameterSet& params, const Mask& mask) {
  mask.check_aligned(params);
  for (size_t t = 0; t < mask.entries().size(); ++t) {
    const MaskEntry& e = mask.entries()[t];
    auto w = params.items()[t].value.data();
    for (int64_t i = 0; i < e.bits; ++i) {
      if (!e.field.get(i)) w[i] = 0.0f;
    }
  }
}

void rewind(ParameterSet& params, const Mask& mask) {
  mask.check_aligned(params);
  for (auto& it : params.items()) {
    if (static_cast<int64_t>(it.initial.size()) != it.value.numel()) {
      throw StateError("initial snapshot missing for tensor '" + it.name + "'");
    }
  }
  for (size_t t = 0; t < mask.entries().size(); ++t) {
    const MaskEntry& e = mask.entries()[t];
    auto& item = params.items()[t];
    auto w = item.value.data();
    for (int64_t i = 0; i < e.bits; ++i) {
      w[i] = e.field.get(i) ? item.initial[static_cast<size_t>(i)] : 0.0f;
    }
  }
}

void mask_gradients(ParameterSet& params, const Mask& mask) {
  mask.check_aligned(params);
  for (size_t t = 0; t < mask.entries().size(); ++t) {
    const MaskEntry& e = mask.entries()[t];
    auto& item = params.items()[t];
    if (!item.value.has_grad()) continue;
    auto g = item.value.grad();
    for (int64_t i = 0; i < e.bits; ++i) {
      if (!e.field.get(i)) g[i] = 0.0f;
    }
  }
}

double prune_rate_percent(const Mask& m, SparsityDenominator denom) {
  const int64_t zeros =
      denom == SparsityDenominator::all_params ? m.total_zeros() : m.eligible_zeros();
  const int64_t total =
      denom == SparsityDenominator::all_params ? m.total_bits() : m.eligible_bits();
  if (total == 0) return 0.0;
  return 100.0 * static_cast<double>(zeros) / static_cast<double>(total);
}

std::string format_percent(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", pct);
  return buf;
}

}  // namespace colt
