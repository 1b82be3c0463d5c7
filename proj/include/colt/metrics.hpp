#pragma once

#include <string>
#include <vector>

#include "colt/mask.hpp"

namespace colt {

/// 100 * correct / total. Throws DataError on empty or mismatched input.
double accuracy_percent(const std::vector<int>& predictions, const std::vector<int>& labels);

/// 100 * |{i : a[i]=0 and b[i]=0}| / total bits (all-params denominator).
double mask_similarity_percent(const Mask& a, const Mask& b);

struct LayerCollapseEntry {
  std::string name;
  bool eligible = false;
  int64_t kept = 0;
  int64_t total = 0;
  double kept_fraction = 0.0;
  bool collapsed = false;  // eligible tensor with zero kept weights
};

struct LayerCollapseReport {
  std::vector<LayerCollapseEntry> layers;
  bool any_collapsed = false;

  std::string to_string() const;
};

LayerCollapseReport layer_collapse_report(const Mask& m);

}  // namespace colt
