#include "colt/metrics.hpp"

#include <sstream>

#include "colt/error.hpp"

namespace colt {

double accuracy_percent(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.empty()) throw DataError("accuracy undefined on empty input");
  if (predictions.size() != labels.size()) {
    throw DataError("accuracy: " + std::to_string(predictions.size()) + " predictions vs " +
                    std::to_string(labels.size()) + " labels");
  }
  int64_t correct = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == labels[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double mask_similarity_percent(const Mask& a, const Mask& b) {
  if (!a.same_structure(b)) {
    throw AlignmentError("cannot compare masks with different tensor structure");
  }
  int64_t common_zero = 0;
  int64_t total = 0;
  for (size_t t = 0; t < a.entries().size(); ++t) {
    const auto& ea = a.entries()[t];
    const auto& eb = b.entries()[t];
    total += ea.bits;
    for (int64_t i = 0; i < ea.bits; ++i) {
      if (!ea.field.get(i) && !eb.field.get(i)) ++common_zero;
    }
  }
  if (total == 0) return 0.0;
  return 100.0 * static_cast<double>(common_zero) / static_cast<double>(total);
}

LayerCollapseReport layer_collapse_report(const Mask& m) {
  LayerCollapseReport rep;
  for (const auto& e : m.entries()) {
    LayerCollapseEntry le;
    le.name = e.name;
    le.eligible = e.eligible;
    le.kept = e.field.count_ones();
    le.total = e.bits;
    le.kept_fraction =
        e.bits == 0 ? 0.0 : static_cast<double>(le.kept) / static_cast<double>(e.bits);
    le.collapsed = e.eligible && le.kept == 0;
    rep.any_collapsed = rep.any_collapsed || le.collapsed;
    rep.layers.push_back(std::move(le));
  }
  return rep;
}

std::string LayerCollapseReport::to_string() const {
  std::ostringstream os;
  for (const auto& l : layers) {
    os << l.name << ": kept " << l.kept << "/" << l.total;
    if (!l.eligible) os << " (ineligible)";
    if (l.collapsed) os << " COLLAPSED";
    os << "\n";
  }
  return os.str();
}

}  // namespace colt
