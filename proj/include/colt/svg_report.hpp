#pragma once

#include <string>
#include <vector>

#include "colt/ticket.hpp"

namespace colt {

/// Accuracy vs sparsity, one polyline per method. A row's accuracy is
/// full_acc_pct when present, otherwise the mean of its partition accuracies.
std::string render_accuracy_svg(const std::vector<TraceRow>& rows);

/// Sparsity vs round, one polyline per method.
std::string render_rounds_svg(const std::vector<TraceRow>& rows);

void write_svg(const std::string& svg, const std::string& path);

}  // namespace colt
