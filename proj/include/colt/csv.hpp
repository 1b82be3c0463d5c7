#pragma once

#include <string>
#include <vector>

#include "colt/ticket.hpp"

namespace colt {

inline constexpr const char* kTraceCsvHeader =
    "method,round,sparsity_all_pct,sparsity_eligible_pct,partition1_acc_pct,"
    "partition2_acc_pct,full_acc_pct,similarity_pct,wall_s,seed";

std::string trace_row_csv(const TraceRow& row);

void write_trace_csv(const std::vector<TraceRow>& rows, const std::string& path);

/// Rejects files whose header differs from kTraceCsvHeader.
std::vector<TraceRow> read_trace_csv(const std::string& path);

}  // namespace colt
