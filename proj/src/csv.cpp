#include "colt/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "colt/error.hpp"

namespace colt {

namespace {

std::string fmt_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_pct(*v) : ""; }

std::optional<double> parse_opt(const std::string& cell, const char* col) {
  if (cell.empty()) return std::nullopt;
  try {
    return std::stod(cell);
  } catch (const std::exception&) {
    throw ParseError(std::string("bad CSV value '") + cell + "' in column " + col);
  }
}

}  // namespace

std::string trace_row_csv(const TraceRow& row) {
  std::ostringstream os;
  char wall[32];
  std::snprintf(wall, sizeof(wall), "%.3f", row.wall_s);
  os << row.method << "," << row.round << "," << fmt_pct(row.sparsity_all_pct) << ","
     << fmt_pct(row.sparsity_eligible_pct) << "," << fmt_opt(row.partition1_acc_pct) << ","
     << fmt_opt(row.partition2_acc_pct) << "," << fmt_opt(row.full_acc_pct) << ","
     << fmt_opt(row.similarity_pct) << "," << wall << "," << row.seed;
  return os.str();
}

void write_trace_csv(const std::vector<TraceRow>& rows, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << kTraceCsvHeader << "\n";
  for (const auto& row : rows) f << trace_row_csv(row) << "\n";
  if (!f) throw IoError("short write to '" + path + "'");
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open trace '" + path + "'");
  std::string line;
  if (!std::getline(f, line)) throw ParseError("empty trace file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceCsvHeader) {
    throw ParseError("trace header mismatch in '" + path + "': got '" + line + "'");
  }

  std::vector<TraceRow> rows;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    if (cells.size() != 10) {
      throw ParseError("trace '" + path + "' line " + std::to_string(lineno) + ": expected 10 columns, got " +
                       std::to_string(cells.size()));
    }
    TraceRow row;
    row.method = cells[0];
    row.round = static_cast<int>(*parse_opt(cells[1], "round"));
    row.sparsity_all_pct = *parse_opt(cells[2], "sparsity_all_pct");
    row.sparsity_eligible_pct = *parse_opt(cells[3], "sparsity_eligible_pct");
    row.partition1_acc_pct = parse_opt(cells[4], "partition1_acc_pct");
    row.partition2_acc_pct = parse_opt(cells[5], "partition2_acc_pct");
    row.full_acc_pct = parse_opt(cells[6], "full_acc_pct");
    row.similarity_pct = parse_opt(cells[7], "similarity_pct");
    row.wall_s = *parse_opt(cells[8], "wall_s");
    row.seed = static_cast<uint64_t>(*parse_opt(cells[9], "seed"));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace colt
