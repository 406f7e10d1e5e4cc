#pragma once

// CSV output of schedules, benchmark tables and RH experiment summaries,
// plus readers that check each file against its fixed header. Lines starting
// with '#' are comments.

#include <charconv>
#include <cstddef>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dts/errors.hpp"
#include "dts/task_model.hpp"

namespace dts::csv {

inline constexpr std::string_view kScheduleHeader = "task_id,tau,departure,energy,critical_kind";
inline constexpr std::string_view kBenchHeader = "algorithm,wall_time_s,cost,passes";
inline constexpr std::string_view kRhSummaryHeader = "H,mean_diff,worst_diff,best_diff,mean_calc_time_s";
inline constexpr std::string_view kRhRunHeader = "rep,H,rh_cost,offline_cost,diff,calc_time_s,feasible";

/// Column values of one data row.
using Row = std::vector<std::string>;

namespace detail {

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline void set_precision(std::ostream& os) {
  os.precision(std::numeric_limits<double>::max_digits10);
}

}  // namespace detail

/// Reads every data row, requiring the first non-comment line to equal
/// `header`.
inline std::vector<Row> read_rows(std::istream& in, std::string_view header) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::vector<Row> rows;
  const std::size_t columns = detail::split(header).size();
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!have_header) {
      if (line != header) {
        throw ParseError("line " + std::to_string(lineno) + ": expected header '" +
                         std::string(header) + "'");
      }
      have_header = true;
      continue;
    }
    Row row = detail::split(line);
    if (row.size() != columns) {
      throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(columns) +
                       " columns, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError("missing header '" + std::string(header) + "'");
  return rows;
}

inline double to_double(const std::string& field) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    if (field == "inf") return std::numeric_limits<double>::infinity();
    throw ParseError("not a number: '" + field + "'");
  }
  return v;
}

// ---------------------------------------------------------------- schedules

inline void write_schedule(std::ostream& os, const Instance& inst, const Schedule& s) {
  detail::set_precision(os);
  os << kScheduleHeader << '\n';
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const double energy = static_cast<double>(inst.task(i).bits) * inst.energy_of(i).eval(s.controls[i]);
    os << inst.task(i).id << ',' << s.controls[i] << ',' << s.departures[i] << ',' << energy << ','
       << to_string(s.critical[i]) << '\n';
  }
}

struct ScheduleRow {
  std::size_t task_id = 0;
  double tau = 0.0;
  double departure = 0.0;
  double energy = 0.0;
  CriticalKind critical = CriticalKind::None;
};

inline std::vector<ScheduleRow> read_schedule(std::istream& in) {
  std::vector<ScheduleRow> out;
  for (const Row& r : read_rows(in, kScheduleHeader)) {
    ScheduleRow row;
    row.task_id = static_cast<std::size_t>(to_double(r[0]));
    row.tau = to_double(r[1]);
    row.departure = to_double(r[2]);
    row.energy = to_double(r[3]);
    if (r[4] == "left") {
      row.critical = CriticalKind::Left;
    } else if (r[4] == "right") {
      row.critical = CriticalKind::Right;
    } else if (r[4] != "none") {
      throw ParseError("unknown critical_kind '" + r[4] + "'");
    }
    out.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------- benchmarks

struct BenchRow {
  std::string algorithm;
  double wall_time_s = 0.0;
  double cost = 0.0;
  std::optional<std::size_t> passes;
};

/// `instance_hash` goes into a leading comment line.
inline void write_bench(std::ostream& os, const std::vector<BenchRow>& rows,
                        const std::string& instance_hash = {}) {
  detail::set_precision(os);
  if (!instance_hash.empty()) os << "# instance_hash=" << instance_hash << '\n';
  os << kBenchHeader << '\n';
  for (const BenchRow& r : rows) {
    os << r.algorithm << ',' << r.wall_time_s << ',' << r.cost << ',';
    if (r.passes) os << *r.passes;
    os << '\n';
  }
}

inline std::vector<BenchRow> read_bench(std::istream& in) {
  std::vector<BenchRow> out;
  for (const Row& r : read_rows(in, kBenchHeader)) {
    BenchRow row;
    row.algorithm = r[0];
    row.wall_time_s = to_double(r[1]);
    row.cost = to_double(r[2]);
    if (!r[3].empty()) row.passes = static_cast<std::size_t>(to_double(r[3]));
    out.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------- RH runs

struct RhSummaryRow {
  double window = 0.0;
  double mean_diff = 0.0;
  double worst_diff = 0.0;
  double best_diff = 0.0;
  double mean_calc_time_s = 0.0;
};

inline void write_rh_summary(std::ostream& os, const std::vector<RhSummaryRow>& rows) {
  detail::set_precision(os);
  os << kRhSummaryHeader << '\n';
  for (const RhSummaryRow& r : rows) {
    os << r.window << ',' << r.mean_diff << ',' << r.worst_diff << ',' << r.best_diff << ','
       << r.mean_calc_time_s << '\n';
  }
}

inline std::vector<RhSummaryRow> read_rh_summary(std::istream& in) {
  std::vector<RhSummaryRow> out;
  for (const Row& r : read_rows(in, kRhSummaryHeader)) {
    out.push_back({to_double(r[0]), to_double(r[1]), to_double(r[2]), to_double(r[3]),
                   to_double(r[4])});
  }
  return out;
}

struct RhRunRow {
  std::size_t rep = 0;
  double window = 0.0;
  double rh_cost = 0.0;
  double offline_cost = 0.0;
  double diff = 0.0;
  double calc_time_s = 0.0;  // mean per task
  bool feasible = true;
};

inline void write_rh_runs(std::ostream& os, const std::vector<RhRunRow>& rows) {
  detail::set_precision(os);
  os << kRhRunHeader << '\n';
  for (const RhRunRow& r : rows) {
    os << r.rep << ',' << r.window << ',' << r.rh_cost << ',' << r.offline_cost << ',' << r.diff
       << ',' << r.calc_time_s << ',' << (r.feasible ? 1 : 0) << '\n';
  }
}

inline std::vector<RhRunRow> read_rh_runs(std::istream& in) {
  std::vector<RhRunRow> out;
  for (const Row& r : read_rows(in, kRhRunHeader)) {
    RhRunRow row;
    row.rep = static_cast<std::size_t>(to_double(r[0]));
    row.window = to_double(r[1]);
    row.rh_cost = to_double(r[2]);
    row.offline_cost = to_double(r[3]);
    row.diff = to_double(r[4]);
    row.calc_time_s = to_double(r[5]);
    row.feasible = r[6] == "1";
    out.push_back(row);
  }
  return out;
}

}  // namespace dts::csv
