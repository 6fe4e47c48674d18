#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fedssg::cli {

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single value
};

MeanStd mean_stddev(std::span<const double> values);

struct ReportRow {
  std::string label;
  std::size_t runs = 0;
  std::vector<MeanStd> values;  // one per metric column
};

struct Report {
  std::vector<std::string> columns;  // metric columns, e.g. acc_CP ... f1_avg
  std::vector<ReportRow> rows;
  std::vector<std::string> missing;  // planned run files that were not found
  bool empty() const { return rows.empty(); }
};

/// Final-round metrics of every run CSV in <dir>/runs, grouped by label,
/// reduced to mean and standard deviation across seeds. Runs planned in the
/// manifest but absent are listed in `missing`.
Report build_report(const std::filesystem::path& dir);

/// Table-shaped text: one line per label, "mean ± std" in percent.
std::string format_report(const Report& report);

/// Writes report.md and report.csv next to the runs and prints the table.
/// Returns 0, or 2 with a "no runs" message when nothing was found.
int report_command(const std::filesystem::path& dir, std::ostream& out);

}  // namespace fedssg::cli
