#include "fedssg/cli/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fedssg/core/error.hpp"
#include "fedssg/core/text_io.hpp"

namespace fedssg::cli {

namespace fs = std::filesystem;

MeanStd mean_stddev(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

struct RunCsv {
  std::string label;
  std::vector<std::string> metric_columns;
  std::vector<double> final_values;
};

// Final row of a run CSV; metric columns are everything after round,label,seed.
RunCsv read_run_csv(const fs::path& path) {
  std::stringstream in(read_file(path));
  std::string header;
  std::string line;
  std::string last;
  if (!std::getline(in, header)) throw FormatError(path.string() + ": empty file");
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  if (last.empty()) throw FormatError(path.string() + ": no data rows");
  const auto cols = split_commas(header);
  const auto cells = split_commas(last);
  if (cols.size() < 4 || cells.size() != cols.size() || cols[0] != "round" || cols[1] != "label")
    throw FormatError(path.string() + ": unexpected layout");
  RunCsv r;
  r.label = cells[1];
  r.metric_columns.assign(cols.begin() + 3, cols.end());
  for (std::size_t i = 3; i < cells.size(); ++i) r.final_values.push_back(parse_double(cells[i]));
  return r;
}

std::string pct(const MeanStd& m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", 100.0 * m.mean, 100.0 * m.stddev);
  return buf;
}

}  // namespace

Report build_report(const fs::path& dir) {
  Report report;
  std::vector<fs::path> files;
  const fs::path manifest = dir / "manifest.json";
  if (fs::exists(manifest)) {
    const auto j = nlohmann::json::parse(read_file(manifest));
    for (const auto& p : j.at("planned")) {
      const fs::path f = dir / p.at("csv").get<std::string>();
      if (fs::exists(f)) {
        files.push_back(f);
      } else {
        report.missing.push_back(p.at("csv").get<std::string>());
      }
    }
  } else if (fs::is_directory(dir / "runs")) {
    for (const auto& e : fs::directory_iterator(dir / "runs"))
      if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
  }

  std::vector<std::string> order;
  std::map<std::string, std::vector<std::vector<double>>> by_label;
  for (const auto& f : files) {
    const auto run = read_run_csv(f);
    if (report.columns.empty()) report.columns = run.metric_columns;
    if (run.metric_columns != report.columns) throw FormatError(f.string() + ": columns differ from other runs");
    if (!by_label.count(run.label)) order.push_back(run.label);
    by_label[run.label].push_back(run.final_values);
  }
  for (const auto& label : order) {
    const auto& runs = by_label[label];
    ReportRow row{label, runs.size(), {}};
    for (std::size_t c = 0; c < report.columns.size(); ++c) {
      std::vector<double> v;
      for (const auto& r : runs) v.push_back(r[c]);
      row.values.push_back(mean_stddev(v));
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string format_report(const Report& report) {
  std::string out = "| method | runs |";
  for (const auto& c : report.columns) out += " " + c + " |";
  out += "\n|---|---|";
  for (std::size_t i = 0; i < report.columns.size(); ++i) out += "---|";
  out += '\n';
  for (const auto& row : report.rows) {
    out += "| " + row.label + " | " + std::to_string(row.runs) + " |";
    for (const auto& v : row.values) out += " " + pct(v) + " |";
    out += '\n';
  }
  if (!report.missing.empty()) {
    out += "\nmissing runs:\n";
    for (const auto& m : report.missing) out += "  " + m + '\n';
  }
  return out;
}

int report_command(const fs::path& dir, std::ostream& out) {
  const Report report = build_report(dir);
  if (report.empty()) {
    out << "no runs found in " << dir.string() << '\n';
    for (const auto& m : report.missing) out << "  missing " << m << '\n';
    return 2;
  }
  const std::string table = format_report(report);
  std::string csv = "label,runs";
  for (const auto& c : report.columns) csv += "," + c + "_mean," + c + "_std";
  csv += '\n';
  for (const auto& row : report.rows) {
    csv += row.label + "," + std::to_string(row.runs);
    for (const auto& v : row.values) csv += "," + format_double(v.mean) + "," + format_double(v.stddev);
    csv += '\n';
  }
  write_file_atomic(dir / "report.md", table);
  write_file_atomic(dir / "report.csv", csv);
  out << table;
  return 0;
}

}  // namespace fedssg::cli
