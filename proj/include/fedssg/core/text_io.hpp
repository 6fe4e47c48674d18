#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedssg/core/dataset.hpp"

namespace fedssg {

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

/// Comma-separated round-trip-exact decimals.
std::string join_doubles(std::span<const double> values);
std::vector<double> split_doubles(std::string_view text);

/// Line-delimited dataset records.
///
///   # fedssg-dataset classes=<C> domains=<J> dim=<d>
///   <label> <domain> <f0>,<f1>,...,<f{d-1}>
///
/// one sample per line, in dataset order.
void write_dataset(std::ostream& out, const Dataset& dataset);
Dataset read_dataset(std::istream& in);

void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

/// Writes `contents` to a sibling temp file and renames it over `path`, so
/// readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace fedssg
