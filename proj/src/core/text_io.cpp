#include "fedssg/core/text_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "fedssg/core/error.hpp"

namespace fedssg {

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw FormatError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

long long parse_int(std::string_view text) {
  long long value = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw FormatError("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

std::string join_doubles(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

std::vector<double> split_doubles(std::string_view text) {
  std::vector<double> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = text.find(',', start);
    out.push_back(parse_double(text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  out << "# fedssg-dataset classes=" << dataset.classes() << " domains=" << dataset.domains()
      << " dim=" << dataset.dim() << '\n';
  for (const auto& s : dataset.samples()) {
    out << s.label << ' ' << s.domain << ' ' << join_doubles(s.features) << '\n';
  }
}

namespace {

int header_field(const std::string& header, const std::string& key) {
  const std::string tag = key + "=";
  auto pos = header.find(tag);
  if (pos == std::string::npos) throw FormatError("dataset header lacks '" + key + "'");
  pos += tag.size();
  auto end = header.find(' ', pos);
  return static_cast<int>(parse_int(std::string_view(header).substr(pos, end - pos)));
}

}  // namespace

Dataset read_dataset(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("# fedssg-dataset", 0) != 0) {
    throw FormatError("missing dataset header");
  }
  const int classes = header_field(header, "classes");
  const int domains = header_field(header, "domains");
  const int dim = header_field(header, "dim");

  std::vector<Sample> samples;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto sp1 = line.find(' ');
    auto sp2 = sp1 == std::string::npos ? sp1 : line.find(' ', sp1 + 1);
    if (sp2 == std::string::npos) throw FormatError("dataset line " + std::to_string(line_no) + ": expected 3 fields");
    std::string_view view(line);
    Sample s;
    s.label = static_cast<int>(parse_int(view.substr(0, sp1)));
    s.domain = static_cast<int>(parse_int(view.substr(sp1 + 1, sp2 - sp1 - 1)));
    s.features = split_doubles(view.substr(sp2 + 1));
    samples.push_back(std::move(s));
  }
  return Dataset(std::move(samples), classes, domains, dim);
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ostringstream os;
  write_dataset(os, dataset);
  write_file_atomic(path, os.str());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_dataset(in);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw FormatError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fedssg
