#include "fedssg/nn/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "fedssg/core/error.hpp"
#include "fedssg/core/text_io.hpp"

namespace fedssg::nn {

nlohmann::json topology_to_json(const MlpTopology& t) {
  return {{"input_dim", t.input_dim},   {"trunk", t.trunk},
          {"head", t.head},             {"output_dim", t.output_dim},
          {"activation", to_string(t.activation)}, {"dropout", t.dropout},
          {"head_norm", t.head_norm}};
}

MlpTopology topology_from_json(const nlohmann::json& j) {
  MlpTopology t;
  try {
    t.input_dim = j.at("input_dim").get<int>();
    t.trunk = j.at("trunk").get<std::vector<int>>();
    t.head = j.at("head").get<std::vector<int>>();
    t.output_dim = j.at("output_dim").get<int>();
    t.activation = activation_from_string(j.at("activation").get<std::string>());
    t.dropout = j.at("dropout").get<double>();
    t.head_norm = j.at("head_norm").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad topology descriptor: ") + e.what());
  }
  t.validate();
  return t;
}

void write_value_block(std::ostream& out, std::span<const double> values) {
  out << values.size() << '\n';
  for (double v : values) out << format_double(v) << '\n';
}

std::vector<double> read_value_block(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing value count");
  const long long n = parse_int(line);
  if (n < 0) throw FormatError("negative value count");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw FormatError("truncated value block");
    values.push_back(parse_double(line));
  }
  return values;
}

void write_params(std::ostream& out, const ParamVector& params) {
  out << "fedssg-params v1\n" << topology_to_json(params.topology).dump() << '\n';
  write_value_block(out, params.values);
}

ParamVector read_params(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "fedssg-params v1") throw FormatError("not a parameter checkpoint");
  if (!std::getline(in, line)) throw FormatError("missing topology line");
  ParamVector p;
  try {
    p.topology = topology_from_json(nlohmann::json::parse(line));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("bad topology line: ") + e.what());
  }
  p.values = read_value_block(in);
  if (p.values.size() != p.topology.param_count()) throw FormatError("value count does not match topology");
  return p;
}

void save_params(const std::filesystem::path& path, const ParamVector& params) {
  std::ostringstream os;
  write_params(os, params);
  write_file_atomic(path, os.str());
}

ParamVector load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_params(in);
}

}  // namespace fedssg::nn
