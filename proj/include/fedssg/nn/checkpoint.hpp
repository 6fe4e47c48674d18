#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "fedssg/nn/mlp.hpp"

namespace fedssg::nn {

nlohmann::json topology_to_json(const MlpTopology& topology);
MlpTopology topology_from_json(const nlohmann::json& j);

/// Parameter checkpoint:
///
///   fedssg-params v1
///   <topology as one-line JSON>
///   <count>
///   <value>            (one round-trip-exact decimal per line)
void write_params(std::ostream& out, const ParamVector& params);
ParamVector read_params(std::istream& in);

void save_params(const std::filesystem::path& path, const ParamVector& params);
ParamVector load_params(const std::filesystem::path& path);

/// Bare value block (`<count>` line then one value per line), shared with
/// other checkpoint kinds.
void write_value_block(std::ostream& out, std::span<const double> values);
std::vector<double> read_value_block(std::istream& in);

}  // namespace fedssg::nn
