#pragma once

#include <filesystem>
#include <iosfwd>

#include "fedssg/generator/diffusion.hpp"

namespace fedssg::gen {

/// Generator checkpoint:
///
///   fedssg-generator v1
///   <denoiser config, guidance and clip bound as one-line JSON>
///   <alpha_bar value block>
///   <beta value block>
///   <standardizer mean block>
///   <standardizer scale block>
///   <denoiser parameter block (network then class embeddings)>
///
/// Value blocks use the parameter checkpoint encoding, so a reloaded
/// generator has the same checksum as the one written.
void write_generator(std::ostream& out, const DiffusionGenerator& generator);
DiffusionGenerator read_generator(std::istream& in);

void save_generator(const std::filesystem::path& path, const DiffusionGenerator& generator);
DiffusionGenerator load_generator(const std::filesystem::path& path);

}  // namespace fedssg::gen
