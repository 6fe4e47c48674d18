#include "fedssg/generator/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fedssg/core/error.hpp"
#include "fedssg/core/text_io.hpp"
#include "fedssg/nn/checkpoint.hpp"

namespace fedssg::gen {

void write_generator(std::ostream& out, const DiffusionGenerator& g) {
  const auto& c = g.denoiser().config();
  const nlohmann::json header = {{"dim", c.dim},
                                 {"classes", c.classes},
                                 {"time_embed_dim", c.time_embed_dim},
                                 {"class_embed_dim", c.class_embed_dim},
                                 {"hidden", c.hidden},
                                 {"activation", nn::to_string(c.activation)},
                                 {"steps", g.schedule().steps},
                                 {"guidance", format_double(g.guidance())},
                                 {"x0_clip", format_double(g.x0_clip())}};
  out << "fedssg-generator v1\n" << header.dump() << '\n';
  nn::write_value_block(out, g.schedule().alpha_bar);
  nn::write_value_block(out, g.schedule().beta);
  nn::write_value_block(out, g.standardizer().mean);
  nn::write_value_block(out, g.standardizer().scale);
  nn::write_value_block(out, g.denoiser().params());
}

DiffusionGenerator read_generator(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "fedssg-generator v1") throw FormatError("not a generator checkpoint");
  if (!std::getline(in, line)) throw FormatError("missing generator header");
  DenoiserConfig c;
  int steps = 0;
  double guidance = 0.0;
  double clip = 0.0;
  try {
    const auto h = nlohmann::json::parse(line);
    c.dim = h.at("dim").get<int>();
    c.classes = h.at("classes").get<int>();
    c.time_embed_dim = h.at("time_embed_dim").get<int>();
    c.class_embed_dim = h.at("class_embed_dim").get<int>();
    c.hidden = h.at("hidden").get<std::vector<int>>();
    c.activation = nn::activation_from_string(h.at("activation").get<std::string>());
    steps = h.at("steps").get<int>();
    guidance = parse_double(h.at("guidance").get<std::string>());
    clip = parse_double(h.at("x0_clip").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad generator header: ") + e.what());
  }
  NoiseSchedule s;
  s.steps = steps;
  s.alpha_bar = nn::read_value_block(in);
  s.beta = nn::read_value_block(in);
  const auto expected = static_cast<std::size_t>(steps) + 1;
  if (s.alpha_bar.size() != expected || s.beta.size() != expected) throw FormatError("schedule length mismatch");
  s.alpha.resize(expected);
  for (std::size_t t = 0; t < expected; ++t) s.alpha[t] = 1.0 - s.beta[t];
  Standardizer st{nn::read_value_block(in), nn::read_value_block(in)};
  auto params = nn::read_value_block(in);
  try {
    return DiffusionGenerator(Denoiser(c, std::move(params)), std::move(s), std::move(st), guidance, clip);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("inconsistent generator checkpoint: ") + e.what());
  }
}

void save_generator(const std::filesystem::path& path, const DiffusionGenerator& generator) {
  std::ostringstream os;
  write_generator(os, generator);
  write_file_atomic(path, os.str());
}

DiffusionGenerator load_generator(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_generator(in);
}

}  // namespace fedssg::gen
