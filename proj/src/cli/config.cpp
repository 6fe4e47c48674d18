#include "fedssg/cli/config.hpp"

#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "fedssg/allocator/allocator.hpp"
#include "fedssg/core/error.hpp"
#include "fedssg/core/text_io.hpp"

namespace fedssg::cli {

using nlohmann::json;

nn::MlpTopology ModelConfig::topology(int input_dim, int classes) const {
  nn::MlpTopology t;
  t.input_dim = input_dim;
  t.trunk = trunk;
  t.head = head;
  t.output_dim = classes;
  t.activation = activation;
  t.dropout = dropout;
  t.validate();
  return t;
}

datasynth::SplitConfig ExperimentConfig::split_config() const {
  datasynth::SplitConfig s;
  s.clients = federation.clients;
  s.clients_per_domain = clients_per_domain;
  s.dirichlet_alpha = dirichlet_alpha;
  s.test_fraction = benchmark.test_fraction;
  s.val_fraction = benchmark.val_fraction;
  return s;
}

namespace {

// Reads one JSON object field by field, recording every problem instead of
// stopping at the first.
class Section {
 public:
  Section(const json& j, std::string path, std::vector<std::string>& errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  ~Section() {
    if (!j_.is_object()) return;
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) fail(key, "unknown key");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.is_object() && j_.contains(key);
  }

  const json& raw(const std::string& key) const { return j_.at(key); }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void fail(const std::string& key, const std::string& msg) {
    errors_.push_back((key.empty() ? (path_.empty() ? std::string("<root>") : path_) : field(key)) + ": " + msg);
  }

  void integer(const std::string& key, int& out, int min, int max = std::numeric_limits<int>::max()) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) return fail(key, "expected an integer");
    const auto x = v.get<long long>();
    if (x < min || x > max) return fail(key, "must be in [" + std::to_string(min) + ", " + std::to_string(max) + "]");
    out = static_cast<int>(x);
  }

  void size(const std::string& key, std::size_t& out, long long min) {
    int tmp = static_cast<int>(out);
    const std::size_t before = errors_.size();
    integer(key, tmp, static_cast<int>(min));
    if (errors_.size() == before) out = static_cast<std::size_t>(tmp);
  }

  void number(const std::string& key, double& out, const std::function<bool(double)>& ok, const std::string& rule) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) return fail(key, "expected a number");
    const double x = v.get<double>();
    if (!ok(x)) return fail(key, rule);
    out = x;
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) return fail(key, "expected true or false");
    out = v.get<bool>();
  }

  void text(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_string()) return fail(key, "expected a string");
    out = v.get<std::string>();
  }

  void int_list(const std::string& key, std::vector<int>& out, int min, bool allow_empty) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array()) return fail(key, "expected an array of integers");
    std::vector<int> tmp;
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<long long>() < min || e.get<long long>() > std::numeric_limits<int>::max())
        return fail(key, "expected integers >= " + std::to_string(min));
      tmp.push_back(static_cast<int>(e.get<long long>()));
    }
    if (!allow_empty && tmp.empty()) return fail(key, "must not be empty");
    out = std::move(tmp);
  }

  void number_list(const std::string& key, std::vector<double>& out, double min) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array()) return fail(key, "expected an array of numbers");
    std::vector<double> tmp;
    for (const auto& e : v) {
      if (!e.is_number() || !(e.get<double>() >= min)) return fail(key, "expected numbers >= " + format_double(min));
      tmp.push_back(e.get<double>());
    }
    out = std::move(tmp);
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

auto positive = [](double x) { return x > 0.0; };
auto nonneg = [](double x) { return x >= 0.0; };
auto unit_open = [](double x) { return x > 0.0 && x < 1.0; };

void read_benchmark(Section& s, datasynth::BenchmarkKnobs& b) {
  s.integer("dim", b.dim, 1);
  s.number("scale_divisor", b.scale_divisor, positive, "must be > 0");
  s.number("class_separation", b.class_separation, nonneg, "must be >= 0");
  s.number("noise_scale", b.noise_scale, nonneg, "must be >= 0");
  s.number("shift_scale", b.shift_scale, nonneg, "must be >= 0");
  s.number("rotation_strength", b.rotation_strength, nonneg, "must be >= 0");
  s.number("public_perturbation", b.public_perturbation, nonneg, "must be >= 0");
  s.number("test_fraction", b.test_fraction, unit_open, "must be in (0, 1)");
  s.number("val_fraction", b.val_fraction, [](double x) { return x >= 0.0 && x < 1.0; }, "must be in [0, 1)");
}

void read_split(Section& s, ExperimentConfig& c) {
  if (s.has("clients_per_domain")) {
    if (s.raw("clients_per_domain").is_null()) {
      c.clients_per_domain.reset();
    } else {
      std::vector<int> v;
      const auto before = c.clients_per_domain;
      s.int_list("clients_per_domain", v, 1, false);
      c.clients_per_domain = v.empty() ? before : std::optional<std::vector<int>>(v);
    }
  }
  s.number("dirichlet_alpha", c.dirichlet_alpha, positive, "must be > 0");
}

void read_model(Section& s, ModelConfig& m) {
  s.int_list("trunk", m.trunk, 1, true);
  s.int_list("head", m.head, 1, true);
  s.number("dropout", m.dropout, [](double x) { return x >= 0.0 && x < 1.0; }, "must be in [0, 1)");
  std::string act = nn::to_string(m.activation);
  s.text("activation", act);
  try {
    m.activation = nn::activation_from_string(act);
  } catch (const ConfigError&) {
    s.fail("activation", "expected relu, silu or identity");
  }
}

void read_pretrain(Section& s, fed::PretrainConfig& p) {
  s.integer("max_epochs", p.max_epochs, 0);
  s.size("batch_size", p.batch_size, 1);
  s.number("head_lr", p.head_lr, nonneg, "must be >= 0");
  s.number("trunk_lr", p.trunk_lr, nonneg, "must be >= 0");
  s.number("weight_decay", p.weight_decay, nonneg, "must be >= 0");
  s.integer("early_stopping_patience", p.early_stopping_patience, 1);
  s.number("val_fraction", p.val_fraction, unit_open, "must be in (0, 1)");
  s.number("plateau_factor", p.plateau.factor, unit_open, "must be in (0, 1)");
  s.integer("plateau_patience", p.plateau.patience, 1);
  s.number("plateau_min_delta", p.plateau.min_delta, nonneg, "must be >= 0");
}

void read_generator(Section& s, GeneratorSettings& g) {
  std::string kind = g.kind == GeneratorKind::Diffusion ? "diffusion" : "gmm";
  s.text("kind", kind);
  if (kind == "diffusion") {
    g.kind = GeneratorKind::Diffusion;
  } else if (kind == "gmm") {
    g.kind = GeneratorKind::Gmm;
  } else {
    s.fail("kind", "expected diffusion or gmm");
  }
  auto& d = g.diffusion;
  s.integer("steps", d.steps, 2);
  s.integer("epochs", d.epochs, 0);
  s.size("batch_size", d.batch_size, 1);
  s.number("learning_rate", d.learning_rate, positive, "must be > 0");
  s.number("grad_clip", d.grad_clip, positive, "must be > 0");
  s.number("cond_drop", d.cond_drop, [](double x) { return x >= 0.0 && x <= 1.0; }, "must be in [0, 1]");
  s.number("guidance", d.guidance, nonneg, "must be >= 0");
  s.int_list("hidden", d.hidden, 1, true);
  s.integer("time_embed_dim", d.time_embed_dim, 2);
  if (d.time_embed_dim % 2 != 0) s.fail("time_embed_dim", "must be even");
  s.integer("class_embed_dim", d.class_embed_dim, 1);
  s.number("x0_clip_factor", d.x0_clip_factor, positive, "must be > 0");
  s.number("ema_decay", d.ema_decay, [](double x) { return x >= 0.0 && x < 1.0; }, "must be in [0, 1)");
  s.integer("gmm_components", g.gmm_components, 1);
}

void read_allocator(Section& s, ExperimentConfig& c) {
  s.number("epsilon", c.federation.epsilon, positive, "must be > 0");
  s.number_list("domain_scales", c.federation.domain_scales, 0.0);
  s.boolean("allow_non_monotone", c.allow_non_monotone_scales);
}

void read_federation(Section& s, fed::FederationConfig& f) {
  s.integer("clients", f.clients, 1);
  s.integer("active_per_round", f.active_per_round, 1);
  s.integer("rounds", f.rounds, 1);
  s.integer("local_epochs", f.local_epochs, 0);
  s.size("batch_size", f.batch_size, 1);
  std::string strategy = fed::to_string(f.objective.strategy);
  s.text("strategy", strategy);
  try {
    f.objective.strategy = fed::strategy_from_string(strategy);
  } catch (const ConfigError&) {
    s.fail("strategy", "expected fedavg, fedprox or moon");
  }
  s.number("prox_mu", f.objective.prox_mu, nonneg, "must be >= 0");
  s.number("moon_mu", f.objective.moon_mu, nonneg, "must be >= 0");
  s.number("moon_tau", f.objective.moon_tau, positive, "must be > 0");
  s.boolean("augmentation", f.use_synthetic_augmentation);
  s.boolean("pretraining", f.use_pretraining);
  std::string weighting = fed::to_string(f.aggregation_weighting);
  s.text("aggregation_weighting", weighting);
  try {
    f.aggregation_weighting = fed::weighting_from_string(weighting);
  } catch (const ConfigError&) {
    s.fail("aggregation_weighting", "expected real or augmented");
  }
  s.integer("eval_interval", f.eval_interval, 1);
  s.boolean("regenerate_each_round", f.regenerate_each_round);
  s.boolean("class_balanced_local", f.class_balanced_local);
  s.number("local_trunk_lr", f.local_trunk_lr, nonneg, "must be >= 0");
  s.number("local_head_lr", f.local_head_lr, nonneg, "must be >= 0");
  s.number("local_weight_decay", f.local_weight_decay, nonneg, "must be >= 0");
  s.boolean("permute_execution", f.permute_execution);
}

template <class F>
void section(Section& root, const std::string& key, std::vector<std::string>& errors, F&& body) {
  if (!root.has(key)) return;
  Section s(root.raw(key), root.field(key), errors);
  if (root.raw(key).is_object()) body(s);
}

void read_all(const json& j, ExperimentConfig& c, std::vector<std::string>& errors, const std::string& path,
              bool allow_runs) {
  Section root(j, path, errors);
  if (!j.is_object()) return;
  section(root, "benchmark", errors, [&](Section& s) { read_benchmark(s, c.benchmark); });
  section(root, "split", errors, [&](Section& s) { read_split(s, c); });
  section(root, "model", errors, [&](Section& s) { read_model(s, c.model); });
  section(root, "pretrain", errors, [&](Section& s) { read_pretrain(s, c.pretrain); });
  section(root, "generator", errors, [&](Section& s) { read_generator(s, c.generator); });
  section(root, "allocator", errors, [&](Section& s) { read_allocator(s, c); });
  section(root, "federation", errors, [&](Section& s) { read_federation(s, c.federation); });
  if (root.has("seeds")) {
    const auto& v = root.raw("seeds");
    std::vector<std::uint64_t> seeds;
    bool ok = v.is_array() && !v.empty();
    if (ok)
      for (const auto& e : v) {
        if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<long long>() >= 0)) {
          ok = false;
          break;
        }
        seeds.push_back(e.get<std::uint64_t>());
      }
    if (ok) {
      c.seeds = seeds;
    } else {
      root.fail("seeds", "expected a nonempty array of nonnegative integers");
    }
  }
  root.text("output_dir", c.output_dir);
  if (root.has("preset") && !root.raw("preset").is_string()) root.fail("preset", "expected a string");
  if (root.has("runs")) {
    const auto& v = root.raw("runs");
    if (!allow_runs) {
      root.fail("runs", "runs cannot be nested inside a run override");
    } else if (!v.is_array()) {
      root.fail("runs", "expected an array of {label, overrides}");
    } else {
      c.runs.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string p = root.field("runs") + "[" + std::to_string(i) + "]";
        Section r(v[i], p, errors);
        if (!v[i].is_object()) continue;
        RunSpec spec;
        r.text("label", spec.label);
        if (spec.label.empty()) r.fail("label", "required, nonempty");
        if (spec.label.find_first_of("/\\ ") != std::string::npos) r.fail("label", "must not contain '/', '\\' or spaces");
        if (r.has("overrides")) {
          spec.overrides = v[i].at("overrides");
          if (!spec.overrides.is_object()) {
            r.fail("overrides", "expected an object");
          } else {
            // Check the patch on its own so errors point into the run.
            ExperimentConfig scratch;
            read_all(spec.overrides, scratch, errors, p + ".overrides", false);
          }
        }
        c.runs.push_back(std::move(spec));
      }
    }
  }
}

json merge(json base, const json& patch) {
  base.merge_patch(patch);
  return base;
}

json run(const std::string& label, json overrides) { return {{"label", label}, {"overrides", std::move(overrides)}}; }

const json kFedSsg = {{"federation", {{"strategy", "fedavg"}, {"augmentation", true}}}};

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  std::vector<std::string> errors;
  read_all(j, c, errors, "", true);
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  const auto& b = c.benchmark;
  const auto& p = c.pretrain;
  const auto& g = c.generator.diffusion;
  const auto& f = c.federation;
  json runs = json::array();
  for (const auto& r : c.runs) runs.push_back(run(r.label, r.overrides));
  return {
      {"benchmark",
       {{"dim", b.dim},
        {"scale_divisor", b.scale_divisor},
        {"class_separation", b.class_separation},
        {"noise_scale", b.noise_scale},
        {"shift_scale", b.shift_scale},
        {"rotation_strength", b.rotation_strength},
        {"public_perturbation", b.public_perturbation},
        {"test_fraction", b.test_fraction},
        {"val_fraction", b.val_fraction}}},
      {"split",
       {{"clients_per_domain", c.clients_per_domain ? json(*c.clients_per_domain) : json(nullptr)},
        {"dirichlet_alpha", c.dirichlet_alpha}}},
      {"model",
       {{"trunk", c.model.trunk},
        {"head", c.model.head},
        {"dropout", c.model.dropout},
        {"activation", nn::to_string(c.model.activation)}}},
      {"pretrain",
       {{"max_epochs", p.max_epochs},
        {"batch_size", p.batch_size},
        {"head_lr", p.head_lr},
        {"trunk_lr", p.trunk_lr},
        {"weight_decay", p.weight_decay},
        {"early_stopping_patience", p.early_stopping_patience},
        {"val_fraction", p.val_fraction},
        {"plateau_factor", p.plateau.factor},
        {"plateau_patience", p.plateau.patience},
        {"plateau_min_delta", p.plateau.min_delta}}},
      {"generator",
       {{"kind", c.generator.kind == GeneratorKind::Diffusion ? "diffusion" : "gmm"},
        {"steps", g.steps},
        {"epochs", g.epochs},
        {"batch_size", g.batch_size},
        {"learning_rate", g.learning_rate},
        {"grad_clip", g.grad_clip},
        {"cond_drop", g.cond_drop},
        {"guidance", g.guidance},
        {"hidden", g.hidden},
        {"time_embed_dim", g.time_embed_dim},
        {"class_embed_dim", g.class_embed_dim},
        {"x0_clip_factor", g.x0_clip_factor},
        {"ema_decay", g.ema_decay},
        {"gmm_components", c.generator.gmm_components}}},
      {"allocator",
       {{"epsilon", f.epsilon},
        {"domain_scales", f.domain_scales},
        {"allow_non_monotone", c.allow_non_monotone_scales}}},
      {"federation",
       {{"clients", f.clients},
        {"active_per_round", f.active_per_round},
        {"rounds", f.rounds},
        {"local_epochs", f.local_epochs},
        {"batch_size", f.batch_size},
        {"strategy", fed::to_string(f.objective.strategy)},
        {"prox_mu", f.objective.prox_mu},
        {"moon_mu", f.objective.moon_mu},
        {"moon_tau", f.objective.moon_tau},
        {"augmentation", f.use_synthetic_augmentation},
        {"pretraining", f.use_pretraining},
        {"aggregation_weighting", fed::to_string(f.aggregation_weighting)},
        {"eval_interval", f.eval_interval},
        {"regenerate_each_round", f.regenerate_each_round},
        {"class_balanced_local", f.class_balanced_local},
        {"local_trunk_lr", f.local_trunk_lr},
        {"local_head_lr", f.local_head_lr},
        {"local_weight_decay", f.local_weight_decay},
        {"permute_execution", f.permute_execution}}},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir},
      {"runs", runs},
  };
}

json default_config_json() {
  ExperimentConfig c;
  // Device-proportional client split of the default 85-client federation.
  c.clients_per_domain = std::vector<int>{56, 24, 5};
  return config_to_json(c);
}

std::vector<std::string> preset_names() { return {"table2", "table4", "clients", "longer", "desk"}; }

json preset_json(const std::string& name) {
  if (name == "table2") {
    json runs = json::array();
    for (bool pre : {true, false}) {
      const std::string suffix = pre ? "" : "-scratch";
      const json p = {{"federation", {{"pretraining", pre}}}};
      runs.push_back(run("fedavg" + suffix, merge(p, {{"federation", {{"strategy", "fedavg"}}}})));
      runs.push_back(run("moon" + suffix, merge(p, {{"federation", {{"strategy", "moon"}}}})));
      runs.push_back(run("fedprox" + suffix, merge(p, {{"federation", {{"strategy", "fedprox"}}}})));
      runs.push_back(run("fedssg" + suffix, merge(p, kFedSsg)));
    }
    return {{"runs", runs}};
  }
  if (name == "table4") {
    json runs = json::array();
    const std::vector<std::vector<double>> grids = {{50, 50, 50}, {10, 25, 40}, {20, 50, 80}, {40, 100, 160}};
    for (const auto& s : grids) {
      std::string label = "fedssg-S";
      for (std::size_t i = 0; i < s.size(); ++i) label += (i ? "-" : "") + std::to_string(static_cast<int>(s[i]));
      const bool equal = s[0] == s[1];
      runs.push_back(run(label, merge(kFedSsg, {{"allocator", {{"domain_scales", s}, {"allow_non_monotone", equal}}}})));
    }
    return {{"runs", runs}};
  }
  if (name == "clients") {
    json runs = json::array();
    auto pair = [&](const std::string& tag, const json& patch) {
      runs.push_back(run("fedavg-" + tag, patch));
      runs.push_back(run("fedssg-" + tag, merge(patch, kFedSsg)));
    };
    for (int k : {70, 85, 100}) {
      json patch = {{"federation", {{"clients", k}, {"active_per_round", 6}}}};
      if (k != 85) patch["split"] = {{"clients_per_domain", nullptr}};
      pair("K" + std::to_string(k), patch);
    }
    for (int a : {4, 8}) pair("active" + std::to_string(a), {{"federation", {{"active_per_round", a}}}});
    return {{"runs", runs}};
  }
  if (name == "longer") {
    return {{"federation", {{"rounds", 300}}}, {"runs", json::array({run("fedssg-300", kFedSsg)})}};
  }
  if (name == "desk") {
    return {{"split", {{"clients_per_domain", nullptr}}},
            {"federation", {{"clients", 20}, {"active_per_round", 6}, {"rounds", 40}}},
            {"seeds", {1, 2, 3, 4, 5}},
            {"runs", json::array({run("fedavg", json::object()), run("fedssg", kFedSsg),
                                  run("fedavg-scratch", {{"federation", {{"pretraining", false}}}})})}};
  }
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

json resolve_config_json(const ConfigSources& sources) {
  json file = json::object();
  if (sources.config_file) {
    try {
      file = json::parse(read_file(*sources.config_file));
    } catch (const json::parse_error& e) {
      throw ConfigError(sources.config_file->string() + ": not valid JSON: " + e.what());
    } catch (const FormatError& e) {
      throw ConfigError(e.what());
    }
    if (!file.is_object()) throw ConfigError(sources.config_file->string() + ": top level must be an object");
  }
  std::optional<std::string> preset = sources.preset;
  if (!preset && file.contains("preset")) {
    if (!file["preset"].is_string()) throw ConfigError("preset: expected a string");
    preset = file["preset"].get<std::string>();
  }
  file.erase("preset");
  json j = default_config_json();
  if (preset) j.merge_patch(preset_json(*preset));
  j.merge_patch(file);
  if (sources.seed) j["seeds"] = json::array({*sources.seed});
  if (sources.output_dir) j["output_dir"] = *sources.output_dir;
  return j;
}

ExperimentConfig load_config(const ConfigSources& sources) { return parse_config(resolve_config_json(sources)); }

std::string default_label(const ExperimentConfig& c) {
  std::string label = c.federation.use_synthetic_augmentation ? "fedssg" : fed::to_string(c.federation.objective.strategy);
  if (c.federation.use_synthetic_augmentation && c.federation.objective.strategy != fed::Strategy::FedAvg)
    label += "-" + fed::to_string(c.federation.objective.strategy);
  if (!c.federation.use_pretraining) label += "-scratch";
  return label;
}

void check_experiment(const ExperimentConfig& c) {
  std::vector<std::string> errors;
  const int domains = static_cast<int>(datasynth::kTypedCounts.size());
  const auto& f = c.federation;
  if (f.active_per_round > f.clients) errors.push_back("federation.active_per_round: exceeds federation.clients");
  if (f.clients < domains)
    errors.push_back("federation.clients: need at least one client per domain (" + std::to_string(domains) + ")");
  if (c.clients_per_domain) {
    int sum = 0;
    for (int v : *c.clients_per_domain) sum += v;
    if (static_cast<int>(c.clients_per_domain->size()) != domains)
      errors.push_back("split.clients_per_domain: expected " + std::to_string(domains) + " entries");
    else if (sum != f.clients)
      errors.push_back("split.clients_per_domain: sums to " + std::to_string(sum) + " but federation.clients is " +
                       std::to_string(f.clients) + " (set it to null for the proportional assignment)");
  }
  if (static_cast<int>(f.domain_scales.size()) != domains)
    errors.push_back("allocator.domain_scales: expected " + std::to_string(domains) + " entries");
  if (c.benchmark.test_fraction + c.benchmark.val_fraction >= 1.0)
    errors.push_back("benchmark: test_fraction + val_fraction must be < 1");
  try {
    c.model.topology(c.benchmark.dim, static_cast<int>(datasynth::kUntypedCounts.size()));
  } catch (const ConfigError& e) {
    errors.push_back(std::string("model: ") + e.what());
  }
  if (f.use_synthetic_augmentation && static_cast<int>(f.domain_scales.size()) == domains &&
      !c.allow_non_monotone_scales) {
    std::vector<std::int64_t> sizes;
    for (const auto& row : datasynth::kTypedCounts) {
      const auto scaled = datasynth::scale_counts(row, c.benchmark.scale_divisor);
      std::int64_t s = 0;
      for (int v : scaled) s += v;
      sizes.push_back(s);
    }
    const auto violations = alloc::validate_domain_scales(sizes, f.domain_scales);
    if (!violations.empty()) {
      std::string msg = "allocator.domain_scales: validate_domain_scales reports";
      for (const auto& v : violations)
        msg += " (" + datasynth::kDomainNames[static_cast<std::size_t>(v.larger_domain)] + " larger than " +
               datasynth::kDomainNames[static_cast<std::size_t>(v.smaller_domain)] + " but scale not smaller)";
      msg += "; set allocator.allow_non_monotone to accept";
      errors.push_back(msg);
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
}

std::vector<ResolvedRun> expand_runs(const ExperimentConfig& c) {
  json base = config_to_json(c);
  base.erase("runs");
  std::vector<ResolvedRun> out;
  if (c.runs.empty()) {
    ExperimentConfig single = c;
    single.runs.clear();
    check_experiment(single);
    out.push_back({default_label(single), single});
    return out;
  }
  std::set<std::string> labels;
  for (const auto& r : c.runs) {
    if (!labels.insert(r.label).second) throw ConfigError("runs: duplicate label '" + r.label + "'");
    ExperimentConfig rc;
    try {
      rc = parse_config(merge(base, r.overrides));
      check_experiment(rc);
    } catch (const ConfigError& e) {
      throw ConfigError("run '" + r.label + "': " + e.what());
    }
    out.push_back({r.label, std::move(rc)});
  }
  return out;
}

}  // namespace fedssg::cli
