#include <doctest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "fedssg/cli/config.hpp"
#include "fedssg/cli/experiment.hpp"
#include "fedssg/cli/report.hpp"
#include "fedssg/core/error.hpp"
#include "fedssg/core/text_io.hpp"

using namespace fedssg;
using namespace fedssg::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("fedssg_test_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string error_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

// A configuration small enough to run end to end in a few seconds.
json tiny_config(const fs::path& out) {
  return {{"benchmark", {{"dim", 6}, {"scale_divisor", 40.0}}},
          {"split", {{"clients_per_domain", nullptr}}},
          {"model", {{"trunk", {12}}, {"head", {8}}}},
          {"pretrain", {{"max_epochs", 3}}},
          {"generator", {{"steps", 16}, {"epochs", 2}, {"hidden", {16}}}},
          {"federation", {{"clients", 6}, {"active_per_round", 3}, {"rounds", 4}, {"eval_interval", 2}}},
          {"seeds", {3}},
          {"output_dir", out.string()},
          {"runs", json::array({{{"label", "fedavg"}}, {{"label", "fedssg"}, {"overrides", {{"federation", {{"augmentation", true}}}}}}})}};
}

}  // namespace

TEST_CASE("default configuration round-trips through json") {
  const auto j = default_config_json();
  const auto c = parse_config(j);
  CHECK(config_to_json(c) == j);
  CHECK(c.clients_per_domain == std::vector<int>{56, 24, 5});
  CHECK(c.federation.clients == 85);
  CHECK(c.federation.domain_scales == std::vector<double>{20, 50, 80});
  CHECK(c.generator.diffusion.steps == 512);
  CHECK(c.generator.diffusion.guidance == 5.0);
  CHECK(c.dirichlet_alpha == 0.5);
  ExperimentConfig with_runs = c;
  with_runs.runs.push_back({"x", {{"federation", {{"rounds", 3}}}}});
  CHECK(parse_config(config_to_json(with_runs)) == with_runs);
}

TEST_CASE("unknown keys and bad values are all reported with their paths") {
  const auto msg = error_of({{"federation", {{"roundz", 3}, {"clients", -1}}}, {"bogus", 1}, {"model", {{"dropout", 2.0}}}});
  CHECK(msg.find("federation.roundz") != std::string::npos);
  CHECK(msg.find("federation.clients") != std::string::npos);
  CHECK(msg.find("bogus") != std::string::npos);
  CHECK(msg.find("model.dropout") != std::string::npos);
  CHECK(error_of({{"federation", {{"strategy", "fedsgd"}}}}).find("federation.strategy") != std::string::npos);
  CHECK(error_of({{"seeds", json::array()}}).find("seeds") != std::string::npos);
  CHECK(error_of({{"runs", json::array({{{"label", "a"}, {"overrides", {{"federation", {{"nope", 1}}}}}}})}})
            .find("runs[0].overrides.federation.nope") != std::string::npos);
  CHECK(error_of({{"federation", {{"rounds", 2.5}}}}).find("federation.rounds") != std::string::npos);
}

TEST_CASE("cross-field checks") {
  auto c = parse_config(default_config_json());
  c.federation.clients = 20;
  CHECK_THROWS_WITH_AS(check_experiment(c), doctest::Contains("clients_per_domain"), ConfigError);
  c.clients_per_domain.reset();
  check_experiment(c);
  c.federation.use_synthetic_augmentation = true;
  c.federation.domain_scales = {50, 50, 50};
  CHECK_THROWS_WITH_AS(check_experiment(c), doctest::Contains("validate_domain_scales"), ConfigError);
  c.allow_non_monotone_scales = true;
  check_experiment(c);
  c.federation.active_per_round = 30;
  CHECK_THROWS_AS(check_experiment(c), ConfigError);
}

TEST_CASE("every preset expands into valid runs") {
  for (const auto& name : preset_names()) {
    ConfigSources src;
    src.preset = name;
    CHECK_NOTHROW(expand_runs(load_config(src)));
  }
  CHECK_THROWS_AS(preset_json("nope"), ConfigError);

  ConfigSources t2;
  t2.preset = "table2";
  const auto runs = expand_runs(load_config(t2));
  REQUIRE(runs.size() == 8);
  CHECK(runs[0].label == "fedavg");
  CHECK(runs[3].label == "fedssg");
  CHECK(runs[3].config.federation.use_synthetic_augmentation);
  CHECK(runs[1].config.federation.objective.strategy == fed::Strategy::Moon);
  CHECK_FALSE(runs[4].config.federation.use_pretraining);
  for (const auto& r : runs) CHECK(default_label(r.config) == r.label);

  ConfigSources desk;
  desk.preset = "desk";
  const auto d = load_config(desk);
  CHECK(d.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  CHECK_FALSE(d.clients_per_domain.has_value());
  CHECK(d.federation.clients == 20);
  CHECK(expand_runs(d).size() == 3);

  ConfigSources t4;
  t4.preset = "table4";
  const auto r4 = expand_runs(load_config(t4));
  REQUIRE(r4.size() == 4);
  CHECK(r4[0].config.allow_non_monotone_scales);
  CHECK(r4[2].config.federation.domain_scales == std::vector<double>{20, 50, 80});
}

TEST_CASE("sources merge as defaults, preset, file, flags") {
  const auto dir = scratch_dir("merge");
  write_file_atomic(dir / "c.json", R"({"preset": "desk", "federation": {"rounds": 7}, "seeds": [9, 10]})");
  ConfigSources src;
  src.config_file = dir / "c.json";
  auto c = load_config(src);
  CHECK(c.federation.rounds == 7);       // file over preset
  CHECK(c.federation.clients == 20);     // preset over defaults
  CHECK(c.seeds == std::vector<std::uint64_t>{9, 10});
  src.seed = 4;
  src.output_dir = "elsewhere";
  c = load_config(src);
  CHECK(c.seeds == std::vector<std::uint64_t>{4});  // flag over file
  CHECK(c.output_dir == "elsewhere");
  src.preset = "longer";  // flag preset replaces the file's
  CHECK(load_config(src).runs.front().label == "fedssg-300");

  write_file_atomic(dir / "bad.json", "{not json");
  ConfigSources bad;
  bad.config_file = dir / "bad.json";
  CHECK_THROWS_AS(load_config(bad), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("mean and sample standard deviation") {
  const std::vector<double> v = {1.0, 2.0, 4.0};
  const auto m = mean_stddev(v);
  CHECK(m.mean == doctest::Approx(7.0 / 3.0));
  CHECK(m.stddev == doctest::Approx(std::sqrt((16.0 / 9 + 1.0 / 9 + 25.0 / 9) / 2.0)));
  const std::vector<double> one = {0.5};
  CHECK(mean_stddev(one).stddev == 0.0);
}

TEST_CASE("report aggregates final rows across seeds and flags missing runs") {
  const auto dir = scratch_dir("report");
  std::ostringstream log;
  CHECK(report_command(dir, log) == 2);
  CHECK(log.str().find("no runs") != std::string::npos);

  fs::create_directories(dir / "runs");
  const std::string header = "round,label,seed,acc_CP,acc_avg\n";
  write_file_atomic(dir / "runs/a__seed1.csv", header + "5,a,1,0.1,0.2\n10,a,1,0.5,0.6\n");
  write_file_atomic(dir / "runs/a__seed2.csv", header + "10,a,2,0.7,0.8\n");
  write_file_atomic(dir / "runs/b__seed1.csv", header + "10,b,1,0.9,0.9\n");
  auto rep = build_report(dir);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.columns == std::vector<std::string>{"acc_CP", "acc_avg"});
  CHECK(rep.rows[0].label == "a");
  CHECK(rep.rows[0].runs == 2);
  CHECK(rep.rows[0].values[0].mean == doctest::Approx(0.6));
  CHECK(rep.rows[0].values[0].stddev == doctest::Approx(std::sqrt(0.02)));
  const auto table = format_report(rep);
  CHECK(table.find("| a | 2 | 60.00 ± 14.14 | 70.00 ± 14.14 |") != std::string::npos);

  write_file_atomic(dir / "manifest.json",
                    json{{"planned", json::array({{{"csv", "runs/a__seed1.csv"}}, {{"csv", "runs/c__seed1.csv"}}})}}.dump());
  rep = build_report(dir);
  CHECK(rep.rows.size() == 1);
  CHECK(rep.missing == std::vector<std::string>{"runs/c__seed1.csv"});
  CHECK(report_command(dir, log) == 0);
  CHECK(fs::exists(dir / "report.md"));
  CHECK(fs::exists(dir / "report.csv"));
  fs::remove_all(dir);
}

TEST_CASE("history csv layout") {
  CHECK(csv_columns({"CP", "CNP", "NCP"}) ==
        std::vector<std::string>{"round", "label", "seed", "acc_CP", "acc_CNP", "acc_NCP", "acc_avg", "f1_CP",
                                 "f1_CNP", "f1_NCP", "f1_avg"});
  fed::EvalRecord e{10, {{0.5, 0.25, 1.0}, {0.1, 0.2, 0.3}, 0.5833333333333334, 0.2}};
  const auto csv = history_csv("x", 2, {e});
  CHECK(csv.substr(csv.find('\n') + 1) == "10,x,2,0.5,0.25,1,0.5833333333333334,0.1,0.2,0.3,0.2\n");
  CHECK(run_file_stem("fedssg", 4) == "fedssg__seed4");
}

TEST_CASE("seed streams are distinct per stage and per seed") {
  const SeedStreams a(1), b(1), c(2);
  CHECK(a.model.key() == b.model.key());
  CHECK(a.model.key() != c.model.key());
  CHECK(a.model.key() != a.generator.key());
  CHECK(a.split.key() != a.federation.key());
}

TEST_CASE("tiny experiment writes every artifact and is reproducible") {
  const auto dir = scratch_dir("run");
  const auto cfg = parse_config(tiny_config(dir));
  std::ostringstream log;
  const auto sums = run_experiment(cfg, log);
  REQUIRE(sums.size() == 2);
  for (const char* f : {"runs/fedavg__seed3.csv", "runs/fedssg__seed3.csv", "runs/fedssg__seed3.plans.json",
                        "runs/fedavg__seed3.rounds.jsonl", "runs/fedavg__seed3.model", "manifest.json", "report.md"})
    CHECK(fs::exists(dir / f));
  CHECK_FALSE(fs::exists(dir / "runs/fedavg__seed3.plans.json"));
  const auto manifest = json::parse(read_file(dir / "manifest.json"));
  CHECK(manifest.at("completed").size() == 2);
  CHECK(manifest.at("tool") == kToolVersion);
  // Cached generator is reused and the results are unchanged.
  CHECK(!fs::is_empty(dir / "cache"));
  const auto first = read_file(dir / "runs/fedssg__seed3.csv");
  const auto again = run_experiment(cfg, log);
  CHECK(read_file(dir / "runs/fedssg__seed3.csv") == first);
  fs::remove_all(dir);
}
