#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "fedssg/core/error.hpp"
#include "fedssg/datasynth/benchmark.hpp"
#include "fedssg/datasynth/partition.hpp"
#include "fedssg/datasynth/sampler.hpp"

using namespace fedssg;
using namespace fedssg::datasynth;

namespace {

int sum(const std::vector<int>& v) { return std::accumulate(v.begin(), v.end(), 0); }

// p-value of Pearson's statistic for observed counts against probabilities.
double chi_square_p(const std::vector<std::int64_t>& observed, const std::vector<double>& p) {
  double n = 0.0;
  for (auto o : observed) n += static_cast<double>(o);
  double stat = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    const double e = n * p[i];
    stat += (static_cast<double>(observed[i]) - e) * (static_cast<double>(observed[i]) - e) / e;
    ++cells;
  }
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(cells - 1), stat));
}

const Benchmark& default_benchmark() {
  static const Benchmark b = generate_benchmark(make_spec(BenchmarkKnobs{}, RngStream(1)), RngStream(2));
  return b;
}

}  // namespace

TEST_CASE("one-tenth scale counts") {
  BenchmarkKnobs knobs;
  const auto spec = make_spec(knobs, RngStream(1));
  CHECK(sum(spec.class_counts_per_domain[0]) == 962);
  CHECK(sum(spec.class_counts_per_domain[1]) == 336);
  CHECK(sum(spec.class_counts_per_domain[2]) == 79);
  CHECK(sum(spec.public_class_counts) == 1267);
  // 8227 / 10 rounds to the dominant nevus cell.
  CHECK(spec.class_counts_per_domain[0][3] == 823);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t c = 0; c < 5; ++c)
      CHECK(std::abs(spec.class_counts_per_domain[j][c] - kTypedCounts[j][c] / 10.0) < 1.0);
}

TEST_CASE("scale_counts at full scale is the identity") {
  for (const auto& row : kTypedCounts) CHECK(scale_counts(row, 1.0) == row);
  CHECK(scale_counts(kUntypedCounts, 1.0) == kUntypedCounts);
  const std::vector<int> three = {1, 1, 1};
  CHECK(sum(scale_counts(three, 2.0)) == 2);  // round(1.5)
}

TEST_CASE("domain maps are well conditioned with the requested offset norm") {
  const auto maps = random_domain_shifts(3, 16, 1.5, 0.6, RngStream(4));
  REQUIRE(maps.size() == 3);
  for (const auto& m : maps) {
    CHECK(m.condition_number() <= 1.57);
    CHECK(m.condition_number() >= 1.0);
    double n2 = 0.0;
    for (double v : m.offset) n2 += v * v;
    CHECK(std::sqrt(n2) == doctest::Approx(1.5));
  }
  const auto id = AffineMap::identity(4);
  const std::vector<double> x = {1.0, -2.0, 3.0, 0.5};
  CHECK(id.apply(x) == x);
  CHECK(id.condition_number() == doctest::Approx(1.0));
}

TEST_CASE("generated benchmark realizes every cell count") {
  const auto spec = make_spec(BenchmarkKnobs{}, RngStream(1));
  const auto& b = default_benchmark();
  REQUIRE(b.private_typed.domains() == 3);
  REQUIRE(b.public_untyped.domains() == 4);
  std::vector<std::vector<int>> cell(3, std::vector<int>(5, 0));
  for (const auto& s : b.private_typed.samples()) ++cell[static_cast<std::size_t>(s.domain)][static_cast<std::size_t>(s.label)];
  CHECK(cell == spec.class_counts_per_domain);
  for (const auto& s : b.public_untyped.samples()) CHECK(s.domain == untyped_domain(3));
  std::vector<int> pub(5, 0);
  for (const auto& s : b.public_untyped.samples()) ++pub[static_cast<std::size_t>(s.label)];
  CHECK(pub == spec.public_class_counts);

  const auto again = generate_benchmark(spec, RngStream(2));
  CHECK(again.private_typed == b.private_typed);
  CHECK(again.public_untyped == b.public_untyped);
}

TEST_CASE("spec json round-trip") {
  const auto spec = make_spec(BenchmarkKnobs{}, RngStream(3));
  const auto back = spec_from_json(spec_to_json(spec));
  CHECK(back.class_counts_per_domain == spec.class_counts_per_domain);
  CHECK(back.domain_shifts[1].matrix == spec.domain_shifts[1].matrix);
  CHECK(spec_to_json(back) == spec_to_json(spec));
  auto bad = spec;
  bad.class_counts_per_domain.pop_back();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("proportional client assignment") {
  const std::vector<std::int64_t> sizes = {962, 336, 79};
  CHECK(assign_clients_to_domains(20, sizes) == std::vector<int>{14, 5, 1});
  CHECK(assign_clients_to_domains(70, sizes) == std::vector<int>{49, 17, 4});
  CHECK(assign_clients_to_domains(85, sizes) == std::vector<int>{59, 21, 5});
  CHECK(assign_clients_to_domains(100, sizes) == std::vector<int>{70, 24, 6});
  // A domain rounded to zero borrows from the largest.
  const std::vector<std::int64_t> skew = {1000, 1, 1};
  CHECK(assign_clients_to_domains(3, skew) == std::vector<int>{1, 1, 1});
  CHECK(assign_clients_to_domains(4, skew) == std::vector<int>{2, 1, 1});
  CHECK_THROWS_AS(assign_clients_to_domains(2, sizes), ConfigError);
}

TEST_CASE("dirichlet partition deals out every sample exactly once") {
  const auto domain0 = default_benchmark().private_typed.filter_domain(0);
  for (double alpha : {0.05, 0.5, 100.0}) {
    const auto parts = dirichlet_partition(domain0, 0, 7, alpha, RngStream(5), 10);
    REQUIRE(parts.size() == 7);
    std::vector<std::int64_t> counts(5, 0);
    std::size_t total = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      CHECK(parts[k].client_id() == 10 + static_cast<int>(k));
      CHECK(parts[k].domain() == 0);
      total += parts[k].real().size();
      for (int c = 0; c < 5; ++c) counts[static_cast<std::size_t>(c)] += parts[k].real().class_counts()[static_cast<std::size_t>(c)];
    }
    CHECK(total == domain0.size());
    CHECK(counts == domain0.class_counts());
  }
}

TEST_CASE("large alpha gives near-even client shares; small alpha concentrates") {
  const auto domain0 = default_benchmark().private_typed.filter_domain(0);
  auto max_share = [&](double alpha) {
    const auto parts = dirichlet_partition(domain0, 0, 4, alpha, RngStream(6));
    std::size_t mx = 0;
    for (const auto& p : parts) mx = std::max(mx, p.real().size());
    return static_cast<double>(mx) / static_cast<double>(domain0.size());
  };
  CHECK(max_share(1000.0) < 0.3);
  CHECK(max_share(0.01) > 0.5);
}

TEST_CASE("federated split: disjoint, stratified test set, no empty client") {
  const auto& data = default_benchmark().private_typed;
  SplitConfig cfg;
  cfg.clients = 20;
  const auto split = make_federated_split(data, cfg, RngStream(7));
  CHECK(split.clients_per_domain == std::vector<int>{14, 5, 1});
  REQUIRE(split.clients.size() == 20);
  REQUIRE(split.val_sets.size() == 20);

  std::size_t total = split.test_set.size();
  for (std::size_t k = 0; k < split.clients.size(); ++k) {
    const auto& c = split.clients[k];
    CHECK(c.client_id() == static_cast<int>(k));
    CHECK(c.real().size() >= 1);
    for (const auto& s : c.real().samples()) CHECK(s.domain == c.domain());
    total += c.real().size() + split.val_sets[k].size();
  }
  CHECK(total == data.size());

  // Each (domain, class) cell contributes round(0.15 n) test samples.
  std::map<std::pair<int, int>, int> cell, test;
  for (const auto& s : data.samples()) ++cell[{s.domain, s.label}];
  for (const auto& s : split.test_set.samples()) ++test[{s.domain, s.label}];
  for (const auto& [key, n] : cell) CHECK(test[key] == std::llround(0.15 * n));

  // Every sample lands in exactly one place.
  std::map<std::vector<double>, int> seen;
  for (const auto& s : split.test_set.samples()) ++seen[s.features];
  for (std::size_t k = 0; k < split.clients.size(); ++k) {
    for (const auto& s : split.clients[k].real().samples()) ++seen[s.features];
    for (const auto& s : split.val_sets[k].samples()) ++seen[s.features];
  }
  for (const auto& s : data.samples()) CHECK(seen[s.features] == 1);

  const auto again = make_federated_split(data, cfg, RngStream(7));
  CHECK(again.test_set == split.test_set);
  CHECK(again.clients[3].real() == split.clients[3].real());
}

TEST_CASE("explicit client counts are validated") {
  const auto& data = default_benchmark().private_typed;
  SplitConfig cfg;
  cfg.clients = 10;
  cfg.clients_per_domain = std::vector<int>{5, 4, 1};
  CHECK(make_federated_split(data, cfg, RngStream(1)).clients_per_domain == std::vector<int>{5, 4, 1});
  cfg.clients_per_domain = std::vector<int>{5, 5, 1};
  CHECK_THROWS_AS(make_federated_split(data, cfg, RngStream(1)), ConfigError);
  cfg.clients_per_domain = std::vector<int>{10, 0, 0};
  CHECK_THROWS_AS(make_federated_split(data, cfg, RngStream(1)), ConfigError);
}

TEST_CASE("balanced class probabilities are inverse-frequency") {
  const std::vector<std::int64_t> counts = {1, 2, 0, 4};
  const auto p = balanced_class_probabilities(counts);
  // 1/n: 1, .5, 0, .25 over 1.75
  CHECK(p[0] == doctest::Approx(1.0 / 1.75));
  CHECK(p[1] == doctest::Approx(0.5 / 1.75));
  CHECK(p[2] == 0.0);
  CHECK(p[3] == doctest::Approx(0.25 / 1.75));
  const std::vector<std::int64_t> none = {0, 0};
  CHECK_THROWS_AS(balanced_class_probabilities(none), ConfigError);
}

TEST_CASE("class-balanced sampler frequencies pass chi-square") {
  const std::vector<std::int64_t> counts = {222, 549, 591, 1564, 438};
  ClassBalancedSampler sampler(counts, 1, RngStream(17));
  std::vector<std::int64_t> hits(5, 0);
  for (int i = 0; i < 10000; ++i) ++hits[static_cast<std::size_t>(sampler.draw_class())];
  CHECK(chi_square_p(hits, sampler.probabilities()) > 1e-3);
}

TEST_CASE("sampler batches index the right class blocks") {
  const std::vector<std::int64_t> counts = {3, 0, 2};
  ClassBalancedSampler sampler(counts, 64, RngStream(3));
  const auto batch = sampler.next_batch();
  CHECK(batch.size() == 64);
  std::vector<int> seen(5, 0);
  for (auto i : batch) {
    REQUIRE(i < 5);
    ++seen[i];
  }
  // Indices 0..2 are class 0, 3..4 class 2; class 2 is drawn more often.
  CHECK(seen[3] + seen[4] > seen[0] + seen[1] + seen[2]);
}
