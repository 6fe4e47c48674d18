#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>

#include "fedssg/core/dataset.hpp"
#include "fedssg/core/error.hpp"
#include "fedssg/core/rng.hpp"
#include "fedssg/core/rounding.hpp"
#include "fedssg/core/text_io.hpp"

using namespace fedssg;

namespace {

Dataset small_dataset() {
  std::vector<Sample> s = {
      {{0.5, -1.0}, 0, 0}, {{1.5, 2.0}, 2, 1}, {{-0.25, 0.125}, 2, 0}, {{3.0, 1e-300}, 1, 2}, {{0.1, 0.2}, 2, 1},
  };
  return Dataset(std::move(s), 3, 3, 2);
}

}  // namespace

TEST_CASE("histogram counts every class and domain exactly") {
  const auto d = small_dataset();
  const auto h = histogram(d);
  CHECK(h.class_counts == std::vector<std::int64_t>{1, 1, 3});
  CHECK(h.domain_counts == std::vector<std::int64_t>{2, 2, 1});
  CHECK(std::accumulate(h.class_counts.begin(), h.class_counts.end(), std::int64_t{0}) ==
        static_cast<std::int64_t>(d.size()));
}

TEST_CASE("dataset rejects malformed samples") {
  CHECK_THROWS_AS(Dataset({{{1.0}, 0, 0}}, 2, 1, 2), ConfigError);
  CHECK_THROWS_AS(Dataset({{{1.0, 2.0}, 2, 0}}, 2, 1, 2), ConfigError);
  CHECK_THROWS_AS(Dataset({{{1.0, 2.0}, 0, 1}}, 2, 1, 2), ConfigError);
  CHECK_THROWS_AS(Dataset({{{1.0, 2.0}, -1, 0}}, 2, 1, 2), ConfigError);
}

TEST_CASE("subset, concat and filter keep histograms consistent") {
  const auto d = small_dataset();
  const std::vector<std::size_t> idx = {4, 1};
  const auto sub = d.subset(idx);
  CHECK(sub.size() == 2);
  CHECK(sub[0] == d[4]);
  CHECK(sub.class_counts() == std::vector<std::int64_t>{0, 0, 2});
  const auto both = d.concat(sub);
  CHECK(both.size() == 7);
  CHECK(both.class_counts()[2] == 5);
  const auto dom1 = d.filter_domain(1);
  CHECK(dom1.size() == 2);
  for (const auto& s : dom1.samples()) CHECK(s.domain == 1);
  const auto by_class = d.indices_by_class();
  CHECK(by_class[2] == std::vector<std::size_t>{1, 2, 4});
}

TEST_CASE("client dataset keeps real and synthetic parts apart") {
  const auto d = small_dataset().filter_domain(0);
  const auto syn = Dataset({{{9.0, 9.0}, 1, 0}}, 3, 3, 2);
  const ClientDataset c(7, 0, d, syn);
  CHECK(c.real().size() == 2);
  CHECK(c.synthetic().size() == 1);
  CHECK(c.augmented().size() == 3);
  CHECK(c.augmented()[2] == syn[0]);
  CHECK(c.with_synthetic(Dataset::empty(3, 3, 2)).augmented().size() == 2);
}

TEST_CASE("rng streams are reproducible and independent") {
  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  // Deriving does not consume the parent's sequence.
  RngStream p(5), q(5);
  (void)p.derive("child");
  CHECK(p.next_u64() == q.next_u64());

  // Text and integer labels name different streams.
  CHECK(RngStream(1).derive("7").next_u64() != RngStream(1).derive(7).next_u64());
  CHECK(RngStream(1).derive("x").next_u64() != RngStream(2).derive("x").next_u64());
  CHECK(RngStream(1).derive_path({"a", 3}).next_u64() == RngStream(1).derive("a").derive(3).next_u64());
  CHECK(RngStream(1).derive_path({"a", 3}).next_u64() != RngStream(1).derive_path({3, "a"}).next_u64());
}

TEST_CASE("rng distributions stay in range and have the right moments") {
  RngStream r(11);
  const int n = 200000;
  double sum = 0.0, sq = 0.0, usum = 0.0;
  std::vector<int> hits(7, 0);
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    usum += u;
    const auto k = r.below(7);
    REQUIRE(k < 7);
    ++hits[k];
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(usum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.01));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.01));
  for (int h : hits) CHECK(static_cast<double>(h) / n == doctest::Approx(1.0 / 7).epsilon(0.03));

  double gsum = 0.0;
  for (int i = 0; i < 50000; ++i) gsum += r.gamma(2.5);
  CHECK(gsum / 50000 == doctest::Approx(2.5).epsilon(0.02));

  for (double alpha : {0.01, 0.5, 5.0}) {
    const auto p = r.dirichlet(6, alpha);
    double s = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(std::isfinite(r.log_gamma_variate(1e-3)));

  const std::vector<double> w = {0.0, 1.0, 3.0};
  std::vector<int> c(3, 0);
  for (int i = 0; i < 40000; ++i) ++c[r.categorical(w)];
  CHECK(c[0] == 0);
  CHECK(static_cast<double>(c[2]) / 40000 == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("shuffle is a permutation") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  RngStream r(3);
  r.shuffle(v);
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("format_double round-trips exactly") {
  RngStream r(9);
  std::vector<double> values = {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 1e-300, 5e-324, 1.7976931348623157e308, -2.5};
  for (int i = 0; i < 2000; ++i) values.push_back(std::ldexp(r.normal(), static_cast<int>(r.below(200)) - 100));
  for (double v : values) {
    const double back = parse_double(format_double(v));
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(split_doubles(join_doubles(values)) == values);
  CHECK_THROWS_AS(parse_double("1.5x"), FormatError);
  CHECK_THROWS_AS(parse_int("12a"), FormatError);
  CHECK(parse_int("-17") == -17);
}

TEST_CASE("dataset text format round-trips") {
  const auto d = small_dataset();
  std::stringstream ss;
  write_dataset(ss, d);
  CHECK(read_dataset(ss) == d);

  std::stringstream bad("# fedssg-dataset classes=2 domains=1 dim=2\n0 0 1.0\n");
  CHECK_THROWS(read_dataset(bad));

  const auto dir = std::filesystem::temp_directory_path() / "fedssg_test_core";
  std::filesystem::create_directories(dir);
  save_dataset(dir / "d.txt", d);
  CHECK(load_dataset(dir / "d.txt") == d);
  write_file_atomic(dir / "a.txt", "hello\n");
  CHECK(read_file(dir / "a.txt") == "hello\n");
  std::filesystem::remove_all(dir);
}

TEST_CASE("largest remainder integerization") {
  // floors 1,2,0 sum 3; two extra units go to remainders .9 and .6.
  const std::vector<double> q = {1.6, 2.1, 0.9};
  CHECK(largest_remainder(q, 5) == std::vector<std::int64_t>{2, 2, 1});
  CHECK(largest_remainder(q, 3) == std::vector<std::int64_t>{1, 2, 0});
  // Ties go to the lower index.
  const std::vector<double> t = {0.5, 0.5, 0.5};
  CHECK(largest_remainder(t, 2) == std::vector<std::int64_t>{1, 1, 0});
  CHECK_THROWS_AS(largest_remainder(q, 7), ConfigError);
  const std::vector<double> neg = {-1.0};
  CHECK_THROWS_AS(largest_remainder(neg, 0), ConfigError);

  RngStream r(4);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> x(1 + r.below(8));
    double s = 0.0;
    for (auto& v : x) s += (v = r.uniform(0.0, 20.0));
    const auto total = std::llround(s);
    const auto out = largest_remainder(x, total);
    CHECK(std::accumulate(out.begin(), out.end(), std::int64_t{0}) == total);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(static_cast<double>(out[i]) - x[i]) < 1.0);
  }
}
