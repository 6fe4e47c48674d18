#include "fedssg/datasynth/benchmark.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "fedssg/core/error.hpp"
#include "fedssg/core/rounding.hpp"

namespace fedssg::datasynth {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMatrix to_eigen(const AffineMap& m) {
  const int d = m.dim();
  return Eigen::Map<const RowMatrix>(m.matrix.data(), d, d);
}

std::vector<double> random_direction(int dim, RngStream& rng) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

AffineMap perturbed(const AffineMap& base, double magnitude, RngStream& rng) {
  AffineMap out = base;
  const double scale = magnitude / std::sqrt(static_cast<double>(base.dim()));
  for (auto& a : out.matrix) a += scale * rng.normal();
  for (auto& b : out.offset) b += magnitude * rng.normal();
  return out;
}

}  // namespace

std::vector<double> AffineMap::apply(std::span<const double> x) const {
  const std::size_t d = offset.size();
  std::vector<double> y(offset);
  for (std::size_t r = 0; r < d; ++r) {
    double acc = y[r];
    for (std::size_t c = 0; c < d; ++c) acc += matrix[r * d + c] * x[c];
    y[r] = acc;
  }
  return y;
}

double AffineMap::condition_number() const {
  Eigen::JacobiSVD<RowMatrix> svd(to_eigen(*this));
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  return smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
}

AffineMap AffineMap::identity(int dim) {
  AffineMap m;
  m.matrix.assign(static_cast<std::size_t>(dim * dim), 0.0);
  for (int i = 0; i < dim; ++i) m.matrix[static_cast<std::size_t>(i * dim + i)] = 1.0;
  m.offset.assign(static_cast<std::size_t>(dim), 0.0);
  return m;
}

std::vector<int> scale_counts(std::span<const int> counts, double divisor) {
  require(divisor > 0.0, "scale_counts: divisor must be positive");
  std::vector<double> quotas;
  double total = 0.0;
  for (int c : counts) {
    quotas.push_back(static_cast<double>(c) / divisor);
    total += static_cast<double>(c);
  }
  const auto target = static_cast<std::int64_t>(std::llround(total / divisor));
  auto scaled = largest_remainder(quotas, target);
  return {scaled.begin(), scaled.end()};
}

void BenchmarkSpec::validate() const {
  require(classes >= 1 && domains >= 1 && dim >= 1, "benchmark: classes, domains and dim must be positive");
  require(static_cast<int>(class_counts_per_domain.size()) == domains,
          "benchmark: class_counts_per_domain needs one row per domain");
  for (const auto& row : class_counts_per_domain) {
    require(static_cast<int>(row.size()) == classes, "benchmark: count rows need one entry per class");
    for (int c : row) require(c >= 0, "benchmark: counts must be nonnegative");
  }
  require(static_cast<int>(public_class_counts.size()) == classes, "benchmark: public counts need one entry per class");
  for (int c : public_class_counts) require(c >= 0, "benchmark: counts must be nonnegative");
  require(class_separation >= 0.0 && noise_scale >= 0.0, "benchmark: separation and noise must be nonnegative");
  require(public_perturbation >= 0.0, "benchmark: public perturbation must be nonnegative");
  require(test_fraction > 0.0 && test_fraction < 1.0 && val_fraction > 0.0 && val_fraction < 1.0 &&
              test_fraction + val_fraction < 1.0,
          "benchmark: fractions must lie in (0,1) with test + val < 1");
  require(static_cast<int>(domain_shifts.size()) == domains, "benchmark: one domain shift per domain required");
  for (const auto& m : domain_shifts) {
    require(m.dim() == dim && static_cast<int>(m.matrix.size()) == dim * dim, "benchmark: domain shift has wrong shape");
    require(std::isfinite(m.condition_number()) && m.condition_number() < 1e8, "benchmark: domain shift not invertible");
  }
}

std::vector<AffineMap> random_domain_shifts(int domains, int dim, double shift_scale, double rotation_strength,
                                            RngStream rng) {
  std::vector<AffineMap> maps;
  const double g_scale = rotation_strength / std::sqrt(static_cast<double>(dim));
  for (int j = 0; j < domains; ++j) {
    RngStream r = rng.derive(j);
    RowMatrix m = RowMatrix::Identity(dim, dim);
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b) m(a, b) += g_scale * r.normal();
    }
    Eigen::JacobiSVD<RowMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    RowMatrix q = svd.matrixU() * svd.matrixV().transpose();
    for (int c = 0; c < dim; ++c) q.col(c) *= r.uniform(0.8, 1.25);
    AffineMap map;
    map.matrix.assign(q.data(), q.data() + dim * dim);
    map.offset = random_direction(dim, r);
    for (auto& x : map.offset) x *= shift_scale;
    maps.push_back(std::move(map));
  }
  return maps;
}

BenchmarkSpec make_spec(const BenchmarkKnobs& knobs, RngStream rng) {
  BenchmarkSpec spec;
  spec.classes = static_cast<int>(kUntypedCounts.size());
  spec.domains = static_cast<int>(kTypedCounts.size());
  spec.dim = knobs.dim;
  for (const auto& row : kTypedCounts) spec.class_counts_per_domain.push_back(scale_counts(row, knobs.scale_divisor));
  spec.public_class_counts = scale_counts(kUntypedCounts, knobs.scale_divisor);
  spec.class_separation = knobs.class_separation;
  spec.noise_scale = knobs.noise_scale;
  spec.domain_shifts =
      random_domain_shifts(spec.domains, knobs.dim, knobs.shift_scale, knobs.rotation_strength, rng.derive("shifts"));
  spec.public_perturbation = knobs.public_perturbation;
  spec.test_fraction = knobs.test_fraction;
  spec.val_fraction = knobs.val_fraction;
  spec.validate();
  return spec;
}

Benchmark generate_benchmark(const BenchmarkSpec& spec, RngStream rng) {
  spec.validate();
  Benchmark out;
  RngStream mean_rng = rng.derive("class-means");
  for (int c = 0; c < spec.classes; ++c) {
    auto dir = random_direction(spec.dim, mean_rng);
    for (auto& x : dir) x *= spec.class_separation;
    out.class_means.push_back(std::move(dir));
  }

  auto draw_canonical = [&](int label, RngStream& r) {
    std::vector<double> x = out.class_means[static_cast<std::size_t>(label)];
    for (auto& v : x) v += spec.noise_scale * r.normal();
    return x;
  };

  std::vector<Sample> priv;
  for (int j = 0; j < spec.domains; ++j) {
    const AffineMap& map = spec.domain_shifts[static_cast<std::size_t>(j)];
    for (int c = 0; c < spec.classes; ++c) {
      RngStream cell = rng.derive_path({"private", j, c});
      const int n = spec.class_counts_per_domain[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
      for (int i = 0; i < n; ++i) priv.push_back(Sample{map.apply(draw_canonical(c, cell)), c, j});
    }
  }
  out.private_typed = Dataset(std::move(priv), spec.classes, spec.domains, spec.dim);

  RngStream comp_rng = rng.derive("public-components");
  std::vector<AffineMap> components;
  for (const auto& m : spec.domain_shifts) components.push_back(perturbed(m, spec.public_perturbation, comp_rng));

  std::vector<Sample> pub;
  const int untyped = untyped_domain(spec.domains);
  for (int c = 0; c < spec.classes; ++c) {
    RngStream cell = rng.derive_path({"public", c});
    for (int i = 0; i < spec.public_class_counts[static_cast<std::size_t>(c)]; ++i) {
      const auto comp = static_cast<std::size_t>(cell.below(components.size()));
      pub.push_back(Sample{components[comp].apply(draw_canonical(c, cell)), c, untyped});
    }
  }
  out.public_untyped = Dataset(std::move(pub), spec.classes, spec.domains + 1, spec.dim);
  return out;
}

nlohmann::json spec_to_json(const BenchmarkSpec& spec) {
  nlohmann::json shifts = nlohmann::json::array();
  for (const auto& m : spec.domain_shifts) shifts.push_back({{"matrix", m.matrix}, {"offset", m.offset}});
  return {{"classes", spec.classes},
          {"domains", spec.domains},
          {"dim", spec.dim},
          {"class_counts_per_domain", spec.class_counts_per_domain},
          {"public_class_counts", spec.public_class_counts},
          {"class_separation", spec.class_separation},
          {"noise_scale", spec.noise_scale},
          {"domain_shifts", shifts},
          {"public_perturbation", spec.public_perturbation},
          {"test_fraction", spec.test_fraction},
          {"val_fraction", spec.val_fraction}};
}

BenchmarkSpec spec_from_json(const nlohmann::json& j) {
  BenchmarkSpec spec;
  spec.classes = j.at("classes").get<int>();
  spec.domains = j.at("domains").get<int>();
  spec.dim = j.at("dim").get<int>();
  spec.class_counts_per_domain = j.at("class_counts_per_domain").get<std::vector<std::vector<int>>>();
  spec.public_class_counts = j.at("public_class_counts").get<std::vector<int>>();
  spec.class_separation = j.at("class_separation").get<double>();
  spec.noise_scale = j.at("noise_scale").get<double>();
  for (const auto& m : j.at("domain_shifts")) {
    spec.domain_shifts.push_back(
        AffineMap{m.at("matrix").get<std::vector<double>>(), m.at("offset").get<std::vector<double>>()});
  }
  spec.public_perturbation = j.at("public_perturbation").get<double>();
  spec.test_fraction = j.at("test_fraction").get<double>();
  spec.val_fraction = j.at("val_fraction").get<double>();
  spec.validate();
  return spec;
}

nlohmann::json benchmark_manifest(const BenchmarkSpec& spec, const Benchmark& benchmark, std::uint64_t seed) {
  std::vector<std::vector<std::int64_t>> cells(static_cast<std::size_t>(spec.domains),
                                               std::vector<std::int64_t>(static_cast<std::size_t>(spec.classes), 0));
  for (const auto& s : benchmark.private_typed.samples()) {
    ++cells[static_cast<std::size_t>(s.domain)][static_cast<std::size_t>(s.label)];
  }
  return {{"seed", seed},
          {"spec", spec_to_json(spec)},
          {"private_counts", cells},
          {"private_total", benchmark.private_typed.size()},
          {"public_counts", benchmark.public_untyped.class_counts()},
          {"public_total", benchmark.public_untyped.size()}};
}

}  // namespace fedssg::datasynth
