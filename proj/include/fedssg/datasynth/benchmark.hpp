#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedssg/core/dataset.hpp"
#include "fedssg/core/rng.hpp"

namespace fedssg::datasynth {

/// x -> A x + b with A stored row-major (dim x dim).
struct AffineMap {
  std::vector<double> matrix;
  std::vector<double> offset;

  int dim() const { return static_cast<int>(offset.size()); }
  std::vector<double> apply(std::span<const double> x) const;
  /// Ratio of the largest to the smallest singular value of A.
  double condition_number() const;

  static AffineMap identity(int dim);
};

/// Lesion-class counts per acquisition device, full scale. Rows are
/// contact polarized, contact non-polarized, non-contact polarized; columns
/// are actinic keratosis, basal cell carcinoma, melanoma, nevus, seborrheic
/// keratosis.
inline const std::vector<std::vector<int>> kTypedCounts = {
    {133, 469, 609, 8227, 177},
    {222, 549, 591, 1564, 438},
    {54, 208, 194, 270, 64},
};
/// Counts of the device-less collection used as public data.
inline const std::vector<int> kUntypedCounts = {1119, 2593, 2732, 5380, 847};
inline const std::vector<std::string> kDomainNames = {"CP", "CNP", "NCP"};

/// Divides counts by `divisor` and integerizes with largest remainder so the
/// result sums to round(total / divisor).
std::vector<int> scale_counts(std::span<const int> counts, double divisor);

struct BenchmarkSpec {
  int classes = 5;
  int domains = 3;
  int dim = 16;
  std::vector<std::vector<int>> class_counts_per_domain;  // domains x classes
  std::vector<int> public_class_counts;
  double class_separation = 3.0;
  double noise_scale = 1.0;
  std::vector<AffineMap> domain_shifts;  // one per domain
  /// Magnitude of the per-component perturbation applied to the domain maps
  /// when drawing public samples.
  double public_perturbation = 0.1;
  double test_fraction = 0.15;
  double val_fraction = 0.10;

  void validate() const;
};

/// Knobs from which a spec (including random domain maps) is built.
struct BenchmarkKnobs {
  int dim = 16;
  double scale_divisor = 10.0;
  double class_separation = 3.0;
  double noise_scale = 1.0;
  double shift_scale = 1.5;
  double rotation_strength = 0.6;
  double public_perturbation = 0.1;
  double test_fraction = 0.15;
  double val_fraction = 0.10;

  friend bool operator==(const BenchmarkKnobs&, const BenchmarkKnobs&) = default;
};

/// Rotation-dominant invertible maps: A = Q diag(s) with Q orthogonal (the
/// polar factor of I + rotation_strength * G / sqrt(dim)) and s in
/// [0.8, 1.25], so cond(A) <= 1.57; offsets have norm `shift_scale`.
std::vector<AffineMap> random_domain_shifts(int domains, int dim, double shift_scale, double rotation_strength,
                                            RngStream rng);

/// Spec with the typed/untyped count tables scaled by `knobs.scale_divisor`.
BenchmarkSpec make_spec(const BenchmarkKnobs& knobs, RngStream rng);

struct Benchmark {
  Dataset private_typed;     // `domains` slots
  Dataset public_untyped;    // `domains + 1` slots, all samples untyped
  std::vector<std::vector<double>> class_means;
};

/// Draws every (domain, class) cell as a Gaussian cluster around a
/// class mean (random direction scaled by class_separation, isotropic noise
/// noise_scale) pushed through the domain's affine map. Public samples pick
/// a domain map uniformly and use a mildly perturbed copy of it.
Benchmark generate_benchmark(const BenchmarkSpec& spec, RngStream rng);

nlohmann::json spec_to_json(const BenchmarkSpec& spec);
BenchmarkSpec spec_from_json(const nlohmann::json& j);

/// Spec echo, realized per-(domain, class) counts and the seed.
nlohmann::json benchmark_manifest(const BenchmarkSpec& spec, const Benchmark& benchmark, std::uint64_t seed);

}  // namespace fedssg::datasynth
