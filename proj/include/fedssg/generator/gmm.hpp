#pragma once

#include <vector>

#include "fedssg/core/dataset.hpp"
#include "fedssg/core/rng.hpp"
#include "fedssg/generator/diffusion.hpp"

namespace fedssg::gen {

struct GaussianComponent {
  double weight = 1.0;
  std::vector<double> mean;
  std::vector<double> covariance;  // dim x dim, row-major
  std::vector<double> cholesky;    // lower factor of covariance, row-major
};

struct GmmFitOptions {
  int max_iterations = 200;
  double tolerance = 1e-8;    // stop when the mean log-likelihood gains less
  double regularization = 1e-6;  // added to every covariance diagonal
};

/// Maximum-likelihood full-covariance Gaussian mixture fit by EM with
/// k-means++ seeding. Throws ConfigError when `points` has fewer rows than
/// `components`.
std::vector<GaussianComponent> fit_gmm(const std::vector<std::vector<double>>& points, int components, RngStream rng,
                                       const GmmFitOptions& options = {});

/// One mixture per class; sampling draws a component, then a Gaussian.
class GmmSampler final : public SampleGenerator {
 public:
  GmmSampler(int dim, std::vector<std::vector<GaussianComponent>> per_class);

  int dim() const override { return dim_; }
  int classes() const override { return static_cast<int>(per_class_.size()); }
  std::vector<Sample> sample(int class_id, std::size_t n, int domain, RngStream rng) const override;
  std::uint64_t checksum() const override;

  const std::vector<GaussianComponent>& mixture(int class_id) const;

 private:
  int dim_;
  std::vector<std::vector<GaussianComponent>> per_class_;
};

/// Fits `components_per_class` components to every class; a class with
/// fewer samples than that gets a single Gaussian instead.
GmmSampler fit_gmm_baseline(const Dataset& data, int components_per_class, RngStream rng,
                            const GmmFitOptions& options = {});

}  // namespace fedssg::gen
