#include "fedssg/generator/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "fedssg/core/error.hpp"
#include "fedssg/nn/mlp.hpp"

namespace fedssg::gen {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct Comp {
  double weight;
  Vec mean;
  Mat cov;
};

Mat to_matrix(const std::vector<std::vector<double>>& points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  const auto d = static_cast<Eigen::Index>(points.front().size());
  Mat x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) x(i, k) = points[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  return x;
}

Mat covariance_of(const Mat& x, const Vec& mean, double reg) {
  const Mat c = x.rowwise() - mean.transpose();
  Mat cov = (c.transpose() * c) / static_cast<double>(x.rows());
  cov.diagonal().array() += reg;
  return cov;
}

/// log N(x_i | mean, cov) for every row.
Vec log_density(const Mat& x, const Comp& comp) {
  const Eigen::LLT<Mat> llt(comp.cov);
  const Mat l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const Mat centered = (x.rowwise() - comp.mean.transpose()).transpose();
  const Mat z = l.triangularView<Eigen::Lower>().solve(centered);
  const Vec maha = z.colwise().squaredNorm().transpose();
  const double d = static_cast<double>(x.cols());
  return (-0.5 * (maha.array() + log_det + d * std::log(2.0 * std::numbers::pi))).matrix();
}

std::vector<Vec> kmeanspp(const Mat& x, int k, RngStream& rng) {
  std::vector<Vec> centers;
  centers.push_back(x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(x.rows())))).transpose());
  std::vector<double> dist(static_cast<std::size_t>(x.rows()), std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double dd = (x.row(i).transpose() - centers.back()).squaredNorm();
      auto& slot = dist[static_cast<std::size_t>(i)];
      slot = std::min(slot, dd);
      total += slot;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      pick = rng.categorical(dist);
    } else {
      pick = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(x.rows())));
    }
    centers.push_back(x.row(static_cast<Eigen::Index>(pick)).transpose());
  }
  return centers;
}

GaussianComponent export_component(const Comp& c) {
  const auto d = static_cast<std::size_t>(c.mean.size());
  GaussianComponent g;
  g.weight = c.weight;
  g.mean.assign(c.mean.data(), c.mean.data() + d);
  g.covariance.resize(d * d);
  g.cholesky.assign(d * d, 0.0);
  const Mat l = Eigen::LLT<Mat>(c.cov).matrixL();
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t col = 0; col < d; ++col) {
      g.covariance[r * d + col] = c.cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col));
      g.cholesky[r * d + col] = l(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col));
    }
  return g;
}

}  // namespace

std::vector<GaussianComponent> fit_gmm(const std::vector<std::vector<double>>& points, int components, RngStream rng,
                                       const GmmFitOptions& options) {
  require(components >= 1, "fit_gmm: need at least one component");
  require(static_cast<int>(points.size()) >= components, "fit_gmm: fewer points than components");
  const Mat x = to_matrix(points);
  const Eigen::Index n = x.rows();
  const Vec global_mean = x.colwise().mean().transpose();
  const Mat global_cov = covariance_of(x, global_mean, options.regularization);

  std::vector<Comp> comps;
  for (auto& center : kmeanspp(x, components, rng))
    comps.push_back(Comp{1.0 / components, center, global_cov});
  if (components == 1) comps[0].mean = global_mean;

  Mat log_resp(n, components);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    for (int k = 0; k < components; ++k)
      log_resp.col(k) = log_density(x, comps[static_cast<std::size_t>(k)]).array() +
                        std::log(comps[static_cast<std::size_t>(k)].weight);
    const Vec mx = log_resp.rowwise().maxCoeff();
    const Vec lse = mx.array() + (log_resp.colwise() - mx).array().exp().rowwise().sum().log();
    const double ll = lse.mean();
    const Mat resp = (log_resp.colwise() - lse).array().exp().matrix();

    for (int k = 0; k < components; ++k) {
      const double nk = resp.col(k).sum();
      if (nk < 1e-10) continue;
      auto& c = comps[static_cast<std::size_t>(k)];
      c.weight = nk / static_cast<double>(n);
      c.mean = (x.transpose() * resp.col(k)) / nk;
      const Mat centered = x.rowwise() - c.mean.transpose();
      c.cov = (centered.transpose() * resp.col(k).asDiagonal() * centered) / nk;
      c.cov.diagonal().array() += options.regularization;
    }
    if (ll - prev_ll < options.tolerance) break;
    prev_ll = ll;
  }
  double wsum = 0.0;
  for (const auto& c : comps) wsum += c.weight;
  std::vector<GaussianComponent> out;
  for (auto& c : comps) {
    c.weight /= wsum;
    out.push_back(export_component(c));
  }
  return out;
}

GmmSampler::GmmSampler(int dim, std::vector<std::vector<GaussianComponent>> per_class)
    : dim_(dim), per_class_(std::move(per_class)) {
  require(dim_ >= 1 && !per_class_.empty(), "gmm: empty model");
  for (const auto& mix : per_class_) {
    require(!mix.empty(), "gmm: class without components");
    for (const auto& c : mix)
      require(c.mean.size() == static_cast<std::size_t>(dim_) &&
                  c.cholesky.size() == static_cast<std::size_t>(dim_ * dim_),
              "gmm: component dimension mismatch");
  }
}

const std::vector<GaussianComponent>& GmmSampler::mixture(int class_id) const {
  require(class_id >= 0 && class_id < classes(), "gmm: class id out of range");
  return per_class_[static_cast<std::size_t>(class_id)];
}

std::vector<Sample> GmmSampler::sample(int class_id, std::size_t n, int domain, RngStream rng) const {
  const auto& mix = mixture(class_id);
  std::vector<double> weights;
  for (const auto& c : mix) weights.push_back(c.weight);
  const auto d = static_cast<std::size_t>(dim_);
  std::vector<Sample> out;
  out.reserve(n);
  std::vector<double> z(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = mix[rng.categorical(weights)];
    for (auto& v : z) v = rng.normal();
    std::vector<double> x = c.mean;
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t k = 0; k <= r; ++k) x[r] += c.cholesky[r * d + k] * z[k];
    out.push_back(Sample{std::move(x), class_id, domain});
  }
  return out;
}

std::uint64_t GmmSampler::checksum() const {
  std::vector<double> all;
  for (const auto& mix : per_class_)
    for (const auto& c : mix) {
      all.push_back(c.weight);
      all.insert(all.end(), c.mean.begin(), c.mean.end());
      all.insert(all.end(), c.covariance.begin(), c.covariance.end());
    }
  return nn::checksum(all);
}

GmmSampler fit_gmm_baseline(const Dataset& data, int components_per_class, RngStream rng,
                            const GmmFitOptions& options) {
  require(components_per_class >= 1, "gmm: need at least one component per class");
  const auto by_class = data.indices_by_class();
  std::vector<std::vector<GaussianComponent>> per_class;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    require(!by_class[c].empty(), "gmm: class " + std::to_string(c) + " has no samples");
    std::vector<std::vector<double>> pts;
    for (auto i : by_class[c]) pts.push_back(data[i].features);
    const int k = static_cast<int>(pts.size()) >= components_per_class ? components_per_class : 1;
    per_class.push_back(fit_gmm(pts, k, rng.derive(static_cast<std::uint64_t>(c)), options));
  }
  return GmmSampler(data.dim(), std::move(per_class));
}

}  // namespace fedssg::gen
