#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedssg/core/dataset.hpp"
#include "fedssg/nn/mlp.hpp"

namespace fedssg::metrics {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int classes);
  ConfusionMatrix(int classes, std::vector<std::int64_t> counts);

  void add(int truth, int predicted, std::int64_t n = 1);
  std::int64_t at(int truth, int predicted) const;
  int classes() const { return classes_; }
  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t row_sum(int truth) const;
  std::int64_t col_sum(int predicted) const;
  const std::vector<std::int64_t>& counts() const { return counts_; }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int classes_ = 0;
  std::vector<std::int64_t> counts_;
};

/// trace / total; throws ConfigError on an empty matrix.
double accuracy(const ConfusionMatrix& cm);
/// 2PR / (P + R) per class, 0 where P + R = 0 (including classes never
/// predicted nor present).
std::vector<double> per_class_f1(const ConfusionMatrix& cm);
/// Unweighted mean of per_class_f1 over all classes.
double macro_f1(const ConfusionMatrix& cm);

/// Eval-mode argmax predictions for every sample, in order.
std::vector<int> predict(const nn::ParamVector& params, const Dataset& data);

/// One matrix per domain slot of `data`.
std::vector<ConfusionMatrix> confusion_by_domain(std::span<const int> predictions, const Dataset& data);

/// Predicts `test` and splits the confusion counts by domain tag. Every
/// domain must have test samples.
std::vector<ConfusionMatrix> evaluate(const nn::ParamVector& params, const Dataset& test);

struct DomainReport {
  std::vector<double> accuracy;  // per domain
  std::vector<double> f1;        // per domain, macro
  double accuracy_avg = 0.0;     // unweighted mean over domains
  double f1_avg = 0.0;
};

DomainReport per_domain_report(std::span<const ConfusionMatrix> per_domain);

}  // namespace fedssg::metrics
