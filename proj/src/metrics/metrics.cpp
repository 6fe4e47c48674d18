#include "fedssg/metrics/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "fedssg/core/error.hpp"

namespace fedssg::metrics {

ConfusionMatrix::ConfusionMatrix(int classes)
    : classes_(classes), counts_(static_cast<std::size_t>(classes * classes), 0) {
  require(classes >= 1, "confusion matrix: need at least one class");
}

ConfusionMatrix::ConfusionMatrix(int classes, std::vector<std::int64_t> counts)
    : classes_(classes), counts_(std::move(counts)) {
  require(classes >= 1 && counts_.size() == static_cast<std::size_t>(classes * classes),
          "confusion matrix: counts must be classes x classes");
  for (auto v : counts_) require(v >= 0, "confusion matrix: negative entry");
}

void ConfusionMatrix::add(int truth, int predicted, std::int64_t n) {
  require(truth >= 0 && truth < classes_ && predicted >= 0 && predicted < classes_,
          "confusion matrix: class id out of range");
  counts_[static_cast<std::size_t>(truth * classes_ + predicted)] += n;
}

std::int64_t ConfusionMatrix::at(int truth, int predicted) const {
  return counts_[static_cast<std::size_t>(truth * classes_ + predicted)];
}

std::int64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0}); }

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (int c = 0; c < classes_; ++c) t += at(c, c);
  return t;
}

std::int64_t ConfusionMatrix::row_sum(int truth) const {
  std::int64_t s = 0;
  for (int p = 0; p < classes_; ++p) s += at(truth, p);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(int predicted) const {
  std::int64_t s = 0;
  for (int t = 0; t < classes_; ++t) s += at(t, predicted);
  return s;
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  require(total > 0, "accuracy: empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

std::vector<double> per_class_f1(const ConfusionMatrix& cm) {
  std::vector<double> f1(static_cast<std::size_t>(cm.classes()), 0.0);
  for (int c = 0; c < cm.classes(); ++c) {
    const double tp = static_cast<double>(cm.at(c, c));
    const auto predicted = cm.col_sum(c);
    const auto actual = cm.row_sum(c);
    const double p = predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
    const double r = actual > 0 ? tp / static_cast<double>(actual) : 0.0;
    if (p + r > 0.0) f1[static_cast<std::size_t>(c)] = 2.0 * p * r / (p + r);
  }
  return f1;
}

double macro_f1(const ConfusionMatrix& cm) {
  const auto f1 = per_class_f1(cm);
  return std::accumulate(f1.begin(), f1.end(), 0.0) / static_cast<double>(f1.size());
}

std::vector<int> predict(const nn::ParamVector& params, const Dataset& data) {
  std::vector<int> out(data.size(), 0);
  constexpr std::size_t kChunk = 512;
  const std::size_t chunks = (data.size() + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < chunks; ++k) {
    const std::size_t begin = k * kChunk;
    const std::size_t end = std::min(data.size(), begin + kChunk);
    const std::span<const Sample> part(data.samples().data() + begin, end - begin);
    const auto pass = nn::forward(params, part, nn::Mode::Eval);
    for (std::size_t r = 0; r < pass.logits.rows; ++r) {
      const auto row = pass.logits.row(r);
      out[begin + r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
  }
  return out;
}

std::vector<ConfusionMatrix> confusion_by_domain(std::span<const int> predictions, const Dataset& data) {
  require(predictions.size() == data.size(), "confusion_by_domain: one prediction per sample");
  std::vector<ConfusionMatrix> out(static_cast<std::size_t>(data.domains()), ConfusionMatrix(data.classes()));
  for (std::size_t i = 0; i < data.size(); ++i)
    out[static_cast<std::size_t>(data[i].domain)].add(data[i].label, predictions[i]);
  return out;
}

std::vector<ConfusionMatrix> evaluate(const nn::ParamVector& params, const Dataset& test) {
  for (std::size_t j = 0; j < test.domain_counts().size(); ++j)
    require(test.domain_counts()[j] > 0, "evaluate: domain " + std::to_string(j) + " has no test samples");
  const auto pred = predict(params, test);
  return confusion_by_domain(pred, test);
}

DomainReport per_domain_report(std::span<const ConfusionMatrix> per_domain) {
  require(!per_domain.empty(), "per_domain_report: no domains");
  DomainReport r;
  for (const auto& cm : per_domain) {
    r.accuracy.push_back(accuracy(cm));
    r.f1.push_back(macro_f1(cm));
  }
  const double n = static_cast<double>(per_domain.size());
  r.accuracy_avg = std::accumulate(r.accuracy.begin(), r.accuracy.end(), 0.0) / n;
  r.f1_avg = std::accumulate(r.f1.begin(), r.f1.end(), 0.0) / n;
  return r;
}

}  // namespace fedssg::metrics
