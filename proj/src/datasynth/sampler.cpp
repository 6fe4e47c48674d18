#include "fedssg/datasynth/sampler.hpp"

#include "fedssg/core/error.hpp"

namespace fedssg::datasynth {

std::vector<double> balanced_class_probabilities(std::span<const std::int64_t> class_counts) {
  std::vector<double> p(class_counts.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (class_counts[i] > 0) {
      p[i] = 1.0 / static_cast<double>(class_counts[i]);
      z += p[i];
    }
  }
  require(z > 0.0, "class-balanced sampler: every class count is zero");
  for (auto& x : p) x /= z;
  return p;
}

namespace {

std::vector<std::int64_t> sizes(const std::vector<std::vector<std::size_t>>& by_class) {
  std::vector<std::int64_t> out;
  for (const auto& v : by_class) out.push_back(static_cast<std::int64_t>(v.size()));
  return out;
}

std::vector<std::vector<std::size_t>> contiguous_blocks(std::span<const std::int64_t> counts) {
  std::vector<std::vector<std::size_t>> out(counts.size());
  std::size_t next = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    require(counts[c] >= 0, "class-balanced sampler: negative count");
    for (std::int64_t i = 0; i < counts[c]; ++i) out[c].push_back(next++);
  }
  return out;
}

}  // namespace

ClassBalancedSampler::ClassBalancedSampler(std::vector<std::vector<std::size_t>> indices_by_class,
                                           std::size_t batch_size, RngStream rng)
    : by_class_(std::move(indices_by_class)),
      probs_(balanced_class_probabilities(sizes(by_class_))),
      batch_size_(batch_size),
      rng_(rng) {
  require(batch_size_ >= 1, "class-balanced sampler: batch size must be positive");
}

ClassBalancedSampler::ClassBalancedSampler(const Dataset& data, std::size_t batch_size, RngStream rng)
    : ClassBalancedSampler(data.indices_by_class(), batch_size, rng) {}

ClassBalancedSampler::ClassBalancedSampler(std::span<const std::int64_t> class_counts, std::size_t batch_size,
                                           RngStream rng)
    : ClassBalancedSampler(contiguous_blocks(class_counts), batch_size, rng) {}

int ClassBalancedSampler::draw_class() { return static_cast<int>(rng_.categorical(probs_)); }

std::vector<std::size_t> ClassBalancedSampler::next_batch() {
  std::vector<std::size_t> batch(batch_size_);
  for (auto& slot : batch) {
    const auto& pool = by_class_[static_cast<std::size_t>(draw_class())];
    slot = pool[static_cast<std::size_t>(rng_.below(pool.size()))];
  }
  return batch;
}

}  // namespace fedssg::datasynth
