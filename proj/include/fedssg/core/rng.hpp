#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fedssg {

/// One step of a stream path: either a text tag or an integer index.
/// Text "7" and integer 7 are different labels.
class StreamLabel {
 public:
  StreamLabel(std::string_view text) : value_(std::string(text)) {}
  StreamLabel(const char* text) : value_(std::string(text)) {}
  StreamLabel(std::uint64_t index) : value_(index) {}
  StreamLabel(int index) : value_(static_cast<std::uint64_t>(static_cast<std::int64_t>(index))) {}

  std::uint64_t hash() const;

 private:
  std::variant<std::string, std::uint64_t> value_;
};

/// Splittable pseudo-random stream.
///
/// A stream is identified by its root seed and the path of labels used to
/// derive it; the pair fully determines the output sequence. The generator is
/// xoshiro256** keyed through SplitMix64, and all distributions are
/// implemented here rather than taken from <random> so that sequences are the
/// same with every standard library.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  RngStream derive(const StreamLabel& label) const;
  RngStream derive_path(std::initializer_list<StreamLabel> path) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t key() const { return key_; }

  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p);
  double normal();
  double normal(double mean, double stddev);
  /// log of a Gamma(shape, 1) variate; stays finite for tiny shapes.
  double log_gamma_variate(double shape);
  double gamma(double shape);
  /// Symmetric Dirichlet(alpha, ..., alpha) over n categories.
  std::vector<double> dirichlet(std::size_t n, double alpha);
  /// Index drawn from unnormalized nonnegative weights.
  std::size_t categorical(std::span<const double> weights);

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  RngStream(std::uint64_t seed, std::uint64_t key);
  void reseed();

  std::uint64_t seed_;
  std::uint64_t key_;
  std::array<std::uint64_t, 4> state_{};
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace fedssg
