#include "fedssg/core/rng.hpp"

#include <cmath>
#include <limits>

#include "fedssg/core/error.hpp"

namespace fedssg {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kTextTag = 0x7465787400000001ull;
constexpr std::uint64_t kIndexTag = 0x696e646578000002ull;

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

std::uint64_t StreamLabel::hash() const {
  if (const auto* text = std::get_if<std::string>(&value_)) {
    return mix64(fnv1a(*text) ^ kTextTag);
  }
  return mix64(std::get<std::uint64_t>(value_) * kGolden ^ kIndexTag);
}

RngStream::RngStream(std::uint64_t seed) : RngStream(seed, mix64(seed + kGolden)) {}

RngStream::RngStream(std::uint64_t seed, std::uint64_t key) : seed_(seed), key_(key) {
  reseed();
}

void RngStream::reseed() {
  std::uint64_t sm = key_;
  for (auto& s : state_) {
    sm += kGolden;
    s = mix64(sm);
  }
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

RngStream RngStream::derive(const StreamLabel& label) const {
  std::uint64_t child = mix64(key_ * 0xD1B54A32D192ED03ull + label.hash());
  return RngStream(seed_, child);
}

RngStream RngStream::derive_path(std::initializer_list<StreamLabel> path) const {
  RngStream out = *this;
  for (const auto& label : path) out = out.derive(label);
  return out;
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t RngStream::below(std::uint64_t n) {
  require(n > 0, "RngStream::below: empty range");
  // Lemire-style rejection on the low product word.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = next_u64();
    const unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
    if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
  }
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

double RngStream::normal() {
  // Marsaglia polar method; the second variate is discarded so that the
  // stream has no hidden state beyond the generator words.
  for (;;) {
    const double u = 2.0 * uniform() - 1.0;
    const double v = 2.0 * uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

double RngStream::normal(double mean, double stddev) { return mean + stddev * normal(); }

double RngStream::log_gamma_variate(double shape) {
  require(shape > 0.0, "gamma shape must be positive");
  if (shape < 1.0) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return log_gamma_variate(shape + 1.0) + std::log(u) / shape;
  }
  // Marsaglia & Tsang.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u <= 0.0) continue;
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return std::log(d * v);
  }
}

double RngStream::gamma(double shape) { return std::exp(log_gamma_variate(shape)); }

std::vector<double> RngStream::dirichlet(std::size_t n, double alpha) {
  std::vector<double> out(n);
  if (n == 0) return out;
  double max_log = -std::numeric_limits<double>::infinity();
  for (auto& x : out) {
    x = log_gamma_variate(alpha);
    max_log = std::max(max_log, x);
  }
  double total = 0.0;
  for (auto& x : out) {
    x = std::exp(x - max_log);
    total += x;
  }
  for (auto& x : out) x /= total;
  return out;
}

std::size_t RngStream::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  require(total > 0.0, "categorical: weights sum to zero");
  const double u = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    acc += weights[i];
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace fedssg
