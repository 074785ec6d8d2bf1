#pragma once

// Seeded randomness. Every replicate of every Monte Carlo loop owns a stream
// derived from (master seed, stream index), so results do not depend on how
// replicates are distributed across workers.

#include <cmath>
#include <cstdint>
#include <limits>

namespace dnorm_lab {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t s = x;
  return splitmix64(s);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

struct SeedSpec {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;

  // Substream for replicate / sub-task `index`. Children of distinct indices
  // (and of distinct parents) are distinct streams.
  [[nodiscard]] constexpr SeedSpec child(std::uint64_t index) const {
    return {master, detail::mix64(detail::rotl(stream, 23) ^ detail::mix64(index + 0x632BE59BD9B4E019ULL))};
  }

  friend constexpr bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

// xoshiro256** (Blackman & Vigna), state filled by splitmix64. Cheap to seed,
// which matters with one stream per replicate.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(SeedSpec seed) {
    std::uint64_t sm = detail::mix64(seed.master) ^ detail::rotl(detail::mix64(~seed.stream), 31);
    for (auto& w : s_) w = detail::splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = detail::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

 private:
  std::uint64_t s_[4]{};
};

// U(0,1) variates on the open interval: (k + 1/2) 2^-53, k in [0, 2^53).
class UniformStream {
 public:
  explicit UniformStream(SeedSpec seed) : engine_(seed) {}

  double operator()() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal by Box-Muller; consumes exactly two uniforms.
  double normal() {
    const double u1 = (*this)();
    const double u2 = (*this)();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double exponential() { return -std::log((*this)()); }

 private:
  Xoshiro256 engine_;
};

// Partial sums Gamma_1 < Gamma_2 < ... of iid standard exponentials: the
// arrival times of a unit-rate Poisson process on (0, inf).
class ExponentialArrivals {
 public:
  explicit ExponentialArrivals(SeedSpec seed) : uniform_(seed) {}

  double next() {
    const double next = gamma_ + uniform_.exponential();
    gamma_ = next > gamma_ ? next : std::nextafter(gamma_, std::numeric_limits<double>::infinity());
    return gamma_;
  }

  [[nodiscard]] double current() const { return gamma_; }

  // Uniforms from the same stream, for marks attached to the arrivals.
  UniformStream& uniforms() { return uniform_; }

 private:
  UniformStream uniform_;
  double gamma_ = 0.0;
};

inline UniformStream uniform_stream(SeedSpec seed) { return UniformStream(seed); }
inline ExponentialArrivals exponential_arrivals(SeedSpec seed) { return ExponentialArrivals(seed); }

}  // namespace dnorm_lab
