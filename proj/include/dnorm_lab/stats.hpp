#pragma once

// Monte Carlo plumbing: estimates with standard errors, mergeable
// accumulators, and a block-parallel replicate loop whose result does not
// depend on the number of workers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "dnorm_lab/density.hpp"
#include "dnorm_lab/errors.hpp"

namespace dnorm_lab {

struct MCEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t n = 0;
};

// Welford accumulator with Chan's pairwise merge.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  void merge(const RunningStats& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double delta = other.mean_ - mean_;
    const double n = na + nb;
    mean_ += delta * nb / n;
    m2_ += other.m2_ + delta * delta * na * nb / n;
    n_ += other.n_;
  }

  [[nodiscard]] std::size_t count() const { return n_; }
  [[nodiscard]] double mean() const { return mean_; }
  [[nodiscard]] double variance() const { return n_ > 1 ? std::max(0.0, m2_) / static_cast<double>(n_ - 1) : 0.0; }

  [[nodiscard]] MCEstimate estimate() const {
    return {mean_, n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0, n_};
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Success counter for event probabilities.
struct ProportionCounter {
  std::size_t successes = 0;
  std::size_t trials = 0;

  void merge(const ProportionCounter& o) {
    successes += o.successes;
    trials += o.trials;
  }
  [[nodiscard]] double proportion() const {
    return trials == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(trials);
  }
  [[nodiscard]] MCEstimate estimate() const {
    const double p = proportion();
    return {p, trials > 0 ? std::sqrt(p * (1.0 - p) / static_cast<double>(trials)) : 0.0, trials};
  }
};

// Family-wise 3-sigma level: two-sided normal tail mass beyond 3.
inline constexpr double kThreeSigmaLevel = 0.0026997960632601866;

// Two-sided normal critical value with Bonferroni correction over `tests`
// comparisons at family-wise level alpha. Equals 3 for one test at the
// default level.
inline double bonferroni_critical(std::size_t tests, double alpha = kThreeSigmaLevel) {
  if (tests == 0) tests = 1;
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in (0,1)");
  return normal_quantile(1.0 - alpha / (2.0 * static_cast<double>(tests)));
}

inline std::size_t default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

inline constexpr std::size_t kReplicateBlock = 1024;

// Runs body(acc, begin, end) over replicate blocks [begin, end) of fixed size,
// each block into its own accumulator built by make(). Blocks are returned in
// order, so a sequential fold over them is independent of `workers`.
template <class Make, class Body>
auto run_replicate_blocks(std::size_t n, std::size_t workers, Make make, Body body) {
  using Acc = decltype(make());
  const std::size_t blocks = (n + kReplicateBlock - 1) / kReplicateBlock;
  std::vector<Acc> out;
  out.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) out.push_back(make());
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(blocks, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks) return;
      try {
        body(out[b], b * kReplicateBlock, std::min(n, (b + 1) * kReplicateBlock));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(blocks);
        return;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace dnorm_lab
