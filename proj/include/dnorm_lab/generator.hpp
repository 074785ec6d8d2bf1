#pragma once

// Generator processes: nonnegative processes Z on [0,1] with E[Z_t] = 1 and
// E[sup_t Z_t] < inf. A generator is sampled path by path; a path is
// evaluated on whatever t-points the caller needs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dnorm_lab/density.hpp"
#include "dnorm_lab/efunc.hpp"
#include "dnorm_lab/errors.hpp"
#include "dnorm_lab/random.hpp"
#include "dnorm_lab/spectral.hpp"
#include "dnorm_lab/stats.hpp"

namespace dnorm_lab {

// Nonnegative scalar law with mean 1, for constant generators Z_t = Z.
class ScalarLaw {
 public:
  enum class Kind { point, uniform, exponential };

  static ScalarLaw point(double value = 1.0) { return ScalarLaw(Kind::point, value, value); }
  static ScalarLaw uniform(double lo, double hi) {
    if (!(lo >= 0.0 && hi > lo)) throw PreconditionError("uniform law needs 0 <= lo < hi");
    return ScalarLaw(Kind::uniform, lo, hi);
  }
  // Standard exponential (mean 1, unbounded).
  static ScalarLaw exponential() { return ScalarLaw(Kind::exponential, 1.0, 1.0); }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] double lower() const { return a_; }
  [[nodiscard]] double upper() const { return b_; }

  [[nodiscard]] double mean() const {
    switch (kind_) {
      case Kind::point: return a_;
      case Kind::uniform: return 0.5 * (a_ + b_);
      case Kind::exponential: return 1.0;
    }
    return 0.0;
  }

  [[nodiscard]] std::optional<double> essential_sup() const {
    if (kind_ == Kind::exponential) return std::nullopt;
    return b_;
  }

  [[nodiscard]] double sample(UniformStream& u) const {
    switch (kind_) {
      case Kind::point: return a_;
      case Kind::uniform: return a_ + (b_ - a_) * u();
      case Kind::exponential: return u.exponential();
    }
    return 0.0;
  }

  [[nodiscard]] std::string name() const {
    std::ostringstream os;
    switch (kind_) {
      case Kind::point: os << "point(" << a_ << ")"; break;
      case Kind::uniform: os << "uniform(" << a_ << ", " << b_ << ")"; break;
      case Kind::exponential: os << "exponential(1)"; break;
    }
    return os.str();
  }

 private:
  ScalarLaw(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {
    if (!std::isfinite(a) || !std::isfinite(b) || a < 0.0) throw PreconditionError("scalar law must be nonnegative");
  }
  Kind kind_;
  double a_;
  double b_;
};

class GeneratorProcess {
 public:
  // Draws one path at ts into out; returns the number of rejected draws.
  using SampleFn = std::function<std::size_t(UniformStream&, std::span<const double> ts, std::span<double> out)>;

  struct Info {
    std::string label;
    // Almost sure bound on sup_t Z_t.
    std::optional<double> sup_bound;
    // Spectral family whose quadrature D-norm this generator induces.
    std::optional<SpectralFamily> family;
    // True when the induced D-norm is the sup-norm.
    bool induces_sup_norm = false;
  };

  GeneratorProcess(SampleFn fn, Info info)
      : impl_(std::make_shared<const Impl>(Impl{std::move(fn), std::move(info)})) {}

  std::size_t sample(UniformStream& u, std::span<const double> ts, std::span<double> out) const {
    return impl_->fn(u, ts, out);
  }

  [[nodiscard]] const std::string& label() const { return impl_->info.label; }
  [[nodiscard]] std::optional<double> sup_bound() const { return impl_->info.sup_bound; }
  [[nodiscard]] const std::optional<SpectralFamily>& family() const { return impl_->info.family; }
  [[nodiscard]] bool induces_sup_norm() const { return impl_->info.induces_sup_norm; }

 private:
  struct Impl {
    SampleFn fn;
    Info info;
  };
  std::shared_ptr<const Impl> impl_;
};

// h(X) below this is treated as underflow and the draw is rejected.
inline constexpr double kDensityFloor = 1e-300;
// A Monte Carlo run fails if more than this fraction of draws was rejected.
inline constexpr double kMaxRejectionRate = 1e-3;

inline void check_rejections(std::size_t rejected, std::size_t draws) {
  if (draws > 0 && static_cast<double>(rejected) > kMaxRejectionRate * static_cast<double>(draws)) {
    throw NumericalError("h(X) underflow rejected " + std::to_string(rejected) + " of " + std::to_string(draws) +
                         " draws (limit 0.1%)");
  }
}

// Z_t = Z for a single nonnegative Z with E[Z] = 1; equivalent to Z = 1.
inline GeneratorProcess constant_generator(const ScalarLaw& law) {
  if (std::abs(law.mean() - 1.0) > 1e-12) {
    throw PreconditionError("constant_generator needs a law with mean 1, got mean " + std::to_string(law.mean()));
  }
  GeneratorProcess::Info info;
  info.label = "constant(" + law.name() + ")";
  info.sup_bound = law.essential_sup();
  info.induces_sup_norm = true;
  auto fn = [law](UniformStream& u, std::span<const double> ts, std::span<double> out) -> std::size_t {
    const double z = law.sample(u);
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(ts.size()), z);
    return 0;
  };
  return GeneratorProcess(fn, std::move(info));
}

// Z_t = g*_t(X) / h(X) with X ~ h. For the gaussian family with h the matching
// normal density the path is exp(t (2X - t) / (2 sigma^2)).
inline GeneratorProcess ratio_generator(const SpectralFamily& fam, const Density& h) {
  if (fam.domain() != SpectralDomain::real_line) {
    throw PreconditionError("ratio_generator needs a spectral family on the real line");
  }
  if (!h.strictly_positive()) throw PreconditionError("ratio_generator needs a strictly positive density h");
  GeneratorProcess::Info info;
  info.label = "ratio(" + fam.label() + ", h=" + h.name() + ")";
  info.family = fam;
  if (fam.has_exact_sup()) info.sup_bound = ratio_sup_bound(fam.exact_sup_fn(), h);

  const auto sigma = fam.gaussian_sigma();
  if (sigma && h.kind() == Density::Kind::normal && h.scale() == *sigma) {
    const double two_var = 2.0 * *sigma * *sigma;
    auto fn = [h, two_var](UniformStream& u, std::span<const double> ts, std::span<double> out) -> std::size_t {
      const double x = h.sample(u);
      for (std::size_t k = 0; k < ts.size(); ++k) out[k] = std::exp(ts[k] * (2.0 * x - ts[k]) / two_var);
      return 0;
    };
    return GeneratorProcess(fn, std::move(info));
  }
  auto fn = [fam, h](UniformStream& u, std::span<const double> ts, std::span<double> out) -> std::size_t {
    std::size_t rejected = 0;
    for (;;) {
      const double x = h.sample(u);
      const double hx = h.pdf(x);
      if (!(hx >= kDensityFloor)) {
        if (++rejected > 10000) throw NumericalError("ratio_generator: h(X) underflows persistently");
        continue;
      }
      fam.slice(x, ts, out);
      for (std::size_t k = 0; k < ts.size(); ++k) out[k] /= hx;
      return rejected;
    }
  };
  return GeneratorProcess(fn, std::move(info));
}

// Z_t = g(U, t) with U ~ U(0,1).
inline GeneratorProcess spectral_generator(const SpectralFamily& fam) {
  if (fam.domain() != SpectralDomain::unit_interval) {
    throw PreconditionError("spectral_generator needs a spectral family on [0,1]");
  }
  GeneratorProcess::Info info;
  info.label = "spectral(" + fam.label() + ")";
  info.family = fam;
  info.sup_bound = fam.sup_bound();
  auto fn = [fam](UniformStream& u, std::span<const double> ts, std::span<double> out) -> std::size_t {
    fam.slice(u(), ts, out);
    return 0;
  };
  return GeneratorProcess(fn, std::move(info));
}

struct GeneratorCheckOptions {
  std::vector<double> check_ts = {0.0, 0.25, 0.5, 0.75, 1.0};
  GridConfig sup_grid{200};
  double critical = 3.0;
  std::size_t workers = 1;
};

struct GeneratorCheck {
  std::string generator;
  std::vector<double> ts;
  std::vector<MCEstimate> means;  // E[Z_t] per t in ts
  MCEstimate sup_mean;            // estimate of m = E[sup_t Z_t]
  std::vector<double> flagged_ts; // |mean - 1| > critical * SE
  std::size_t rejected = 0;

  [[nodiscard]] bool passed() const { return flagged_ts.empty() && std::isfinite(sup_mean.value); }
};

inline GeneratorCheck check_generator(const GeneratorProcess& gen, std::size_t n, SeedSpec seed = {},
                                      const GeneratorCheckOptions& opts = {}) {
  if (n < 2) throw PreconditionError("check_generator needs n >= 2");
  std::vector<double> ts = opts.sup_grid.points();
  ts.insert(ts.end(), opts.check_ts.begin(), opts.check_ts.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end(), [](double a, double b) { return std::abs(a - b) <= 1e-12; }), ts.end());
  std::vector<std::size_t> idx;
  for (double t : opts.check_ts) {
    auto it = std::lower_bound(ts.begin(), ts.end(), t - 1e-12);
    idx.push_back(static_cast<std::size_t>(std::distance(ts.begin(), it)));
  }
  struct Acc {
    std::vector<RunningStats> means;
    RunningStats sup;
    std::size_t rejected = 0;
  };
  const std::size_t m = idx.size();
  auto blocks = run_replicate_blocks(
      n, opts.workers, [m] { return Acc{std::vector<RunningStats>(m), {}, 0}; },
      [&](Acc& acc, std::size_t begin, std::size_t end) {
        std::vector<double> path(ts.size());
        for (std::size_t i = begin; i < end; ++i) {
          UniformStream u(seed.child(i));
          acc.rejected += gen.sample(u, ts, path);
          for (std::size_t j = 0; j < m; ++j) acc.means[j].add(path[idx[j]]);
          acc.sup.add(*std::max_element(path.begin(), path.end()));
        }
      });
  Acc total{std::vector<RunningStats>(m), {}, 0};
  for (const auto& b : blocks) {
    for (std::size_t j = 0; j < m; ++j) total.means[j].merge(b.means[j]);
    total.sup.merge(b.sup);
    total.rejected += b.rejected;
  }
  check_rejections(total.rejected, n + total.rejected);
  GeneratorCheck out;
  out.generator = gen.label();
  out.ts = opts.check_ts;
  out.rejected = total.rejected;
  out.sup_mean = total.sup.estimate();
  for (std::size_t j = 0; j < m; ++j) {
    const auto e = total.means[j].estimate();
    out.means.push_back(e);
    if (std::abs(e.value - 1.0) > opts.critical * e.standard_error) out.flagged_ts.push_back(opts.check_ts[j]);
  }
  return out;
}

}  // namespace dnorm_lab
