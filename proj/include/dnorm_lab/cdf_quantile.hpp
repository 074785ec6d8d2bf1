#pragma once

// Numerical cdf H(x) = int_{-inf}^x h and quantile H^{-1}(u) = inf{x : H(x) >= u}
// for a density h, built from a table of segment masses. Both tails are
// accumulated separately so quantiles near 0 and near 1 keep full relative
// accuracy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "dnorm_lab/density.hpp"
#include "dnorm_lab/errors.hpp"
#include "dnorm_lab/quadrature.hpp"

namespace dnorm_lab {

class CdfQuantile {
 public:
  // Normalization check threshold on int h.
  static constexpr double kNormalizationTolerance = 1e-6;

  CdfQuantile(Density h, const QuadConfig& cfg, double x_tolerance = 1e-13) : h_(h), x_tol_(x_tolerance) {
    cfg.validate();
    if (!(x_tolerance > 0.0)) throw PreconditionError("quantile x-tolerance must be positive");
    auto pdf = [this](double x) { return h_.pdf(x); };
    const double lo = h_.support_lower();
    const double hi = h_.support_upper();
    const Domain whole = std::isfinite(lo) ? Domain::finite(lo, hi) : Domain::real_line();
    mass_ = integrate(pdf, whole, cfg).value;
    if (std::abs(mass_ - 1.0) > kNormalizationTolerance) {
      throw PreconditionError("density " + h_.name() + " integrates to " + std::to_string(mass_) + ", not 1");
    }
    build_table();
  }

  [[nodiscard]] const Density& density() const { return h_; }
  [[nodiscard]] double total_mass() const { return mass_; }

  [[nodiscard]] double cdf(double x) const {
    if (x <= h_.support_lower()) return 0.0;
    if (x >= h_.support_upper()) return 1.0;
    if (x > h_.centre()) return 1.0 - survival(x);
    if (x < knots_.front()) return tail_integral(x, true);
    const std::size_t j = segment_of(x);
    return lower_[j] + segment_integral(knots_[j], x);
  }

  [[nodiscard]] double survival(double x) const {
    if (x <= h_.support_lower()) return 1.0;
    if (x >= h_.support_upper()) return 0.0;
    if (x <= h_.centre()) return 1.0 - cdf(x);
    if (x > knots_.back()) return tail_integral(x, false);
    const std::size_t j = segment_of(x);
    return upper_[j + 1] + segment_integral(x, knots_[j + 1]);
  }

  [[nodiscard]] double operator()(double x) const { return cdf(x); }

  [[nodiscard]] double quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw PreconditionError("quantile argument must lie in (0,1)");
    if (u <= 0.5) {
      if (u < lower_.front()) return tail_quantile(u, true);
      auto it = std::upper_bound(lower_.begin(), lower_.end(), u);
      const std::size_t j = static_cast<std::size_t>(std::distance(lower_.begin(), it)) - 1;
      if (j + 1 >= knots_.size()) return knots_.back();
      return solve(j, u - lower_[j], true);
    }
    const double q = 1.0 - u;
    if (q < upper_.back()) return tail_quantile(q, false);
    // upper_ is nonincreasing; find j with upper_[j+1] <= q < upper_[j].
    auto it = std::upper_bound(upper_.rbegin(), upper_.rend(), q);
    const std::size_t idx = upper_.size() - static_cast<std::size_t>(std::distance(upper_.rbegin(), it));
    const std::size_t j = idx == 0 ? 0 : idx - 1;
    if (j + 1 >= knots_.size()) return knots_.back();
    return solve(j, q - upper_[j + 1], false);
  }

 private:
  void build_table() {
    const double c = h_.centre();
    const double s = h_.kind() == Density::Kind::uniform ? 0.5 * h_.scale() / 8.0 : h_.scale();
    const double lo = h_.support_lower();
    const double hi = h_.support_upper();
    std::vector<double> left;
    std::vector<double> right;
    for (int j = 1; j <= 128; ++j) {
      left.push_back(c - s * j / 16.0);
      right.push_back(c + s * j / 16.0);
    }
    auto negligible = [&](double x) {
      return h_.pdf(x) * std::abs(x - c) < 1e-22 || std::abs(x - c) > 1e300;
    };
    if (std::isinf(lo)) {
      for (int j = 1; !negligible(left.back()); ++j) left.push_back(c - 8.0 * s * std::exp2(j / 4.0));
      for (int j = 1; !negligible(right.back()); ++j) right.push_back(c + 8.0 * s * std::exp2(j / 4.0));
    }
    knots_.clear();
    for (auto it = left.rbegin(); it != left.rend(); ++it) {
      if (*it >= lo) knots_.push_back(*it);
    }
    if (!knots_.empty() && knots_.front() > lo && std::isfinite(lo)) knots_.insert(knots_.begin(), lo);
    knots_.push_back(c);
    for (double x : right) {
      if (x <= hi) knots_.push_back(x);
    }
    if (knots_.back() < hi && std::isfinite(hi)) knots_.push_back(hi);

    const std::size_t n = knots_.size();
    std::vector<double> seg(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) seg[j] = segment_integral(knots_[j], knots_[j + 1]);
    lower_.assign(n, 0.0);
    upper_.assign(n, 0.0);
    lower_[0] = std::isfinite(lo) ? 0.0 : tail_integral(knots_.front(), true);
    for (std::size_t j = 0; j + 1 < n; ++j) lower_[j + 1] = lower_[j] + seg[j];
    upper_[n - 1] = std::isfinite(hi) ? 0.0 : tail_integral(knots_.back(), false);
    for (std::size_t j = n - 1; j > 0; --j) upper_[j - 1] = upper_[j] + seg[j - 1];
  }

  [[nodiscard]] std::size_t segment_of(double x) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    const auto j = static_cast<std::size_t>(std::distance(knots_.begin(), it));
    return std::min(j == 0 ? 0 : j - 1, knots_.size() - 2);
  }

  [[nodiscard]] double segment_integral(double a, double b) const {
    if (a >= b) return 0.0;
    auto pdf = [this](double x) { return h_.pdf(x); };
    return detail::adaptive(pdf, a, b, 1e-300, 1e-14, 2000).value;
  }

  [[nodiscard]] double tail_integral(double x, bool left) const {
    auto pdf = [this](double y) { return h_.pdf(y); };
    QuadConfig tail;
    tail.abs_tol = 1e-300;
    tail.rel_tol = 1e-12;
    tail.tail_tol = 1e-300;
    try {
      return integrate(pdf, left ? Domain::to(x) : Domain::from(x), tail).value;
    } catch (const QuadratureError& e) {
      return e.partial_value();
    }
  }

  // Finds x in segment j with mass `target` measured from the segment's left
  // end (from_left) or right end. Safeguarded Newton: Newton steps inside the
  // bracket, bisection otherwise.
  [[nodiscard]] double solve(std::size_t j, double target, bool from_left) const {
    double a = knots_[j];
    double b = knots_[j + 1];
    auto residual = [&](double x) {
      return from_left ? segment_integral(knots_[j], x) - target : target - segment_integral(x, knots_[j + 1]);
    };
    const double total = from_left ? lower_[j + 1] - lower_[j] : upper_[j] - upper_[j + 1];
    double x = total > 0.0 ? a + (b - a) * std::clamp(from_left ? target / total : 1.0 - target / total, 0.0, 1.0)
                           : 0.5 * (a + b);
    for (int iter = 0; iter < 200; ++iter) {
      const double r = residual(x);
      if (r == 0.0) return x;
      (r < 0.0 ? a : b) = x;
      const double d = h_.pdf(x);
      double next = d > 0.0 ? x - r / d : 0.5 * (a + b);
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      const double tol = x_tol_ * std::max(1.0, std::abs(next));
      if (std::abs(next - x) <= tol || b - a <= tol) return next;
      x = next;
    }
    return x;
  }

  // Quantiles beyond the table: bracket outward, then bisect on tail mass.
  [[nodiscard]] double tail_quantile(double p, bool left) const {
    double inner = left ? knots_.front() : knots_.back();
    double step = std::max(1.0, std::abs(inner));
    double outer = left ? inner - step : inner + step;
    while (tail_integral(outer, left) > p && std::abs(outer) < 1e300) {
      inner = outer;
      step *= 2.0;
      outer = left ? outer - step : outer + step;
    }
    for (int i = 0; i < 300; ++i) {
      const double mid = 0.5 * (inner + outer);
      if (mid == inner || mid == outer) break;
      (tail_integral(mid, left) > p ? inner : outer) = mid;
      if (std::abs(outer - inner) <= x_tol_ * std::abs(mid)) break;
    }
    return 0.5 * (inner + outer);
  }

  Density h_;
  double x_tol_;
  double mass_ = 0.0;
  std::vector<double> knots_;
  std::vector<double> lower_;  // H(knot_j)
  std::vector<double> upper_;  // 1 - H(knot_j), accumulated from the right
};

inline CdfQuantile cdf_and_quantile(const Density& h, const QuadConfig& cfg = {}) { return CdfQuantile(h, cfg); }

}  // namespace dnorm_lab
