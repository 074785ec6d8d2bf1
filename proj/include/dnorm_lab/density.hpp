#pragma once

// Univariate probability densities used as the auxiliary density h of the
// ratio / change-of-variable constructions, and as kernels psi for shift
// families.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dnorm_lab/errors.hpp"
#include "dnorm_lab/random.hpp"

namespace dnorm_lab {

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Standard normal quantile by bisection on erfc; used for critical values,
// so speed is irrelevant and accuracy is ~1 ulp of the bracket.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw PreconditionError("normal_quantile needs p in (0,1)");
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const bool below = p < 0.5 ? normal_cdf(mid) < p : 0.5 * std::erfc(mid / std::numbers::sqrt2) > 1.0 - p;
    (below ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

class Density {
 public:
  enum class Kind { normal, laplace, cauchy, student_t, uniform };

  static Density normal(double scale = 1.0) { return Density(Kind::normal, scale, 0.0); }
  static Density laplace(double scale = 1.0) { return Density(Kind::laplace, scale, 0.0); }
  static Density cauchy(double scale = 1.0) { return Density(Kind::cauchy, scale, 0.0); }
  static Density student_t(int dof, double scale = 1.0) {
    if (dof < 1) throw PreconditionError("student_t needs dof >= 1");
    return Density(Kind::student_t, scale, dof);
  }
  // Uniform on [0, width].
  static Density uniform(double width = 1.0) { return Density(Kind::uniform, width, 0.0); }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] double scale() const { return scale_; }
  [[nodiscard]] int dof() const { return static_cast<int>(dof_); }

  [[nodiscard]] std::string name() const {
    switch (kind_) {
      case Kind::normal: return "normal";
      case Kind::laplace: return "laplace";
      case Kind::cauchy: return "cauchy";
      case Kind::student_t: return "student_t" + std::to_string(dof());
      case Kind::uniform: return "uniform";
    }
    return "?";
  }

  [[nodiscard]] double pdf(double x) const {
    const double z = x / scale_;
    switch (kind_) {
      case Kind::normal: return normal_pdf(z) / scale_;
      case Kind::laplace: return 0.5 * std::exp(-std::abs(z)) / scale_;
      case Kind::cauchy: return 1.0 / (std::numbers::pi * scale_ * (1.0 + z * z));
      case Kind::student_t: return t_norm_ * std::pow(1.0 + z * z / dof_, -0.5 * (dof_ + 1.0)) / scale_;
      case Kind::uniform: return (x >= 0.0 && x <= scale_) ? 1.0 / scale_ : 0.0;
    }
    return 0.0;
  }

  [[nodiscard]] double sample(UniformStream& u) const {
    switch (kind_) {
      case Kind::normal: return scale_ * u.normal();
      case Kind::laplace: {
        const double v = u() - 0.5;
        return -scale_ * std::copysign(std::log1p(-2.0 * std::abs(v)), v);
      }
      case Kind::cauchy: return scale_ * std::tan(std::numbers::pi * (u() - 0.5));
      case Kind::student_t: {
        double chi2 = 0.0;
        for (int i = 0; i < dof(); ++i) {
          const double g = u.normal();
          chi2 += g * g;
        }
        return scale_ * u.normal() / std::sqrt(chi2 / dof_);
      }
      case Kind::uniform: return scale_ * u();
    }
    return 0.0;
  }

  // Location/scale hints and support, used to lay out cdf tables.
  [[nodiscard]] double centre() const { return kind_ == Kind::uniform ? 0.5 * scale_ : 0.0; }
  [[nodiscard]] double support_lower() const {
    return kind_ == Kind::uniform ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  [[nodiscard]] double support_upper() const {
    return kind_ == Kind::uniform ? scale_ : std::numeric_limits<double>::infinity();
  }
  [[nodiscard]] bool strictly_positive() const { return kind_ != Kind::uniform; }

  friend bool operator==(const Density& a, const Density& b) {
    return a.kind_ == b.kind_ && a.scale_ == b.scale_ && a.dof_ == b.dof_;
  }

 private:
  Density(Kind k, double scale, double dof) : kind_(k), scale_(scale), dof_(dof) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw PreconditionError("density scale must be finite and > 0");
    if (k == Kind::student_t) {
      t_norm_ = std::exp(std::lgamma(0.5 * (dof_ + 1.0)) - std::lgamma(0.5 * dof_)) /
                std::sqrt(dof_ * std::numbers::pi);
    }
  }

  Kind kind_;
  double scale_;
  double dof_;
  double t_norm_ = 0.0;
};

// Symmetric unimodal kernels psi for shift families.
enum class Kernel { normal, laplace, triangular };

inline double kernel_pdf(Kernel k, double s) {
  switch (k) {
    case Kernel::normal: return normal_pdf(s);
    case Kernel::laplace: return 0.5 * std::exp(-std::abs(s));
    case Kernel::triangular: return std::max(0.0, 1.0 - std::abs(s));
  }
  return 0.0;
}

inline std::string kernel_name(Kernel k) {
  switch (k) {
    case Kernel::normal: return "normal";
    case Kernel::laplace: return "laplace";
    case Kernel::triangular: return "triangular";
  }
  return "?";
}

}  // namespace dnorm_lab
