#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature on finite intervals, extended to
// half lines and the real line by expanding dyadic shells.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "dnorm_lab/errors.hpp"

namespace dnorm_lab {

struct QuadConfig {
  double abs_tol = 1e-9;
  double rel_tol = 1e-8;
  std::size_t max_subdivisions = 20000;
  // A shell whose contribution stays below this (twice in a row) ends an
  // infinite-domain integration.
  double tail_tol = 1e-10;

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || !(tail_tol > 0.0)) {
      throw PreconditionError("quadrature tolerances must be positive");
    }
    if (max_subdivisions < 1) throw PreconditionError("max_subdivisions must be >= 1");
  }

  // The error allowance the adaptive loop aims for at a given value.
  [[nodiscard]] double allowance(double value) const { return std::max(abs_tol, rel_tol * std::abs(value)); }
};

class Domain {
 public:
  enum class Kind { finite, real_line, upper_half, lower_half };

  static Domain finite(double a, double b) {
    if (!(a <= b) || !std::isfinite(a) || !std::isfinite(b)) {
      throw PreconditionError("finite domain needs finite a <= b");
    }
    return Domain(Kind::finite, a, b);
  }
  static Domain real_line() { return Domain(Kind::real_line, 0.0, 0.0); }
  // [a, inf)
  static Domain from(double a) { return Domain(Kind::upper_half, a, 0.0); }
  // (-inf, b]
  static Domain to(double b) { return Domain(Kind::lower_half, 0.0, b); }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] double lower() const { return a_; }
  [[nodiscard]] double upper() const { return b_; }

 private:
  Domain(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
  Kind kind_;
  double a_;
  double b_;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
};

class QuadratureError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the Kronrod nodes with odd index (and the centre).
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
};

template <class F>
Segment gk15(F& fn, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = fn(centre);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double sum = fn(centre - dx) + fn(centre + dx);
    kronrod += kKronrodWeights[j] * sum;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * sum;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

template <class F>
QuadResult adaptive(F& fn, double a, double b, double abs_tol, double rel_tol, std::size_t max_subdivisions) {
  if (a == b) return {};
  auto by_error = [](const Segment& x, const Segment& y) { return x.error < y.error; };
  std::vector<Segment> heap;
  heap.reserve(64);
  heap.push_back(gk15(fn, a, b));
  std::size_t evaluations = 15;
  double value = heap.front().value;
  double error = heap.front().error;
  std::size_t splits = 0;
  auto resum = [&] {
    value = 0.0;
    error = 0.0;
    for (const auto& s : heap) {
      value += s.value;
      error += s.error;
    }
  };
  while (error > std::max(abs_tol, rel_tol * std::abs(value))) {
    if (splits >= max_subdivisions) {
      resum();
      throw QuadratureError("quadrature did not converge within " + std::to_string(max_subdivisions) +
                                " subdivisions on [" + std::to_string(a) + ", " + std::to_string(b) +
                                "] (estimate " + std::to_string(value) + ", error " + std::to_string(error) + ")",
                            value);
    }
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const Segment worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push_back(worst);
      resum();
      throw QuadratureError("quadrature cannot subdivide further near x=" + std::to_string(worst.a) +
                                " (estimate " + std::to_string(value) + ", error " + std::to_string(error) + ")",
                            value);
    }
    const Segment left = gk15(fn, worst.a, mid);
    const Segment right = gk15(fn, mid, worst.b);
    evaluations += 30;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), by_error);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), by_error);
    if (++splits % 128 == 0) resum();
  }
  resum();
  return {value, error, evaluations};
}

}  // namespace detail

// Integrates fn over the domain. Infinite domains are covered by a unit core
// followed by dyadic shells [2^(k-1), 2^k] (mirrored for the real line) until
// two consecutive shells contribute less than cfg.tail_tol; an optional
// envelope must also fall below tail_tol on those shells to certify the tail.
// Throws QuadratureError (carrying the partial value) on non-convergence.
template <class F>
QuadResult integrate(F&& fn, const Domain& domain, const QuadConfig& cfg,
                     const std::function<double(double)>& envelope = {}) {
  cfg.validate();
  auto& f = fn;
  if (domain.kind() == Domain::Kind::finite) {
    return detail::adaptive(f, domain.lower(), domain.upper(), cfg.abs_tol, cfg.rel_tol, cfg.max_subdivisions);
  }

  constexpr int kMaxShells = 64;
  // shell(k) returns the pieces covered at level k (k = 0 is the core).
  auto pieces = [&](int k) {
    std::vector<std::pair<double, double>> out;
    const double lo = k == 0 ? 0.0 : std::ldexp(1.0, k - 1);
    const double hi = std::ldexp(1.0, k);
    switch (domain.kind()) {
      case Domain::Kind::real_line:
        if (k == 0) {
          out.emplace_back(-1.0, 1.0);
        } else {
          out.emplace_back(-hi, -lo);
          out.emplace_back(lo, hi);
        }
        break;
      case Domain::Kind::upper_half:
        out.emplace_back(domain.lower() + lo, domain.lower() + hi);
        break;
      case Domain::Kind::lower_half:
        out.emplace_back(domain.upper() - hi, domain.upper() - lo);
        break;
      case Domain::Kind::finite:
        break;
    }
    return out;
  };

  QuadResult total;
  int quiet_shells = 0;
  for (int k = 0; k <= kMaxShells; ++k) {
    const double piece_abs = cfg.abs_tol * std::ldexp(1.0, -(k + 4));
    double shell_value = 0.0;
    double shell_mass = 0.0;
    double env_mass = 0.0;
    for (const auto& [a, b] : pieces(k)) {
      QuadResult r;
      try {
        r = detail::adaptive(f, a, b, piece_abs, cfg.rel_tol, cfg.max_subdivisions);
      } catch (const QuadratureError& e) {
        throw QuadratureError(e.what(), total.value + e.partial_value());
      }
      shell_value += r.value;
      shell_mass += std::abs(r.value);
      total.error += r.error;
      total.evaluations += r.evaluations;
      if (envelope && k > 0) {
        auto env = envelope;
        env_mass += std::abs(detail::adaptive(env, a, b, piece_abs, cfg.rel_tol, cfg.max_subdivisions).value);
      }
    }
    total.value += shell_value;
    if (k == 0) continue;
    if (shell_mass < cfg.tail_tol && env_mass < cfg.tail_tol) {
      if (++quiet_shells >= 2) {
        total.error += shell_mass;
        return total;
      }
    } else {
      quiet_shells = 0;
    }
  }
  throw QuadratureError("infinite-domain quadrature: tail did not fall below " + std::to_string(cfg.tail_tol) +
                            " within 2^" + std::to_string(kMaxShells) + " (partial value " +
                            std::to_string(total.value) + ")",
                        total.value);
}

}  // namespace dnorm_lab
