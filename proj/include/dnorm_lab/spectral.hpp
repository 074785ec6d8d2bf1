#pragma once

// Families of spectral densities g(s, t), t in [0,1]: either probability
// densities in s on the real line (shift families) or on [0,1] (the
// decomposition form), plus the validator for continuity in t, slice
// normalization, and integrability of the sup envelope s -> sup_t g(s,t).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dnorm_lab/cdf_quantile.hpp"
#include "dnorm_lab/density.hpp"
#include "dnorm_lab/errors.hpp"
#include "dnorm_lab/quadrature.hpp"

namespace dnorm_lab {

enum class SpectralDomain { unit_interval, real_line };

class SpectralFamily {
 public:
  // Fills out[k] = g(s, ts[k]).
  using SliceFn = std::function<void(double s, std::span<const double> ts, std::span<double> out)>;
  using ScalarFn = std::function<double(double)>;

  struct Options {
    std::string label = "custom";
    // g(s,t) <= sup_bound for all s, t.
    std::optional<double> sup_bound;
    // Exact s -> sup_{t in [0,1]} g(s,t), when known in closed form.
    ScalarFn exact_sup;
    // Set for shift families built from the normal kernel: standard deviation.
    std::optional<double> gaussian_sigma;
    // [0,1] families whose slices at s in {0,1} are defined separately.
    bool boundary_slices_exempt = false;
  };

  SpectralFamily(SpectralDomain domain, SliceFn slice, Options opts)
      : impl_(std::make_shared<const Impl>(Impl{domain, std::move(slice), std::move(opts)})) {
    if (!impl_->slice) throw PreconditionError("spectral family needs a slice function");
  }

  [[nodiscard]] double operator()(double s, double t) const {
    double out = 0.0;
    impl_->slice(s, std::span<const double>(&t, 1), std::span<double>(&out, 1));
    return out;
  }

  void slice(double s, std::span<const double> ts, std::span<double> out) const { impl_->slice(s, ts, out); }

  [[nodiscard]] SpectralDomain domain() const { return impl_->domain; }
  [[nodiscard]] const std::string& label() const { return impl_->opts.label; }
  [[nodiscard]] std::optional<double> sup_bound() const { return impl_->opts.sup_bound; }
  [[nodiscard]] bool has_exact_sup() const { return static_cast<bool>(impl_->opts.exact_sup); }
  [[nodiscard]] double exact_sup(double s) const { return impl_->opts.exact_sup(s); }
  [[nodiscard]] const ScalarFn& exact_sup_fn() const { return impl_->opts.exact_sup; }
  [[nodiscard]] std::optional<double> gaussian_sigma() const { return impl_->opts.gaussian_sigma; }
  [[nodiscard]] bool boundary_slices_exempt() const { return impl_->opts.boundary_slices_exempt; }

  [[nodiscard]] Domain integration_domain() const {
    return domain() == SpectralDomain::unit_interval ? Domain::finite(0.0, 1.0) : Domain::real_line();
  }

 private:
  struct Impl {
    SpectralDomain domain;
    SliceFn slice;
    Options opts;
  };
  std::shared_ptr<const Impl> impl_;
};

// sup_x num(x) / h(x) over the x where h(x) >= 1e-300 (the draws a ratio
// sampler keeps). Returns nullopt when the ratio is still large at the edge of
// that region, i.e. it is unbounded for practical purposes.
inline std::optional<double> ratio_sup_bound(const SpectralFamily::ScalarFn& num, const Density& h) {
  constexpr double kFloor = 1e-300;
  const double c = h.centre();
  const double sc = h.scale();
  auto ratio = [&](double x) {
    const double d = h.pdf(x);
    return d >= kFloor ? num(x) / d : -1.0;
  };
  std::vector<double> xs;
  for (int j = -50000; j <= 50000; ++j) xs.push_back(c + sc * j * 1e-3);
  for (double side : {-1.0, 1.0}) {
    for (double r = 50.0 * 1.01; r < 1e300; r *= 1.01) {
      const double x = c + side * sc * r;
      if (h.pdf(x) < kFloor) break;
      xs.push_back(x);
    }
  }
  std::sort(xs.begin(), xs.end());
  std::size_t best = 0;
  double best_val = -1.0;
  std::size_t first = xs.size();
  std::size_t last = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ratio(xs[i]);
    if (r < 0.0) continue;
    first = std::min(first, i);
    last = i;
    if (r > best_val) {
      best_val = r;
      best = i;
    }
  }
  if (!(best_val > 0.0) || !std::isfinite(best_val)) return std::nullopt;
  if (std::max(ratio(xs[first]), ratio(xs[last])) > 1e-3 * best_val) return std::nullopt;
  // Golden-section refinement on the bracketing cell.
  double a = xs[best > first ? best - 1 : best];
  double b = xs[best < last ? best + 1 : best];
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a);
  double x2 = a + g * (b - a);
  double f1 = ratio(x1);
  double f2 = ratio(x2);
  for (int i = 0; i < 200 && b - a > 1e-14 * std::max(1.0, std::abs(a)); ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = ratio(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = ratio(x1);
    }
  }
  best_val = std::max({best_val, f1, f2});
  return best_val * (1.0 + 1e-6);
}

// g(s,t) = beta psi(beta (s - t)) on the real line, psi symmetric and
// nonincreasing on [0, inf). Its sup over t in [0,1] is attained at the
// clamp of s to [0,1].
inline SpectralFamily kernel_shift_family(Kernel psi, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw PreconditionError("kernel_shift_family needs beta > 0");
  SpectralFamily::Options opts;
  std::ostringstream label;
  label << "kernel_shift(" << kernel_name(psi) << ", beta=" << beta << ")";
  opts.label = label.str();
  opts.sup_bound = beta * kernel_pdf(psi, 0.0);
  opts.exact_sup = [psi, beta](double s) {
    const double dist = s < 0.0 ? -s : (s > 1.0 ? s - 1.0 : 0.0);
    return beta * kernel_pdf(psi, beta * dist);
  };
  auto slice = [psi, beta](double s, std::span<const double> ts, std::span<double> out) {
    for (std::size_t k = 0; k < ts.size(); ++k) out[k] = beta * kernel_pdf(psi, beta * (s - ts[k]));
  };
  return SpectralFamily(SpectralDomain::real_line, slice, std::move(opts));
}

// Normal densities with standard deviation sigma centred at t.
inline SpectralFamily gaussian_family(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw PreconditionError("gaussian_family needs sigma > 0");
  const double beta = 1.0 / sigma;
  SpectralFamily::Options opts;
  std::ostringstream label;
  label << "gaussian(sigma=" << sigma << ")";
  opts.label = label.str();
  opts.sup_bound = beta * normal_pdf(0.0);
  opts.gaussian_sigma = sigma;
  opts.exact_sup = [beta](double s) {
    const double dist = s < 0.0 ? -s : (s > 1.0 ? s - 1.0 : 0.0);
    return beta * normal_pdf(beta * dist);
  };
  auto slice = [beta](double s, std::span<const double> ts, std::span<double> out) {
    for (std::size_t k = 0; k < ts.size(); ++k) out[k] = beta * normal_pdf(beta * (s - ts[k]));
  };
  return SpectralFamily(SpectralDomain::real_line, slice, std::move(opts));
}

// g(s,t) = 2s on [0,1]^2; g(U) = 2U generates the sup-norm.
inline SpectralFamily uniform_wedge_family() {
  SpectralFamily::Options opts;
  opts.label = "uniform_wedge";
  opts.sup_bound = 2.0;
  opts.exact_sup = [](double s) { return 2.0 * s; };
  auto slice = [](double s, std::span<const double> ts, std::span<double> out) {
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(ts.size()), 2.0 * s);
  };
  return SpectralFamily(SpectralDomain::unit_interval, slice, std::move(opts));
}

// g_h(s,t) = g*_t(H^{-1}(s)) / h(H^{-1}(s)) for s in (0,1), and 0 at s in {0,1}.
inline SpectralFamily change_of_variable_family(const SpectralFamily& base, const Density& h,
                                                const QuadConfig& cfg = {}) {
  if (base.domain() != SpectralDomain::real_line) {
    throw PreconditionError("change_of_variable_family needs a base family on the real line");
  }
  if (!h.strictly_positive()) {
    throw PreconditionError("change_of_variable_family: density " + h.name() +
                            " is not strictly positive on the support of the base envelope");
  }
  auto quantile = std::make_shared<const CdfQuantile>(h, cfg);
  // h must not vanish (numerically) where the base family has mass, over the
  // x-range that H^{-1} can reach from doubles in (0,1).
  const double x_lo = quantile->quantile(1e-300);
  const double x_hi = quantile->quantile(std::nextafter(1.0, 0.0));
  for (int i = 0; i <= 8000; ++i) {
    const double x = x_lo + (x_hi - x_lo) * i / 8000.0;
    const double env = base.has_exact_sup() ? base.exact_sup(x) : base(x, 0.5);
    if (env > 0.0 && !(h.pdf(x) > 0.0)) {
      throw PreconditionError("change_of_variable_family: h(" + std::to_string(x) +
                              ") underflows where the base family is positive");
    }
  }
  SpectralFamily::Options opts;
  opts.label = "change_of_variable(" + base.label() + ", h=" + h.name() + ")";
  opts.boundary_slices_exempt = true;
  if (base.has_exact_sup()) {
    auto base_sup = base.exact_sup_fn();
    opts.exact_sup = [quantile, base_sup, h](double s) {
      if (!(s > 0.0 && s < 1.0)) return 0.0;
      const double x = quantile->quantile(s);
      return base_sup(x) / h.pdf(x);
    };
    opts.sup_bound = ratio_sup_bound(base_sup, h);
  }
  auto slice = [quantile, base, h](double s, std::span<const double> ts, std::span<double> out) {
    if (!(s > 0.0 && s < 1.0)) {
      std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(ts.size()), 0.0);
      return;
    }
    const double x = quantile->quantile(s);
    const double hx = h.pdf(x);
    if (!(hx > 0.0)) throw NumericalError("change_of_variable_family: h(H^-1(s)) underflowed at s=" + std::to_string(s));
    base.slice(x, ts, out);
    for (std::size_t k = 0; k < ts.size(); ++k) out[k] /= hx;
  };
  return SpectralFamily(SpectralDomain::unit_interval, slice, std::move(opts));
}

// Integral of s -> sup_t g(s,t): the generator constant m. Uses the family's
// exact sup when it has one, otherwise the max over a grid of sup_resolution
// intervals in t.
inline QuadResult sup_envelope_integral(const SpectralFamily& fam, const QuadConfig& cfg,
                                        std::size_t sup_resolution = 800) {
  if (fam.has_exact_sup()) {
    auto env = fam.exact_sup_fn();
    return integrate([&env](double s) { return env(s); }, fam.integration_domain(), cfg);
  }
  std::vector<double> ts(sup_resolution + 1);
  for (std::size_t k = 0; k <= sup_resolution; ++k) ts[k] = static_cast<double>(k) / static_cast<double>(sup_resolution);
  std::vector<double> buf(ts.size());
  auto integrand = [&](double s) {
    fam.slice(s, ts, buf);
    return *std::max_element(buf.begin(), buf.end());
  };
  return integrate(integrand, fam.integration_domain(), cfg);
}

struct ValidationProbe {
  std::size_t base_resolution = 25;  // coarsest t-grid of the continuity probe
  int levels = 4;                    // number of doublings probed
  std::size_t sup_resolution = 800;  // t-grid for the numeric sup envelope
  std::size_t normalization_points = 9;
  double normalization_tolerance = 1e-6;
  // Continuity: each doubling must shrink the max adjacent jump to at most
  // jump_ratio times the previous one, unless it is already below jump_floor.
  double jump_ratio = 0.6;
  double jump_floor = 1e-9;
};

struct ConditionResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::string family;
  std::vector<ConditionResult> conditions;  // continuity, normalization, sup_integrable
  double worst_normalization_deviation = 0.0;
  std::optional<double> sup_integral;       // m-hat when condition (iii) converged
  double sup_integral_partial = 0.0;
  std::vector<double> continuity_jumps;     // max adjacent jump per refinement level
  std::vector<std::string> diagnostics;

  [[nodiscard]] bool passed() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const ConditionResult& c) { return c.passed; });
  }
  [[nodiscard]] const ConditionResult& condition(const std::string& name) const {
    for (const auto& c : conditions) {
      if (c.name == name) return c;
    }
    throw PreconditionError("no condition named " + name);
  }
};

inline constexpr const char* kContinuity = "continuity";
inline constexpr const char* kNormalization = "normalization";
inline constexpr const char* kSupIntegrable = "sup_integrable";

inline ValidationReport validate_family(const SpectralFamily& fam, const QuadConfig& cfg = {},
                                        const ValidationProbe& probe = {}) {
  ValidationReport report;
  report.family = fam.label();

  // (i) continuity in t, probed on s values by grid refinement.
  std::vector<double> s_probes;
  if (fam.domain() == SpectralDomain::unit_interval) {
    for (int i = 0; i < 20; ++i) s_probes.push_back((i + 0.5) / 20.0);
    if (fam.boundary_slices_exempt()) {
      report.diagnostics.emplace_back("slices at s in {0,1} are defined separately and treated as a null set; "
                                      "continuity probed on the open interval only");
    }
  } else {
    for (int i = 0; i <= 28; ++i) s_probes.push_back(-3.0 + 0.25 * i);
  }
  {
    ConditionResult cond{kContinuity, true, {}};
    std::vector<double> ts;
    std::vector<double> buf;
    for (int level = 0; level < probe.levels; ++level) {
      const std::size_t T = probe.base_resolution << level;
      ts.resize(T + 1);
      buf.resize(T + 1);
      for (std::size_t k = 0; k <= T; ++k) ts[k] = static_cast<double>(k) / static_cast<double>(T);
      double jump = 0.0;
      for (double s : s_probes) {
        fam.slice(s, ts, buf);
        for (std::size_t k = 0; k < T; ++k) jump = std::max(jump, std::abs(buf[k + 1] - buf[k]));
      }
      report.continuity_jumps.push_back(jump);
    }
    for (std::size_t j = 1; j < report.continuity_jumps.size(); ++j) {
      const double prev = report.continuity_jumps[j - 1];
      const double cur = report.continuity_jumps[j];
      if (cur > probe.jump_floor && cur > probe.jump_ratio * prev) {
        cond.passed = false;
        std::ostringstream os;
        os << "max adjacent jump did not shrink under refinement: " << prev << " -> " << cur;
        cond.detail = os.str();
        break;
      }
    }
    if (cond.passed) {
      std::ostringstream os;
      os << "max adjacent jump at finest level " << report.continuity_jumps.back();
      cond.detail = os.str();
    }
    report.conditions.push_back(cond);
  }

  // (ii) each slice g(., t) is a probability density.
  {
    ConditionResult cond{kNormalization, true, {}};
    const std::size_t np = std::max<std::size_t>(probe.normalization_points, 2);
    for (std::size_t i = 0; i < np; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(np - 1);
      try {
        const double v = integrate([&](double s) { return fam(s, t); }, fam.integration_domain(), cfg).value;
        report.worst_normalization_deviation = std::max(report.worst_normalization_deviation, std::abs(v - 1.0));
      } catch (const QuadratureError& e) {
        cond.passed = false;
        cond.detail = "slice integral at t=" + std::to_string(t) + " did not converge: " + e.what();
        report.worst_normalization_deviation = std::max(report.worst_normalization_deviation,
                                                        std::abs(e.partial_value() - 1.0));
      }
    }
    if (report.worst_normalization_deviation > probe.normalization_tolerance) cond.passed = false;
    if (cond.detail.empty()) {
      std::ostringstream os;
      os << "worst |int g(s,t) ds - 1| = " << report.worst_normalization_deviation;
      cond.detail = os.str();
    }
    report.conditions.push_back(cond);
  }

  // (iii) the sup envelope is integrable.
  {
    ConditionResult cond{kSupIntegrable, true, {}};
    try {
      const auto r = sup_envelope_integral(fam, cfg, probe.sup_resolution);
      if (!std::isfinite(r.value)) throw QuadratureError("sup envelope integral is not finite", r.value);
      report.sup_integral = r.value;
      report.sup_integral_partial = r.value;
      std::ostringstream os;
      os << "m-hat = " << r.value << (fam.has_exact_sup() ? " (exact sup in t)" : " (sup over t-grid)");
      cond.detail = os.str();
      if (r.value < 1.0 - 1e-6) report.diagnostics.emplace_back("m-hat below 1: slices cannot all be densities");
    } catch (const NumericalError& e) {
      cond.passed = false;
      report.sup_integral_partial = e.partial_value();
      std::ostringstream os;
      os << "sup envelope integral did not converge (partial value " << e.partial_value() << "): " << e.what();
      cond.detail = os.str();
    }
    report.conditions.push_back(cond);
  }
  return report;
}

}  // namespace dnorm_lab
