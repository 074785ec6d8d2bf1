#pragma once

// Standard max-stable processes from the Poisson construction
//   -1/eta_t = sup_i R_i g(S_i, t),   R_i = 1/Gamma_i,  S_i ~ U(0,1),
// generalized Pareto processes V = -U'/Z, and Monte Carlo checks of
//   P(eta <= f) = exp(-||f||_D)   and   P(V <= f) = 1 - ||f||_D.
// See docs/poisson_construction.md for why R = 1/Gamma has intensity r^-2 dr.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dnorm_lab/dnorm.hpp"
#include "dnorm_lab/efunc.hpp"
#include "dnorm_lab/errors.hpp"
#include "dnorm_lab/generator.hpp"
#include "dnorm_lab/probes.hpp"
#include "dnorm_lab/quadrature.hpp"
#include "dnorm_lab/random.hpp"
#include "dnorm_lab/spectral.hpp"
#include "dnorm_lab/stats.hpp"

namespace dnorm_lab {

struct TruncationPolicy {
  enum class Mode { certified, capped };
  Mode mode = Mode::certified;
  // Hard cap on Poisson points per path in either mode.
  std::size_t max_points = 100000;
};

struct MSPPath {
  std::vector<double> values;  // eta at the requested t-points
  std::size_t points_consumed = 0;
  bool certified = false;
  // 1/Gamma of the first unused point; with a certified stop,
  // next_r * M <= min_t A(t).
  double next_r = 0.0;
};

// eta where no point has reached t (only possible in uncertified paths).
inline constexpr double kUncoveredValue = std::numeric_limits<double>::lowest();
// V_t where Z_t = 0: -1/eps with eps = 1e-300.
inline constexpr double kGppSentinel = -1e300;

namespace detail {

struct MSPOutcome {
  std::size_t points = 0;
  bool certified = false;
  double next_r = 0.0;
};

// Fills a with A(t) = max_i R_i g(S_i, t); g is scratch of the same size.
inline MSPOutcome msp_superposition(const SpectralFamily& fam, std::span<const double> ts,
                                    const TruncationPolicy& policy, SeedSpec seed, std::span<double> a,
                                    std::span<double> g) {
  const auto bound = fam.sup_bound();
  if (policy.mode == TruncationPolicy::Mode::certified && !bound) {
    throw PreconditionError("certified MSP simulation needs a family with a finite sup bound, '" + fam.label() +
                            "' declares none");
  }
  ExponentialArrivals arrivals(seed);
  UniformStream& u = arrivals.uniforms();
  std::fill(a.begin(), a.end(), 0.0);
  double min_a = ts.empty() ? std::numeric_limits<double>::infinity() : 0.0;
  MSPOutcome out;
  for (;;) {
    const double r = 1.0 / arrivals.next();
    out.next_r = r;
    if (bound && r * *bound <= min_a) {
      out.certified = true;
      return out;
    }
    if (out.points >= policy.max_points) return out;
    fam.slice(u(), ts, g);
    ++out.points;
    min_a = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ts.size(); ++k) {
      a[k] = std::max(a[k], r * g[k]);
      min_a = std::min(min_a, a[k]);
    }
  }
}

inline void eta_from_a(std::span<double> a) {
  for (auto& x : a) x = x > 0.0 ? -1.0 / x : kUncoveredValue;
}

}  // namespace detail

inline MSPPath simulate_msp(const SpectralFamily& fam, std::span<const double> ts, const TruncationPolicy& policy,
                            SeedSpec seed) {
  if (fam.domain() != SpectralDomain::unit_interval) {
    throw PreconditionError("simulate_msp needs a spectral family on [0,1]");
  }
  MSPPath path;
  path.values.resize(ts.size());
  std::vector<double> g(ts.size());
  const auto o = detail::msp_superposition(fam, ts, policy, seed, path.values, g);
  detail::eta_from_a(path.values);
  path.points_consumed = o.points;
  path.certified = o.certified;
  path.next_r = o.next_r;
  return path;
}

inline MSPPath simulate_msp(const SpectralFamily& fam, GridConfig grid, const TruncationPolicy& policy, SeedSpec seed) {
  const auto ts = grid.points();
  return simulate_msp(fam, ts, policy, seed);
}

struct GPPPath {
  std::vector<double> values;
  double u_prime = 0.0;
  std::size_t sentinels = 0;
};

namespace detail {

inline void check_gpp_generator(const GeneratorProcess& gen) {
  if (!gen.sup_bound() || !std::isfinite(*gen.sup_bound())) {
    throw PreconditionError("GPP simulation needs a generator with a finite sup bound M, '" + gen.label() +
                            "' declares none");
  }
}

// Draws U' then a Z path from the same stream; z receives Z, v receives V.
inline std::size_t gpp_draw(const GeneratorProcess& gen, std::span<const double> ts, UniformStream& u,
                            std::span<double> z, std::span<double> v, double& u_prime, std::size_t& rejected) {
  u_prime = u();
  rejected += gen.sample(u, ts, z);
  std::size_t sentinels = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    if (z[k] > 0.0) {
      v[k] = -u_prime / z[k];
    } else {
      v[k] = kGppSentinel;
      ++sentinels;
    }
  }
  return sentinels;
}

}  // namespace detail

inline GPPPath simulate_gpp(const GeneratorProcess& gen, std::span<const double> ts, SeedSpec seed) {
  detail::check_gpp_generator(gen);
  GPPPath path;
  path.values.resize(ts.size());
  std::vector<double> z(ts.size());
  UniformStream u(seed);
  std::size_t rejected = 0;
  path.sentinels = detail::gpp_draw(gen, ts, u, z, path.values, path.u_prime, rejected);
  return path;
}

struct PathEnsemble {
  enum class Kind { msp, gpp };
  Kind kind = Kind::msp;
  std::string source;  // family or generator label
  std::vector<double> ts;
  std::size_t n = 0;
  std::vector<double> values;  // row-major n x ts.size()
  std::vector<char> certified;
  std::vector<std::size_t> points;  // MSP: Poisson points consumed
  std::vector<double> u_prime;      // GPP: U'
  std::size_t sentinels = 0;
  SeedSpec seed{};

  [[nodiscard]] std::span<const double> path(std::size_t i) const {
    return std::span<const double>(values).subspan(i * ts.size(), ts.size());
  }
};

inline PathEnsemble simulate_msp_ensemble(const SpectralFamily& fam, std::span<const double> ts, std::size_t n,
                                          const TruncationPolicy& policy, SeedSpec seed, std::size_t workers = 1) {
  if (fam.domain() != SpectralDomain::unit_interval) {
    throw PreconditionError("simulate_msp needs a spectral family on [0,1]");
  }
  if (policy.mode == TruncationPolicy::Mode::certified && !fam.sup_bound()) {
    throw PreconditionError("certified MSP simulation needs a family with a finite sup bound");
  }
  PathEnsemble e;
  e.kind = PathEnsemble::Kind::msp;
  e.source = fam.label();
  e.ts.assign(ts.begin(), ts.end());
  e.n = n;
  e.seed = seed;
  e.values.resize(n * ts.size());
  e.certified.resize(n);
  e.points.resize(n);
  const std::size_t m = ts.size();
  run_replicate_blocks(
      n, workers, [] { return 0; },
      [&](int&, std::size_t begin, std::size_t end) {
        std::vector<double> g(m);
        for (std::size_t i = begin; i < end; ++i) {
          std::span<double> a(e.values.data() + i * m, m);
          const auto o = detail::msp_superposition(fam, e.ts, policy, seed.child(i), a, g);
          detail::eta_from_a(a);
          e.certified[i] = o.certified ? 1 : 0;
          e.points[i] = o.points;
        }
      });
  return e;
}

inline PathEnsemble simulate_gpp_ensemble(const GeneratorProcess& gen, std::span<const double> ts, std::size_t n,
                                          SeedSpec seed, std::size_t workers = 1) {
  detail::check_gpp_generator(gen);
  PathEnsemble e;
  e.kind = PathEnsemble::Kind::gpp;
  e.source = gen.label();
  e.ts.assign(ts.begin(), ts.end());
  e.n = n;
  e.seed = seed;
  e.values.resize(n * ts.size());
  e.certified.assign(n, 1);
  e.u_prime.resize(n);
  const std::size_t m = ts.size();
  struct Acc {
    std::size_t sentinels = 0;
    std::size_t rejected = 0;
  };
  auto blocks = run_replicate_blocks(
      n, workers, [] { return Acc{}; },
      [&](Acc& acc, std::size_t begin, std::size_t end) {
        std::vector<double> z(m);
        for (std::size_t i = begin; i < end; ++i) {
          UniformStream u(seed.child(i));
          std::span<double> v(e.values.data() + i * m, m);
          acc.sentinels += detail::gpp_draw(gen, e.ts, u, z, v, e.u_prime[i], acc.rejected);
        }
      });
  std::size_t rejected = 0;
  for (const auto& b : blocks) {
    e.sentinels += b.sentinels;
    rejected += b.rejected;
  }
  check_rejections(rejected, n + rejected);
  return e;
}

namespace detail {

inline void require_nonpositive(const EFunction& f, const std::string& id) {
  if (!f.nonpositive()) throw PreconditionError("probe '" + id + "' has positive values; df checks need f <= 0");
}

// Index of each support point of f in the sorted ts, or PreconditionError.
inline std::vector<std::pair<std::size_t, double>> event_terms(const EFunction& f, std::span<const double> ts) {
  std::vector<std::pair<std::size_t, double>> terms;
  for (const auto& p : f.support()) {
    auto it = std::lower_bound(ts.begin(), ts.end(), p.t - EFunction::kTimeTolerance);
    if (it == ts.end() || std::abs(*it - p.t) > EFunction::kTimeTolerance) {
      throw PreconditionError("ensemble has no path value at t = " + std::to_string(p.t));
    }
    terms.emplace_back(static_cast<std::size_t>(std::distance(ts.begin(), it)), p.value);
  }
  return terms;
}

// path <= f everywhere. Off the support f = 0 and every path value is < 0.
inline bool below(std::span<const double> path, const std::vector<std::pair<std::size_t, double>>& terms) {
  for (const auto& [k, v] : terms) {
    if (path[k] > v) return false;
  }
  return true;
}

}  // namespace detail

// Fraction of certified paths with path <= f, with its binomial SE.
inline MCEstimate empirical_fdf(const PathEnsemble& paths, const EFunction& f) {
  detail::require_nonpositive(f, "f");
  const auto terms = detail::event_terms(f, paths.ts);
  ProportionCounter c;
  for (std::size_t i = 0; i < paths.n; ++i) {
    if (!paths.certified[i]) continue;
    ++c.trials;
    if (detail::below(paths.path(i), terms)) ++c.successes;
  }
  return c.estimate();
}

struct VerificationRow {
  std::string probe_id;
  MCEstimate empirical;
  double null_se = 0.0;  // binomial SE at the theoretical probability
  double theoretical = 0.0;
  double z = 0.0;
  double budget = 0.0;   // deterministic slack from quadrature tolerance
  bool passed = false;
};

struct VerificationReport {
  std::string kind;    // msp-df, gpp-df, max-stability
  std::string source;  // family / generator label
  std::vector<VerificationRow> rows;
  double critical_value = 3.0;
  std::size_t n_requested = 0;
  std::size_t n_used = 0;
  std::size_t excluded = 0;             // uncertified MSP paths
  std::size_t identity_mismatches = 0;  // GPP: {V <= f} vs {U' >= sup |f| Z}
  std::size_t sentinels = 0;

  [[nodiscard]] std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.passed; }));
  }
  [[nodiscard]] bool all_passed() const { return failures() == 0 && identity_mismatches == 0 && n_used > 0; }
};

namespace detail {

inline VerificationRow df_row(const std::string& id, const ProportionCounter& c, double p0, double budget,
                              double critical) {
  VerificationRow row;
  row.probe_id = id;
  row.empirical = c.estimate();
  row.theoretical = p0;
  row.budget = budget;
  const double n = static_cast<double>(c.trials);
  row.null_se = c.trials > 0 ? std::sqrt(std::max(0.0, p0 * (1.0 - p0)) / n) : 0.0;
  const double diff = row.empirical.value - p0;
  const double excess = std::max(0.0, std::abs(diff) - budget);
  row.z = row.null_se > 0.0 ? diff / row.null_se : (excess > 0.0 ? std::copysign(INFINITY, diff) : 0.0);
  row.passed = c.trials > 0 && std::abs(diff) <= critical * row.null_se + budget;
  return row;
}

}  // namespace detail

// Compares the empirical P(eta <= f) over n certified paths with
// exp(-||f||_D) from quadrature, per probe, at the Bonferroni critical value.
inline VerificationReport verify_msp_df(const SpectralFamily& fam, const std::vector<NamedProbe>& probes,
                                        std::size_t n, SeedSpec seed, std::size_t workers = 1,
                                        const QuadConfig& cfg = {}, const TruncationPolicy& policy = {},
                                        double alpha = kThreeSigmaLevel) {
  if (probes.empty()) throw PreconditionError("verify_msp_df needs at least one probe");
  if (fam.domain() != SpectralDomain::unit_interval) {
    throw PreconditionError("MSP simulation needs a spectral family on [0,1]");
  }
  for (const auto& p : probes) detail::require_nonpositive(p.f, p.id);
  const auto fs = functions_of(probes);
  const auto layout = layout_probes(fs);
  const std::size_t np = probes.size();
  const std::size_t m = layout.ts.size();
  struct Acc {
    std::vector<ProportionCounter> counts;
    std::size_t excluded = 0;
  };
  auto blocks = run_replicate_blocks(
      n, workers, [np] { return Acc{std::vector<ProportionCounter>(np), 0}; },
      [&](Acc& acc, std::size_t begin, std::size_t end) {
        std::vector<double> a(m);
        std::vector<double> g(m);
        std::vector<std::vector<std::pair<std::size_t, double>>> terms(np);
        for (std::size_t j = 0; j < np; ++j) {
          for (const auto& [k, w] : layout.terms[j]) terms[j].emplace_back(k, -w);
        }
        for (std::size_t i = begin; i < end; ++i) {
          const auto o = detail::msp_superposition(fam, layout.ts, policy, seed.child(i), a, g);
          if (!o.certified) {
            ++acc.excluded;
            continue;
          }
          detail::eta_from_a(a);
          for (std::size_t j = 0; j < np; ++j) {
            ++acc.counts[j].trials;
            if (detail::below(a, terms[j])) ++acc.counts[j].successes;
          }
        }
      });
  std::vector<ProportionCounter> counts(np);
  VerificationReport report;
  for (const auto& b : blocks) {
    for (std::size_t j = 0; j < np; ++j) counts[j].merge(b.counts[j]);
    report.excluded += b.excluded;
  }
  report.kind = "msp-df";
  report.source = fam.label();
  report.critical_value = bonferroni_critical(np, alpha);
  report.n_requested = n;
  report.n_used = n - report.excluded;
  for (std::size_t j = 0; j < np; ++j) {
    const double v = dnorm_quadrature(fs[j], fam, cfg);
    const double p0 = std::exp(-v);
    report.rows.push_back(detail::df_row(probes[j].id, counts[j], p0, p0 * cfg.allowance(v), report.critical_value));
  }
  return report;
}

// Single spikes x * 1_{t} for every t in ts and x in xs; P(eta_t <= x) = exp(x).
inline std::vector<NamedProbe> margin_probes(GridConfig grid, const std::vector<double>& ts,
                                             const std::vector<double>& xs) {
  std::vector<NamedProbe> out;
  for (double t : ts) {
    for (double x : xs) {
      std::string id = "margin_t" + std::to_string(t) + "_x" + std::to_string(x);
      out.push_back({std::move(id), make_step_function({{t, x}}, grid)});
    }
  }
  return out;
}

// Empirical df of k * max(eta^(1..k)) against that of a single path, per probe,
// two-proportion z-test. With k = 1 both sides use the same streams.
inline VerificationReport max_stability_check(const SpectralFamily& fam, const std::vector<NamedProbe>& probes,
                                              std::size_t n, std::size_t k, SeedSpec seed, std::size_t workers = 1,
                                              const TruncationPolicy& policy = {}, double alpha = kThreeSigmaLevel) {
  if (probes.empty()) throw PreconditionError("max_stability_check needs at least one probe");
  if (k < 1) throw PreconditionError("max_stability_check needs k >= 1");
  if (fam.domain() != SpectralDomain::unit_interval) {
    throw PreconditionError("MSP simulation needs a spectral family on [0,1]");
  }
  for (const auto& p : probes) detail::require_nonpositive(p.f, p.id);
  const auto fs = functions_of(probes);
  const auto layout = layout_probes(fs);
  const std::size_t np = probes.size();
  const std::size_t m = layout.ts.size();
  const SeedSpec single_seed = seed.child(0);
  const SeedSpec max_seed = k == 1 ? single_seed : seed.child(k);
  struct Acc {
    std::vector<ProportionCounter> single;
    std::vector<ProportionCounter> maxed;
    std::size_t excluded = 0;
  };
  auto blocks = run_replicate_blocks(
      n, workers, [np] { return Acc{std::vector<ProportionCounter>(np), std::vector<ProportionCounter>(np), 0}; },
      [&](Acc& acc, std::size_t begin, std::size_t end) {
        std::vector<double> a(m);
        std::vector<double> g(m);
        std::vector<double> mx(m);
        std::vector<double> b(m);
        std::vector<std::vector<std::pair<std::size_t, double>>> terms(np);
        for (std::size_t j = 0; j < np; ++j) {
          for (const auto& [idx, w] : layout.terms[j]) terms[j].emplace_back(idx, -w);
        }
        for (std::size_t i = begin; i < end; ++i) {
          const auto o = detail::msp_superposition(fam, layout.ts, policy, single_seed.child(i), a, g);
          bool certified = o.certified;
          detail::eta_from_a(a);
          std::fill(mx.begin(), mx.end(), -std::numeric_limits<double>::infinity());
          for (std::size_t r = 0; r < k && certified; ++r) {
            const auto ob = detail::msp_superposition(fam, layout.ts, policy, max_seed.child(i * k + r), b, g);
            certified = certified && ob.certified;
            detail::eta_from_a(b);
            for (std::size_t q = 0; q < m; ++q) mx[q] = std::max(mx[q], b[q]);
          }
          if (!certified) {
            ++acc.excluded;
            continue;
          }
          for (auto& x : mx) x *= static_cast<double>(k);
          for (std::size_t j = 0; j < np; ++j) {
            ++acc.single[j].trials;
            ++acc.maxed[j].trials;
            if (detail::below(a, terms[j])) ++acc.single[j].successes;
            if (detail::below(mx, terms[j])) ++acc.maxed[j].successes;
          }
        }
      });
  std::vector<ProportionCounter> single(np);
  std::vector<ProportionCounter> maxed(np);
  VerificationReport report;
  for (const auto& b : blocks) {
    for (std::size_t j = 0; j < np; ++j) {
      single[j].merge(b.single[j]);
      maxed[j].merge(b.maxed[j]);
    }
    report.excluded += b.excluded;
  }
  report.kind = "max-stability(k=" + std::to_string(k) + ")";
  report.source = fam.label();
  report.critical_value = bonferroni_critical(np, alpha);
  report.n_requested = n;
  report.n_used = n - report.excluded;
  for (std::size_t j = 0; j < np; ++j) {
    VerificationRow row;
    row.probe_id = probes[j].id;
    row.empirical = maxed[j].estimate();
    row.theoretical = single[j].proportion();  // reference side: single path
    const double pooled = 0.5 * (row.empirical.value + row.theoretical);
    const double nn = static_cast<double>(single[j].trials);
    row.null_se = nn > 0 ? std::sqrt(pooled * (1.0 - pooled) * 2.0 / nn) : 0.0;
    const double diff = row.empirical.value - row.theoretical;
    row.z = row.null_se > 0.0 ? diff / row.null_se : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
    row.passed = nn > 0 && std::abs(row.z) <= report.critical_value;
    report.rows.push_back(row);
  }
  return report;
}

// ||f||_D of the generator, for the GPP df target: sup-norm for generators
// equivalent to the constant 1, otherwise quadrature over the attached family.
inline double reference_dnorm(const GeneratorProcess& gen, const EFunction& f, const QuadConfig& cfg = {}) {
  if (gen.induces_sup_norm()) return sup_norm(f);
  if (gen.family()) return dnorm_quadrature(f, *gen.family(), cfg);
  throw PreconditionError("generator '" + gen.label() + "' has no reference D-norm");
}

inline double gpp_threshold(const GeneratorProcess& gen) {
  detail::check_gpp_generator(gen);
  return 1.0 / *gen.sup_bound();
}

// Compares the empirical P(V <= f) with 1 - ||f||_D per probe, and counts
// paths where {V <= f} and {U' >= sup_t |f(t)| Z_t} disagree.
inline VerificationReport verify_gpp_df(const GeneratorProcess& gen, const std::vector<NamedProbe>& probes,
                                        std::size_t n, SeedSpec seed, std::size_t workers = 1,
                                        const QuadConfig& cfg = {}, double alpha = kThreeSigmaLevel) {
  if (probes.empty()) throw PreconditionError("verify_gpp_df needs at least one probe");
  const double x0 = gpp_threshold(gen);
  for (const auto& p : probes) {
    detail::require_nonpositive(p.f, p.id);
    const double s = sup_norm(p.f);
    if (s > x0 * (1.0 + 1e-12)) {
      throw PreconditionError("probe '" + p.id + "' has sup-norm " + std::to_string(s) + " above x0 = 1/M = " +
                              std::to_string(x0));
    }
  }
  const auto fs = functions_of(probes);
  const auto layout = layout_probes(fs);
  const std::size_t np = probes.size();
  const std::size_t m = layout.ts.size();
  struct Acc {
    std::vector<ProportionCounter> counts;
    std::size_t mismatches = 0;
    std::size_t sentinels = 0;
    std::size_t rejected = 0;
  };
  auto blocks = run_replicate_blocks(
      n, workers, [np] { return Acc{std::vector<ProportionCounter>(np), 0, 0, 0}; },
      [&](Acc& acc, std::size_t begin, std::size_t end) {
        std::vector<double> z(m);
        std::vector<double> v(m);
        std::vector<std::vector<std::pair<std::size_t, double>>> terms(np);
        for (std::size_t j = 0; j < np; ++j) {
          for (const auto& [k, w] : layout.terms[j]) terms[j].emplace_back(k, -w);
        }
        for (std::size_t i = begin; i < end; ++i) {
          UniformStream u(seed.child(i));
          double u_prime = 0.0;
          acc.sentinels += detail::gpp_draw(gen, layout.ts, u, z, v, u_prime, acc.rejected);
          for (std::size_t j = 0; j < np; ++j) {
            const bool event = detail::below(v, terms[j]);
            double sup = 0.0;
            for (const auto& [k, w] : layout.terms[j]) sup = std::max(sup, w * z[k]);
            if (event != (u_prime >= sup)) ++acc.mismatches;
            ++acc.counts[j].trials;
            if (event) ++acc.counts[j].successes;
          }
        }
      });
  std::vector<ProportionCounter> counts(np);
  VerificationReport report;
  std::size_t rejected = 0;
  for (const auto& b : blocks) {
    for (std::size_t j = 0; j < np; ++j) counts[j].merge(b.counts[j]);
    report.identity_mismatches += b.mismatches;
    report.sentinels += b.sentinels;
    rejected += b.rejected;
  }
  check_rejections(rejected, n + rejected);
  report.kind = "gpp-df";
  report.source = gen.label();
  report.critical_value = bonferroni_critical(np, alpha);
  report.n_requested = n;
  report.n_used = n;
  for (std::size_t j = 0; j < np; ++j) {
    const double v = reference_dnorm(gen, fs[j], cfg);
    const double budget = gen.induces_sup_norm() ? 0.0 : cfg.allowance(v);
    report.rows.push_back(detail::df_row(probes[j].id, counts[j], 1.0 - v, budget, report.critical_value));
  }
  return report;
}

}  // namespace dnorm_lab
