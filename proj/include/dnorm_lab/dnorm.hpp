#pragma once

// D-norm evaluation. Two independent routes:
//   quadrature:  ||f||_D = int sup_t |f(t)| g(s,t) ds  over the family's s-domain
//   Monte Carlo: ||f||_D = E[ sup_t |f(t)| Z_t ]       over generator paths
// The inner sup runs over the function's grid nodes and spikes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dnorm_lab/efunc.hpp"
#include "dnorm_lab/errors.hpp"
#include "dnorm_lab/generator.hpp"
#include "dnorm_lab/probes.hpp"
#include "dnorm_lab/quadrature.hpp"
#include "dnorm_lab/random.hpp"
#include "dnorm_lab/spectral.hpp"
#include "dnorm_lab/stats.hpp"

namespace dnorm_lab {

inline QuadResult dnorm_quadrature_result(const EFunction& f, const SpectralFamily& fam, const QuadConfig& cfg = {}) {
  const auto support = f.support();
  if (support.empty()) return {};
  std::vector<double> ts;
  std::vector<double> weights;
  ts.reserve(support.size());
  weights.reserve(support.size());
  for (const auto& p : support) {
    ts.push_back(p.t);
    weights.push_back(std::abs(p.value));
  }
  std::vector<double> buf(ts.size());
  auto integrand = [&](double s) {
    fam.slice(s, ts, buf);
    double m = 0.0;
    for (std::size_t k = 0; k < buf.size(); ++k) m = std::max(m, weights[k] * buf[k]);
    return m;
  };
  std::function<double(double)> envelope;
  if (fam.domain() == SpectralDomain::real_line && fam.has_exact_sup()) {
    const double fsup = *std::max_element(weights.begin(), weights.end());
    auto sup_fn = fam.exact_sup_fn();
    envelope = [fsup, sup_fn](double s) { return fsup * sup_fn(s); };
  }
  return integrate(integrand, fam.integration_domain(), cfg, envelope);
}

inline double dnorm_quadrature(const EFunction& f, const SpectralFamily& fam, const QuadConfig& cfg = {}) {
  return dnorm_quadrature_result(f, fam, cfg).value;
}

// Union of the probes' support points, and for each probe its (index, |f|)
// terms into that union.
struct ProbeLayout {
  std::vector<double> ts;
  std::vector<std::vector<std::pair<std::size_t, double>>> terms;
};

inline ProbeLayout layout_probes(std::span<const EFunction> probes) {
  ProbeLayout layout;
  for (const auto& f : probes) {
    for (const auto& p : f.support()) layout.ts.push_back(p.t);
  }
  std::sort(layout.ts.begin(), layout.ts.end());
  layout.ts.erase(std::unique(layout.ts.begin(), layout.ts.end(),
                              [](double a, double b) { return std::abs(a - b) <= EFunction::kTimeTolerance; }),
                  layout.ts.end());
  for (const auto& f : probes) {
    std::vector<std::pair<std::size_t, double>> terms;
    for (const auto& p : f.support()) {
      auto it = std::lower_bound(layout.ts.begin(), layout.ts.end(), p.t - EFunction::kTimeTolerance);
      terms.emplace_back(static_cast<std::size_t>(std::distance(layout.ts.begin(), it)), std::abs(p.value));
    }
    layout.terms.push_back(std::move(terms));
  }
  return layout;
}

// Monte Carlo estimates for several functions from the same generator paths
// (common random numbers). Replicate i uses stream seed.child(i).
inline std::vector<MCEstimate> dnorm_monte_carlo(std::span<const EFunction> probes, const GeneratorProcess& gen,
                                                 std::size_t n, SeedSpec seed, std::size_t workers = 1) {
  if (n < 2) throw PreconditionError("dnorm_monte_carlo needs n >= 2");
  const auto layout = layout_probes(probes);
  const std::size_t p = probes.size();
  struct Acc {
    std::vector<RunningStats> stats;
    std::size_t rejected = 0;
  };
  auto blocks = run_replicate_blocks(
      n, workers, [p] { return Acc{std::vector<RunningStats>(p), 0}; },
      [&](Acc& acc, std::size_t begin, std::size_t end) {
        std::vector<double> path(layout.ts.size());
        for (std::size_t i = begin; i < end; ++i) {
          if (!layout.ts.empty()) {
            UniformStream u(seed.child(i));
            acc.rejected += gen.sample(u, layout.ts, path);
          }
          for (std::size_t j = 0; j < p; ++j) {
            double m = 0.0;
            for (const auto& [k, w] : layout.terms[j]) m = std::max(m, w * path[k]);
            acc.stats[j].add(m);
          }
        }
      });
  std::vector<RunningStats> total(p);
  std::size_t rejected = 0;
  for (const auto& b : blocks) {
    for (std::size_t j = 0; j < p; ++j) total[j].merge(b.stats[j]);
    rejected += b.rejected;
  }
  check_rejections(rejected, n + rejected);
  std::vector<MCEstimate> out;
  out.reserve(p);
  for (const auto& s : total) out.push_back(s.estimate());
  return out;
}

inline MCEstimate dnorm_monte_carlo(const EFunction& f, const GeneratorProcess& gen, std::size_t n, SeedSpec seed,
                                    std::size_t workers = 1) {
  return dnorm_monte_carlo(std::span<const EFunction>(&f, 1), gen, n, seed, workers).front();
}

struct QuadratureRoute {
  SpectralFamily family;
  QuadConfig cfg{};
  // t-grid for the numeric sup envelope of families without an exact sup.
  std::size_t sup_resolution = 800;
};

struct MonteCarloRoute {
  GeneratorProcess generator;
  std::size_t n = 100000;
  SeedSpec seed{};
  std::size_t workers = 1;
  GridConfig grid{200};
};

using DNormSpec = std::variant<QuadratureRoute, MonteCarloRoute>;

// m = ||1||_D.
inline std::variant<double, MCEstimate> generator_constant(const DNormSpec& spec) {
  if (const auto* q = std::get_if<QuadratureRoute>(&spec)) {
    return sup_envelope_integral(q->family, q->cfg, q->sup_resolution).value;
  }
  const auto& mc = std::get<MonteCarloRoute>(spec);
  return dnorm_monte_carlo(EFunction::constant(mc.grid, 1.0), mc.generator, mc.n, mc.seed, mc.workers);
}

struct AxiomRow {
  std::string axiom;    // zero, homogeneity, triangle, monotonicity, lower_bound
  std::string subject;  // probes / scalar involved
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;   // lhs <= rhs + slack (or |lhs - rhs| <= slack for equalities)
  bool passed = false;
};

struct NormAxiomReport {
  std::string route;
  std::vector<AxiomRow> rows;

  [[nodiscard]] std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const AxiomRow& r) { return !r.passed; }));
  }
  [[nodiscard]] bool passed() const { return failures() == 0; }
};

// Checks homogeneity, the triangle inequality, monotonicity, the lower bound
// ||f||_D >= ||f||_inf and ||0||_D = 0. Quadrature rows allow the quadrature
// allowance as slack; Monte Carlo rows evaluate every function on the same
// paths, so the inequalities hold path-wise and only rounding slack is
// allowed, except the lower bound which is compared at 3 SE.
inline NormAxiomReport norm_axiom_suite(const DNormSpec& spec, const std::vector<NamedProbe>& probes,
                                        const std::vector<double>& scalars) {
  if (probes.empty()) throw PreconditionError("norm_axiom_suite needs at least one probe");
  const GridConfig grid = probes.front().f.grid();

  // Every function needed, evaluated in one go.
  std::vector<EFunction> fs;
  std::vector<std::string> names;
  auto push = [&](EFunction f, std::string name) {
    fs.push_back(std::move(f));
    names.push_back(std::move(name));
    return fs.size() - 1;
  };
  const std::size_t zero_idx = push(EFunction::zero(grid), "0");
  std::vector<std::size_t> base;
  for (const auto& p : probes) base.push_back(push(p.f, p.id));
  std::vector<std::pair<std::size_t, double>> scaled;  // (index of c f, c) per (probe, scalar)
  for (std::size_t i = 0; i < probes.size(); ++i) {
    for (double c : scalars) scaled.emplace_back(push(scale(probes[i].f, c), probes[i].id), c);
  }
  struct Pair {
    std::size_t i, j, sum, min;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    for (std::size_t j = i + 1; j < probes.size(); ++j) {
      const auto& f = probes[i].f;
      const auto& g = probes[j].f;
      const auto sum = push(add(f, g), probes[i].id + "+" + probes[j].id);
      // min(|f|, |g|) <= |f| pointwise.
      const auto mn = push(pointwise_min(pointwise_abs(f), pointwise_abs(g)), "min|" + probes[i].id + "|,|" + probes[j].id + "|");
      pairs.push_back({i, j, sum, mn});
    }
  }

  NormAxiomReport report;
  std::vector<double> value(fs.size());
  std::vector<double> tol(fs.size());   // per-value slack
  std::vector<double> se(fs.size(), 0.0);
  bool mc = false;
  if (const auto* q = std::get_if<QuadratureRoute>(&spec)) {
    report.route = "quadrature(" + q->family.label() + ")";
    for (std::size_t k = 0; k < fs.size(); ++k) {
      value[k] = dnorm_quadrature(fs[k], q->family, q->cfg);
      tol[k] = q->cfg.allowance(value[k]);
    }
  } else {
    const auto& r = std::get<MonteCarloRoute>(spec);
    report.route = "monte_carlo(" + r.generator.label() + ")";
    mc = true;
    const auto est = dnorm_monte_carlo(fs, r.generator, r.n, r.seed, r.workers);
    for (std::size_t k = 0; k < fs.size(); ++k) {
      value[k] = est[k].value;
      se[k] = est[k].standard_error;
      tol[k] = 1e-12 * std::abs(value[k]);
    }
  }

  auto row = [&](std::string axiom, std::string subject, double lhs, double rhs, double slack, bool equality) {
    const bool ok = equality ? std::abs(lhs - rhs) <= slack : lhs <= rhs + slack;
    report.rows.push_back({std::move(axiom), std::move(subject), lhs, rhs, slack, ok});
  };

  row("zero", "0", value[zero_idx], 0.0, 0.0, true);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto k = base[i];
    const double lower = sup_norm(probes[i].f);
    row("lower_bound", probes[i].id, lower, value[k], mc ? 3.0 * se[k] : tol[k], false);
  }
  for (std::size_t s = 0; s < scaled.size(); ++s) {
    const auto [k, c] = scaled[s];
    const std::size_t i = s / scalars.size();
    const double rhs = std::abs(c) * value[base[i]];
    row("homogeneity", names[k] + " c=" + std::to_string(c), value[k], rhs, tol[k] + std::abs(c) * tol[base[i]], true);
  }
  for (const auto& p : pairs) {
    const double rhs = value[base[p.i]] + value[base[p.j]];
    row("triangle", names[p.sum], value[p.sum], rhs, tol[p.sum] + tol[base[p.i]] + tol[base[p.j]], false);
    row("monotonicity", names[p.min], value[p.min], value[base[p.i]], tol[p.min] + tol[base[p.i]], false);
  }
  return report;
}

}  // namespace dnorm_lab
