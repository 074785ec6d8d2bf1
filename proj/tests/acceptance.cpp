// Acceptance run: one line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dnorm_lab/dnorm_lab.hpp"
#include "support/broken_families.hpp"
#include "support/oracles.hpp"

using namespace dnorm_lab;

namespace {

constexpr std::size_t kN = 100000;
const GridConfig kGrid{200};

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

std::size_t workers() { return default_workers(); }

SpectralFamily cov_gaussian(const Density& h) { return change_of_variable_family(gaussian_family(1.0), h); }

// |empirical - p0| <= 3 binomial SE at p0 (+ deterministic budget).
bool within_three_se(const VerificationRow& row) {
  return std::abs(row.empirical.value - row.theoretical) <= 3.0 * row.null_se + row.budget;
}

Outcome c1_sup_norm() {
  Outcome o;
  const auto wedge = uniform_wedge_family();
  const auto one = constant_generator(ScalarLaw::point(1.0));
  const auto probes = standard_probes(kGrid);
  const auto est = dnorm_monte_carlo(functions_of(probes), one, 1000, SeedSpec{1}, workers());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double s = sup_norm(probes[i].f);
    const double q = dnorm_quadrature(probes[i].f, wedge);
    o.require(std::abs(q - s) <= 1e-6 * s, probes[i].id + " quadrature " + num(q) + " vs " + num(s));
    o.require(est[i].value == s, probes[i].id + " monte carlo " + num(est[i].value) + " vs " + num(s));
  }
  return o;
}

Outcome c2_route_agreement() {
  Outcome o;
  const auto gauss = gaussian_family(1.0);
  const auto wedge = uniform_wedge_family();
  const std::vector<std::pair<SpectralFamily, GeneratorProcess>> pairs{
      {gauss, ratio_generator(gauss, Density::normal())}, {wedge, spectral_generator(wedge)}};
  const auto probes = standard_probes(kGrid);
  const auto fs = functions_of(probes);
  std::uint64_t seed = 2;
  for (const auto& [fam, gen] : pairs) {
    const auto est = dnorm_monte_carlo(fs, gen, kN, SeedSpec{seed++}, workers());
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const double q = dnorm_quadrature(fs[i], fam);
      o.require(std::abs(q - est[i].value) <= 3.0 * est[i].standard_error + 1e-6,
                fam.label() + " " + probes[i].id + ": " + num(q) + " vs " + num(est[i].value));
    }
  }
  return o;
}

Outcome c3_h_invariance() {
  Outcome o;
  const auto gauss = gaussian_family(1.0);
  const double m_quad = std::get<double>(generator_constant(QuadratureRoute{gauss}));
  o.require(std::abs(m_quad - oracle::kGaussianM) <= 1e-8, "quadrature m " + num(m_quad));
  const std::vector<Density> hs{Density::normal(), Density::laplace(), Density::student_t(3)};
  std::vector<GeneratorProcess> gens;
  std::vector<MCEstimate> ms;
  std::uint64_t seed = 10;
  for (const auto& h : hs) {
    gens.push_back(ratio_generator(gauss, h));
    MonteCarloRoute r{gens.back(), kN, SeedSpec{seed++}, workers(), kGrid};
    ms.push_back(std::get<MCEstimate>(generator_constant(r)));
    o.require(std::abs(ms.back().value - m_quad) <= 3.0 * ms.back().standard_error,
              h.name() + " m " + num(ms.back().value));
  }
  const double crit = bonferroni_critical(3);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    for (std::size_t j = i + 1; j < gens.size(); ++j) {
      const double z = studentized_difference(ms[i], ms[j]);
      o.require(std::abs(z) <= crit, "m " + hs[i].name() + " vs " + hs[j].name() + " z=" + num(z));
      const auto v = generators_equivalent(gens[i], gens[j], standard_probes(kGrid), kN, kThreeSigmaLevel,
                                           SeedSpec{seed++}, workers());
      o.require(v.consistent(), "D-norm " + hs[i].name() + " vs " + hs[j].name() + " max|z|=" + num(v.max_abs_z));
    }
  }
  return o;
}

Outcome c4_change_of_variable() {
  Outcome o;
  const auto gauss = gaussian_family(1.0);
  const auto v = generators_equivalent(spectral_generator(cov_gaussian(Density::normal())),
                                       ratio_generator(gauss, Density::normal()), standard_probes(kGrid), kN,
                                       kThreeSigmaLevel, SeedSpec{20}, workers());
  o.require(v.consistent(), "max|z|=" + num(v.max_abs_z));
  return o;
}

Outcome c5_msp_df() {
  Outcome o;
  // wedge: exp(-1) on both spikes; cov-laplace inherits the gaussian value
  const std::vector<std::pair<SpectralFamily, double>> cases{
      {uniform_wedge_family(), std::exp(-1.0)}, {cov_gaussian(Density::laplace()), oracle::kExpMinusTwoSpike}};
  std::uint64_t seed = 30;
  for (const auto& [fam, two_spike] : cases) {
    const auto r = verify_msp_df(fam, standard_probes(kGrid), kN, SeedSpec{seed++}, workers());
    o.require(r.n_used == kN, fam.label() + " certified paths " + std::to_string(r.n_used));
    bool saw_two_spike = false;
    for (const auto& row : r.rows) {
      o.require(within_three_se(row), fam.label() + " " + row.probe_id + " z=" + num(row.z));
      if (row.probe_id == "two_spike_eq") {
        saw_two_spike = true;
        o.require(std::abs(row.theoretical - two_spike) <= 1e-6, fam.label() + " two-spike target " + num(row.theoretical));
      }
    }
    o.require(saw_two_spike, "no two-spike row");
  }
  return o;
}

Outcome c6_margins_max_stability() {
  Outcome o;
  const auto margins = margin_probes(kGrid, {0.0, 0.5, 1.0}, {-2.0, -1.0, -0.5});
  std::uint64_t seed = 40;
  for (const auto& fam : {uniform_wedge_family(), cov_gaussian(Density::laplace())}) {
    const auto r = verify_msp_df(fam, margins, kN, SeedSpec{seed++}, workers());
    for (std::size_t j = 0; j < r.rows.size(); ++j) {
      const double target = std::exp(-sup_norm(margins[j].f));
      const auto& row = r.rows[j];
      const double se = std::sqrt(target * (1.0 - target) / static_cast<double>(row.empirical.n));
      o.require(std::abs(row.empirical.value - target) <= 3.0 * se, fam.label() + " " + row.probe_id);
    }
    for (std::size_t k : {2u, 5u}) {
      const auto ms = max_stability_check(fam, standard_probes(kGrid), kN, k, SeedSpec{seed++}, workers());
      o.require(ms.all_passed(), fam.label() + " max-stability k=" + std::to_string(k));
    }
  }
  return o;
}

Outcome c7_gpp_df() {
  Outcome o;
  struct Case {
    GeneratorProcess gen;
    NamedProbe probe;
    double target;
  };
  const std::vector<Case> cases{
      {constant_generator(ScalarLaw::point(1.0)), {"const_-0.5", EFunction::constant(kGrid, -0.5)}, 0.5},
      {spectral_generator(uniform_wedge_family()), {"const_-0.25", EFunction::constant(kGrid, -0.25)}, 0.75},
      {spectral_generator(cov_gaussian(Density::laplace())),
       {"two_spike_0.2", make_step_function({{0.2, -0.2}, {0.8, -0.2}}, kGrid)},
       oracle::kGppTwoSpike},
  };
  std::uint64_t seed = 50;
  for (const auto& c : cases) {
    const auto r = verify_gpp_df(c.gen, {c.probe}, kN, SeedSpec{seed++}, workers());
    const auto& row = r.rows.front();
    o.require(std::abs(row.theoretical - c.target) <= 1e-6, c.gen.label() + " target " + num(row.theoretical));
    const double se = std::sqrt(c.target * (1.0 - c.target) / static_cast<double>(kN));
    o.require(std::abs(row.empirical.value - c.target) <= 3.0 * se + row.budget,
              c.gen.label() + " empirical " + num(row.empirical.value));
    o.require(r.identity_mismatches == 0, c.gen.label() + " identity mismatches");
  }
  return o;
}

Outcome c8_norm_axioms() {
  Outcome o;
  const auto gauss = gaussian_family(1.0);
  const std::vector<SpectralFamily> families{
      gauss,
      gaussian_family(0.5),
      gaussian_family(3.0),
      kernel_shift_family(Kernel::normal, 0.7),
      kernel_shift_family(Kernel::laplace, 2.0),
      kernel_shift_family(Kernel::triangular, 1.5),
      uniform_wedge_family(),
      cov_gaussian(Density::normal()),
      cov_gaussian(Density::laplace()),
      cov_gaussian(Density::cauchy()),
      change_of_variable_family(kernel_shift_family(Kernel::laplace, 1.0), Density::student_t(3)),
  };
  const std::vector<GeneratorProcess> generators{
      constant_generator(ScalarLaw::point(1.0)),
      constant_generator(ScalarLaw::uniform(0.0, 2.0)),
      constant_generator(ScalarLaw::exponential()),
      ratio_generator(gauss, Density::normal()),
      ratio_generator(gauss, Density::laplace()),
      ratio_generator(gauss, Density::cauchy()),
      ratio_generator(gauss, Density::student_t(3)),
      ratio_generator(kernel_shift_family(Kernel::triangular, 1.5), Density::normal()),
      spectral_generator(uniform_wedge_family()),
      spectral_generator(cov_gaussian(Density::normal())),
      spectral_generator(cov_gaussian(Density::laplace())),
  };
  const std::vector<double> scalars{-3.0, 0.0, 0.5, 2.0, 10.0};
  const auto probes = standard_probes(kGrid);
  std::size_t rows = 0;
  for (const auto& fam : families) {
    const auto r = norm_axiom_suite(QuadratureRoute{fam}, probes, scalars);
    rows += r.rows.size();
    o.require(r.passed(), r.route + ": " + std::to_string(r.failures()) + " failures");
  }
  std::uint64_t seed = 60;
  for (const auto& gen : generators) {
    MonteCarloRoute mc{gen, 20000, SeedSpec{seed++}, workers(), kGrid};
    const auto r = norm_axiom_suite(mc, probes, scalars);
    rows += r.rows.size();
    o.require(r.passed(), r.route + ": " + std::to_string(r.failures()) + " failures");
  }
  if (o.passed) o.detail = std::to_string(rows) + " rows";
  return o;
}

Outcome c9_validator() {
  Outcome o;
  const auto gauss = gaussian_family(1.0);
  for (const auto& fam : {gauss, gaussian_family(0.5), gaussian_family(3.0), kernel_shift_family(Kernel::normal, 0.7),
                          kernel_shift_family(Kernel::laplace, 2.0), kernel_shift_family(Kernel::triangular, 1.5),
                          uniform_wedge_family(), cov_gaussian(Density::normal()), cov_gaussian(Density::laplace()),
                          cov_gaussian(Density::cauchy()),
                          change_of_variable_family(kernel_shift_family(Kernel::laplace, 1.0), Density::student_t(3))}) {
    o.require(validate_family(fam).passed(), fam.label() + " should pass");
  }
  const std::vector<std::pair<SpectralFamily, std::string>> broken_cases{
      {broken::scaled_wedge(), kNormalization},
      {broken::jump_in_t(), kContinuity},
      {broken::divergent_envelope(), kSupIntegrable},
  };
  for (const auto& [fam, expected] : broken_cases) {
    const auto r = validate_family(fam);
    for (const auto& c : r.conditions) {
      o.require(c.passed == (c.name != expected), fam.label() + ": " + c.name + (c.passed ? " passed" : " failed"));
    }
  }
  return o;
}

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(DNORM_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

Outcome c10_determinism() {
  Outcome o;
  const std::vector<std::string> runs{
      "eval --family gaussian --seed 5",
      "mc --generator '{\"type\": \"ratio\", \"family\": \"gaussian\", \"h\": \"laplace\"}' --n 20000 --seed 5",
      "simulate msp --family uniform_wedge --n 3000 --grid 20 --seed 5",
      "simulate gpp --generator '{\"type\": \"spectral\", \"family\": \"uniform_wedge\"}' --n 3000 --grid 20 --seed 5 "
      "--format json",
      "verify msp-df --family uniform_wedge --n 20000 --seed 5",
      "verify gpp-df --generator constant --n 20000 --seed 5",
      "verify max-stability --family uniform_wedge --k 2 --n 5000 --seed 5",
      "verify equivalence --generator constant --generator2 '{\"type\": \"spectral\", \"family\": \"uniform_wedge\"}' "
      "--n 20000 --seed 5",
      "verify norm-axioms --generator '{\"type\": \"ratio\", \"family\": \"gaussian\"}' --n 5000 --seed 5",
  };
  for (const auto& args : runs) {
    // eval is pure quadrature and takes no --workers
    const bool threaded = args.rfind("eval", 0) != 0;
    const auto a = cli(args + (threaded ? " --workers 1" : ""));
    const auto b = cli(args + (threaded ? " --workers 1" : ""));
    o.require(a.code == 0 && !a.out.empty(), "exit " + std::to_string(a.code) + ": " + args);
    o.require(a.out == b.out, "rerun differs: " + args);
    if (threaded) o.require(a.out == cli(args + " --workers 4").out, "workers change output: " + args);
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;  // 0: no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"sup-norm recovery", 5, c1_sup_norm},
      {"route agreement", 60, c2_route_agreement},
      {"h-invariance of m and the D-norm", 90, c3_h_invariance},
      {"change-of-variable equivalence", 60, c4_change_of_variable},
      {"MSP functional df", 180, c5_msp_df},
      {"margins and max-stability", 180, c6_margins_max_stability},
      {"GPP df", 60, c7_gpp_df},
      {"norm axioms", 0, c8_norm_axioms},
      {"validator sensitivity", 0, c9_validator},
      {"determinism", 0, c10_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.passed = false;
      o.detail += (o.detail.empty() ? "" : "; ") + std::string("over runtime budget ") + num(c.budget_s) + " s";
    }
    if (!o.passed) ++failed;
    std::printf("%-4s %2zu  %-34s %8.2f s  %s\n", o.passed ? "PASS" : "FAIL", i + 1, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
