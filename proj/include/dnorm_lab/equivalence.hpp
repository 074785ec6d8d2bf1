#pragma once

// Statistical test of whether two generators induce the same D-norm. The
// verdict can only be "consistent with equivalence" or "distinguished".

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "dnorm_lab/dnorm.hpp"
#include "dnorm_lab/errors.hpp"
#include "dnorm_lab/generator.hpp"
#include "dnorm_lab/probes.hpp"
#include "dnorm_lab/random.hpp"
#include "dnorm_lab/stats.hpp"

namespace dnorm_lab {

enum class Verdict { equivalent_consistent, distinguished };

inline std::string verdict_name(Verdict v) {
  return v == Verdict::equivalent_consistent ? "EQUIVALENT-CONSISTENT" : "DISTINGUISHED";
}

struct EquivalenceRow {
  std::string probe_id;
  MCEstimate first;
  MCEstimate second;
  double z = 0.0;
};

struct EquivalenceVerdict {
  std::string generator1;
  std::string generator2;
  std::vector<EquivalenceRow> rows;
  double alpha = kThreeSigmaLevel;
  double critical_value = 3.0;
  double max_abs_z = 0.0;
  Verdict verdict = Verdict::equivalent_consistent;

  [[nodiscard]] bool consistent() const { return verdict == Verdict::equivalent_consistent; }
};

// Difference of two independent estimates in standard-error units. Two exact
// (zero-SE) estimates give 0 when equal and infinity otherwise.
inline double studentized_difference(const MCEstimate& a, const MCEstimate& b) {
  const double se = std::hypot(a.standard_error, b.standard_error);
  const double diff = a.value - b.value;
  if (se > 0.0) return diff / se;
  if (std::abs(diff) <= 1e-12 * std::max({1.0, std::abs(a.value), std::abs(b.value)})) return 0.0;
  return diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

// The two generators run on independent streams seed.child(1), seed.child(2).
inline EquivalenceVerdict generators_equivalent(const GeneratorProcess& g1, const GeneratorProcess& g2,
                                                const std::vector<NamedProbe>& probes, std::size_t n,
                                                double alpha = kThreeSigmaLevel, SeedSpec seed = {},
                                                std::size_t workers = 1) {
  if (probes.empty()) throw PreconditionError("generators_equivalent needs at least one probe");
  if (n < 100) throw PreconditionError("generators_equivalent needs n >= 100");
  const auto fs = functions_of(probes);
  const auto e1 = dnorm_monte_carlo(fs, g1, n, seed.child(1), workers);
  const auto e2 = dnorm_monte_carlo(fs, g2, n, seed.child(2), workers);
  EquivalenceVerdict out;
  out.generator1 = g1.label();
  out.generator2 = g2.label();
  out.alpha = alpha;
  out.critical_value = bonferroni_critical(probes.size(), alpha);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double z = studentized_difference(e1[i], e2[i]);
    out.rows.push_back({probes[i].id, e1[i], e2[i], z});
    out.max_abs_z = std::max(out.max_abs_z, std::abs(z));
  }
  out.verdict = out.max_abs_z > out.critical_value ? Verdict::distinguished : Verdict::equivalent_consistent;
  return out;
}

}  // namespace dnorm_lab
