#pragma once

#include <string>
#include <vector>

#include "dnorm_lab/efunc.hpp"

namespace dnorm_lab {

struct NamedProbe {
  std::string id;
  EFunction f;
};

// Constants, single spikes, two-spike steps, a smooth function, and zero.
inline std::vector<NamedProbe> standard_probes(GridConfig grid = GridConfig{200}) {
  std::vector<NamedProbe> out;
  out.push_back({"zero", EFunction::zero(grid)});
  out.push_back({"const_-1", EFunction::constant(grid, -1.0)});
  out.push_back({"const_-0.5", EFunction::constant(grid, -0.5)});
  out.push_back({"spike_0", make_step_function({{0.0, -1.0}}, grid)});
  out.push_back({"spike_0.5", make_step_function({{0.5, -2.0}}, grid)});
  out.push_back({"spike_1", make_step_function({{1.0, -1.0}}, grid)});
  out.push_back({"two_spike_eq", make_step_function({{0.2, -1.0}, {0.8, -1.0}}, grid)});
  out.push_back({"two_spike_uneq", make_step_function({{0.2, -1.0}, {0.8, -3.0}}, grid)});
  out.push_back({"smooth", EFunction::from_function(grid, [](double t) { return -(1.0 + t) / 2.0; })});
  return out;
}

inline std::vector<EFunction> functions_of(const std::vector<NamedProbe>& probes) {
  std::vector<EFunction> out;
  out.reserve(probes.size());
  for (const auto& p : probes) out.push_back(p.f);
  return out;
}

}  // namespace dnorm_lab
