#pragma once

// JSON descriptors for functions, families, densities and generators, and
// serializers for reports. Requires nlohmann/json (vendored as json.hpp).

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

#include "dnorm_lab/density.hpp"
#include "dnorm_lab/efunc.hpp"
#include "dnorm_lab/equivalence.hpp"
#include "dnorm_lab/errors.hpp"
#include "dnorm_lab/generator.hpp"
#include "dnorm_lab/process_sim.hpp"
#include "dnorm_lab/quadrature.hpp"
#include "dnorm_lab/spectral.hpp"

namespace dnorm_lab::json_io {

using nlohmann::json;

namespace detail {

inline json normalize(const json& j) {
  if (j.is_string()) return json{{"type", j.get<std::string>()}};
  return j;
}

inline const json& field(const json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw PreconditionError(what + ": missing \"" + key + "\"");
  return j.at(key);
}

inline double number(const json& j, const char* key, const std::string& what) {
  const auto& v = field(j, key, what);
  if (!v.is_number()) throw PreconditionError(what + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

inline std::vector<Spike> spikes_from(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw PreconditionError(what + " must be an array of [t, x] pairs");
  std::vector<Spike> out;
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw PreconditionError(what + " entries must be [t, x] number pairs");
    }
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

}  // namespace detail

// {"grid_resolution": T, "values": [...], "spikes": [[t, x], ...]},
// {"step": [[t, x], ...]} or {"constant": c}. The shorthands use `grid`.
inline EFunction efunction_from_json(const json& j, GridConfig grid = GridConfig{200}) {
  if (!j.is_object()) throw PreconditionError("function descriptor must be a JSON object");
  if (j.contains("step")) return make_step_function(detail::spikes_from(j.at("step"), "step"), grid);
  if (j.contains("constant")) return EFunction::constant(grid, detail::number(j, "constant", "constant function"));
  const auto& res = detail::field(j, "grid_resolution", "function");
  if (!res.is_number_integer() || res.get<long long>() < 1) {
    throw PreconditionError("function: grid_resolution must be a positive integer");
  }
  const GridConfig g{static_cast<std::size_t>(res.get<long long>())};
  const auto& vals = detail::field(j, "values", "function");
  if (!vals.is_array()) throw PreconditionError("function: values must be an array");
  std::vector<double> values;
  for (const auto& v : vals) {
    if (!v.is_number()) throw PreconditionError("function: values must be numbers");
    values.push_back(v.get<double>());
  }
  std::vector<Spike> spikes;
  if (j.contains("spikes")) spikes = detail::spikes_from(j.at("spikes"), "spikes");
  return EFunction(g, std::move(values), std::move(spikes));
}

inline json efunction_to_json(const EFunction& f) {
  json spikes = json::array();
  for (const auto& s : f.spikes()) spikes.push_back({s.t, s.value});
  return {{"grid_resolution", f.grid().resolution},
          {"values", std::vector<double>(f.values().begin(), f.values().end())},
          {"spikes", spikes}};
}

// "normal" | "laplace" | "cauchy" | "student_t3" | "uniform", or
// {"type": ..., "scale": s, "dof": k}.
inline Density density_from_json(const json& raw) {
  const json j = detail::normalize(raw);
  const std::string type = detail::field(j, "type", "density").get<std::string>();
  const double scale = j.contains("scale") ? detail::number(j, "scale", "density") : 1.0;
  if (type == "normal") return Density::normal(scale);
  if (type == "laplace") return Density::laplace(scale);
  if (type == "cauchy") return Density::cauchy(scale);
  if (type == "uniform") return Density::uniform(scale);
  if (type.rfind("student_t", 0) == 0) {
    int dof = 3;
    if (j.contains("dof")) {
      dof = static_cast<int>(detail::number(j, "dof", "density"));
    } else if (type.size() > 9) {
      try {
        dof = std::stoi(type.substr(9));
      } catch (const std::exception&) {
        throw PreconditionError("density: cannot read degrees of freedom from \"" + type + "\"");
      }
    }
    return Density::student_t(dof, scale);
  }
  throw PreconditionError("unknown density \"" + type + "\"");
}

inline Kernel kernel_from_name(const std::string& name) {
  if (name == "normal") return Kernel::normal;
  if (name == "laplace") return Kernel::laplace;
  if (name == "triangular") return Kernel::triangular;
  throw PreconditionError("unknown kernel psi \"" + name + "\"");
}

inline SpectralFamily family_from_json(const json& raw, const QuadConfig& cfg = {}) {
  const json j = detail::normalize(raw);
  const std::string type = detail::field(j, "type", "family").get<std::string>();
  if (type == "gaussian") return gaussian_family(j.contains("sigma") ? detail::number(j, "sigma", "gaussian") : 1.0);
  if (type == "kernel_shift") {
    const std::string psi = j.contains("psi") ? j.at("psi").get<std::string>() : "normal";
    return kernel_shift_family(kernel_from_name(psi), detail::number(j, "beta", "kernel_shift"));
  }
  if (type == "uniform_wedge") return uniform_wedge_family();
  if (type == "change_of_variable") {
    const auto base = family_from_json(detail::field(j, "base", "change_of_variable"), cfg);
    return change_of_variable_family(base, density_from_json(detail::field(j, "h", "change_of_variable")), cfg);
  }
  throw PreconditionError("unknown family type \"" + type + "\"");
}

inline ScalarLaw law_from_json(const json& raw) {
  const json j = detail::normalize(raw);
  const std::string type = detail::field(j, "type", "law").get<std::string>();
  if (type == "point") return ScalarLaw::point(j.contains("value") ? detail::number(j, "value", "point") : 1.0);
  if (type == "uniform") return ScalarLaw::uniform(detail::number(j, "lo", "uniform"), detail::number(j, "hi", "uniform"));
  if (type == "exponential") return ScalarLaw::exponential();
  throw PreconditionError("unknown scalar law \"" + type + "\"");
}

// {"type": "constant", "law": {...}}, {"type": "ratio", "family": {...}, "h": ...},
// {"type": "spectral", "family": {...}}.
inline GeneratorProcess generator_from_json(const json& raw, const QuadConfig& cfg = {}) {
  const json j = detail::normalize(raw);
  const std::string type = detail::field(j, "type", "generator").get<std::string>();
  if (type == "constant") {
    return constant_generator(j.contains("law") ? law_from_json(j.at("law")) : ScalarLaw::point(1.0));
  }
  if (type == "ratio") {
    const auto fam = family_from_json(detail::field(j, "family", "ratio"), cfg);
    const Density h = j.contains("h") ? density_from_json(j.at("h")) : Density::normal(1.0);
    return ratio_generator(fam, h);
  }
  if (type == "spectral") return spectral_generator(family_from_json(detail::field(j, "family", "spectral"), cfg));
  throw PreconditionError("unknown generator type \"" + type + "\"");
}

inline json estimate_to_json(const MCEstimate& e) {
  return {{"value", e.value}, {"se", e.standard_error}, {"n", e.n}};
}

inline json validation_to_json(const ValidationReport& r) {
  json conds = json::array();
  for (const auto& c : r.conditions) conds.push_back({{"condition", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  json out{{"family", r.family},
           {"passed", r.passed()},
           {"conditions", conds},
           {"worst_normalization_deviation", r.worst_normalization_deviation},
           {"continuity_jumps", r.continuity_jumps},
           {"diagnostics", r.diagnostics}};
  out["sup_integral"] = r.sup_integral ? json(*r.sup_integral) : json(nullptr);
  out["sup_integral_partial"] = r.sup_integral_partial;
  return out;
}

inline json verification_to_json(const VerificationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"probe_id", row.probe_id},
                    {"empirical", row.empirical.value},
                    {"se", row.empirical.standard_error},
                    {"null_se", row.null_se},
                    {"theoretical", row.theoretical},
                    {"z", row.z},
                    {"pass", row.passed}});
  }
  return {{"kind", r.kind},
          {"source", r.source},
          {"critical_value", r.critical_value},
          {"n_requested", r.n_requested},
          {"n_used", r.n_used},
          {"excluded_uncertified", r.excluded},
          {"identity_mismatches", r.identity_mismatches},
          {"sentinels", r.sentinels},
          {"all_passed", r.all_passed()},
          {"rows", rows}};
}

inline json equivalence_to_json(const EquivalenceVerdict& v) {
  json rows = json::array();
  for (const auto& r : v.rows) {
    rows.push_back({{"probe_id", r.probe_id},
                    {"est1", r.first.value},
                    {"se1", r.first.standard_error},
                    {"est2", r.second.value},
                    {"se2", r.second.standard_error},
                    {"z", r.z}});
  }
  return {{"generator1", v.generator1},
          {"generator2", v.generator2},
          {"alpha", v.alpha},
          {"critical_value", v.critical_value},
          {"max_abs_z", v.max_abs_z},
          {"verdict", verdict_name(v.verdict)},
          {"rows", rows}};
}

inline json axioms_to_json(const NormAxiomReport& r) {
  json rows = json::array();
  for (const auto& a : r.rows) {
    rows.push_back({{"axiom", a.axiom}, {"subject", a.subject}, {"lhs", a.lhs}, {"rhs", a.rhs}, {"slack", a.slack},
                    {"pass", a.passed}});
  }
  return {{"route", r.route}, {"failures", r.failures()}, {"rows", rows}};
}

}  // namespace dnorm_lab::json_io
