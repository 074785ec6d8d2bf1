// dnorm: command-line front end for dnorm_lab.
//
// Exit codes: 0 success / all rows pass, 1 some verification row failed,
// 2 bad input or violated precondition, 3 numerical failure.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dnorm_lab/dnorm_lab.hpp"
#include "dnorm_lab/json_io.hpp"

namespace {

using namespace dnorm_lab;
using nlohmann::json;

constexpr int kExitFail = 1;
constexpr int kExitPrecondition = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string command;
  std::string target;  // simulate kind / verify check
  std::string family;
  std::string generator;
  std::string generator2;
  std::string probe = "standard";
  std::size_t grid = 200;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::size_t workers = default_workers();
  std::string format = "csv";
  std::string out;
  std::string plot_data;
  QuadConfig quad;
  std::size_t k = 2;
  double alpha = kThreeSigmaLevel;
  std::vector<double> scalars = {-3.0, 0.0, 0.5, 2.0, 10.0};
  bool no_validate = false;
  std::string truncation = "certified";
  std::size_t max_points = 100000;
};

// A descriptor is inline JSON, @path to a JSON file, or a bare name.
json read_descriptor(const std::string& text, const std::string& what) {
  if (text.empty()) throw PreconditionError("--" + what + " is required for this command");
  std::string body = text;
  if (text.front() == '@') {
    std::ifstream in(text.substr(1));
    if (!in) throw PreconditionError("cannot read " + what + " file " + text.substr(1));
    std::stringstream ss;
    ss << in.rdbuf();
    body = ss.str();
  }
  const auto first = body.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (body[first] == '{' || body[first] == '[' || body[first] == '"')) {
    try {
      return json::parse(body);
    } catch (const json::parse_error& e) {
      throw PreconditionError("--" + what + ": invalid JSON: " + e.what());
    }
  }
  return json(body);
}

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("DNORM_LAB_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw PreconditionError(std::string("DNORM_LAB_SEED is not an unsigned integer: ") + env);
    }
  }
  return 1;
}

std::vector<NamedProbe> read_probes(const Options& o, GridConfig grid) {
  if (o.probe == "standard") return standard_probes(grid);
  const json j = read_descriptor(o.probe, "probe");
  std::vector<NamedProbe> out;
  auto one = [&](const json& d, const std::string& fallback_id) {
    const std::string id = d.is_object() && d.contains("id") ? d.at("id").get<std::string>() : fallback_id;
    out.push_back({id, json_io::efunction_from_json(d, grid)});
  };
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) one(j[i], "probe_" + std::to_string(i));
  } else {
    one(j, "probe");
  }
  if (out.empty()) throw PreconditionError("probe set is empty");
  return out;
}

// Resolved configuration; everything that determines the output and nothing
// that does not (worker count, output paths).
json config_echo(const Options& o, std::uint64_t seed, std::size_t n) {
  json c;
  c["command"] = o.command;
  if (!o.target.empty()) c["target"] = o.target;
  if (!o.family.empty()) c["family"] = read_descriptor(o.family, "family");
  if (!o.generator.empty()) c["generator"] = read_descriptor(o.generator, "generator");
  if (!o.generator2.empty()) c["generator2"] = read_descriptor(o.generator2, "generator2");
  c["probe"] = o.probe == "standard" ? json("standard") : read_descriptor(o.probe, "probe");
  c["grid"] = o.grid;
  c["n"] = n;
  c["seed"] = seed;
  c["quad"] = {{"abs_tol", o.quad.abs_tol},
               {"rel_tol", o.quad.rel_tol},
               {"tail_tol", o.quad.tail_tol},
               {"max_subdivisions", o.quad.max_subdivisions}};
  c["format"] = o.format;
  if (o.command == "verify" && o.target == "max-stability") c["k"] = o.k;
  if (o.command == "verify") c["alpha"] = o.alpha;
  if (o.command == "verify" && o.target == "norm-axioms") c["scalars"] = o.scalars;
  if (o.command == "simulate") {
    c["truncation"] = o.truncation;
    c["max_points"] = o.max_points;
  }
  return c;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Output {
 public:
  explicit Output(const Options& o) {
    if (!o.out.empty()) {
      file_.open(o.out, std::ios::binary);
      if (!file_) throw PreconditionError("cannot open output file " + o.out);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void emit(const Options& o, const json& echo, std::uint64_t seed, const json& result, const Table& table) {
  Output out(o);
  auto& os = out.stream();
  if (o.format == "json") {
    json doc{{"tool", "dnorm_lab"}, {"version", kVersion}, {"seed", seed}, {"config", echo}, {"result", result}};
    os << doc.dump(2) << "\n";
    return;
  }
  os << "# dnorm_lab " << kVersion << " seed=" << seed << " config=" << echo.dump() << "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i) os << (i ? "," : "") << table.header[i];
  os << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
}

void write_plot(const Options& o, const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows) {
  if (o.plot_data.empty()) return;
  std::ofstream f(o.plot_data);
  if (!f) throw PreconditionError("cannot open plot data file " + o.plot_data);
  f << "#";
  for (const auto& c : columns) f << " " << c;
  f << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) f << (i ? " " : "") << fmt(r[i]);
    f << "\n";
  }
}

int cmd_eval(const Options& o) {
  const std::uint64_t seed = resolve_seed(o);
  const GridConfig grid{o.grid};
  const auto fam = json_io::family_from_json(read_descriptor(o.family, "family"), o.quad);
  const auto probes = read_probes(o, grid);
  if (!o.no_validate) {
    const auto report = validate_family(fam, o.quad);
    if (!report.passed()) {
      for (const auto& c : report.conditions) {
        if (!c.passed) std::cerr << "family validation failed: " << c.name << ": " << c.detail << "\n";
      }
      return kExitPrecondition;
    }
  }
  json rows = json::array();
  Table table{{"probe_id", "route", "value", "se", "n", "seed"}, {}};
  std::vector<std::vector<double>> plot;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto r = dnorm_quadrature_result(probes[i].f, fam, o.quad);
    rows.push_back({{"probe_id", probes[i].id}, {"route", "quadrature"}, {"value", r.value}, {"error", r.error}});
    table.rows.push_back({probes[i].id, "quadrature", fmt(r.value), fmt(r.error), "0", std::to_string(seed)});
    plot.push_back({static_cast<double>(i), r.value, r.error});
  }
  emit(o, config_echo(o, seed, 0), seed, {{"family", fam.label()}, {"rows", rows}}, table);
  write_plot(o, {"index", "value", "error"}, plot);
  std::cerr << "eval: " << probes.size() << " probe(s) evaluated by quadrature\n";
  return 0;
}

int cmd_mc(const Options& o) {
  const std::uint64_t seed = resolve_seed(o);
  const std::size_t n = o.n.value_or(100000);
  const GridConfig grid{o.grid};
  const auto gen = json_io::generator_from_json(read_descriptor(o.generator, "generator"), o.quad);
  const auto probes = read_probes(o, grid);
  const auto est = dnorm_monte_carlo(functions_of(probes), gen, n, SeedSpec{seed, 0}, o.workers);
  json rows = json::array();
  Table table{{"probe_id", "route", "value", "se", "n", "seed"}, {}};
  std::vector<std::vector<double>> plot;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    rows.push_back({{"probe_id", probes[i].id}, {"route", "monte_carlo"}, {"value", est[i].value},
                    {"se", est[i].standard_error}, {"n", est[i].n}});
    table.rows.push_back({probes[i].id, "monte_carlo", fmt(est[i].value), fmt(est[i].standard_error),
                          std::to_string(est[i].n), std::to_string(seed)});
    plot.push_back({static_cast<double>(i), est[i].value, est[i].standard_error});
  }
  emit(o, config_echo(o, seed, n), seed, {{"generator", gen.label()}, {"rows", rows}}, table);
  write_plot(o, {"index", "value", "se"}, plot);
  std::cerr << "mc: " << probes.size() << " probe(s), n = " << n << "\n";
  return 0;
}

int cmd_simulate(const Options& o) {
  const std::uint64_t seed = resolve_seed(o);
  const std::size_t n = o.n.value_or(1000);
  const GridConfig grid{o.grid};
  const auto ts = grid.points();
  PathEnsemble e;
  if (o.target == "msp") {
    const auto fam = json_io::family_from_json(read_descriptor(o.family, "family"), o.quad);
    TruncationPolicy policy;
    if (o.truncation == "capped") {
      policy.mode = TruncationPolicy::Mode::capped;
    } else if (o.truncation != "certified") {
      throw PreconditionError("--truncation must be certified or capped");
    }
    policy.max_points = o.max_points;
    e = simulate_msp_ensemble(fam, ts, n, policy, SeedSpec{seed, 0}, o.workers);
  } else if (o.target == "gpp") {
    const auto gen = json_io::generator_from_json(read_descriptor(o.generator, "generator"), o.quad);
    e = simulate_gpp_ensemble(gen, ts, n, SeedSpec{seed, 0}, o.workers);
  } else {
    throw PreconditionError("simulate needs msp or gpp");
  }
  const json echo = config_echo(o, seed, n);
  Output out(o);
  auto& os = out.stream();
  std::size_t certified = 0;
  for (char c : e.certified) certified += c ? 1 : 0;
  if (o.format == "json") {
    // JSON lines: one header object, then one object per path.
    os << json{{"tool", "dnorm_lab"}, {"version", kVersion}, {"seed", seed}, {"config", echo},
               {"kind", o.target}, {"source", e.source}, {"t", e.ts}, {"sentinels", e.sentinels}}
              .dump()
       << "\n";
    for (std::size_t i = 0; i < e.n; ++i) {
      const auto p = e.path(i);
      json line{{"replicate", i}, {"certified", e.certified[i] != 0}, {"values", std::vector<double>(p.begin(), p.end())}};
      if (o.target == "msp") line["points"] = e.points[i];
      if (o.target == "gpp") line["u_prime"] = e.u_prime[i];
      os << line.dump() << "\n";
    }
  } else {
    os << "# dnorm_lab " << kVersion << " seed=" << seed << " config=" << echo.dump() << "\n";
    os << "replicate,certified," << (o.target == "msp" ? "points" : "u_prime");
    for (double t : e.ts) os << ",t=" << fmt(t);
    os << "\n";
    for (std::size_t i = 0; i < e.n; ++i) {
      os << i << "," << (e.certified[i] ? 1 : 0) << ","
         << (o.target == "msp" ? std::to_string(e.points[i]) : fmt(e.u_prime[i]));
      for (double v : e.path(i)) os << "," << fmt(v);
      os << "\n";
    }
  }
  if (!o.plot_data.empty()) {
    const std::size_t shown = std::min<std::size_t>(e.n, 20);
    std::vector<std::string> cols{"t"};
    for (std::size_t i = 0; i < shown; ++i) cols.push_back("path" + std::to_string(i));
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < e.ts.size(); ++k) {
      std::vector<double> r{e.ts[k]};
      for (std::size_t i = 0; i < shown; ++i) r.push_back(e.path(i)[k]);
      rows.push_back(std::move(r));
    }
    write_plot(o, cols, rows);
  }
  std::cerr << "simulate " << o.target << ": " << e.n << " path(s), " << certified << " certified";
  if (o.target == "gpp") std::cerr << ", " << e.sentinels << " sentinel value(s)";
  std::cerr << "\n";
  return 0;
}

int report_verification(const Options& o, std::uint64_t seed, std::size_t n, const VerificationReport& r) {
  Table table{{"probe_id", "empirical", "se", "null_se", "theoretical", "z", "pass"}, {}};
  std::vector<std::vector<double>> plot;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    table.rows.push_back({row.probe_id, fmt(row.empirical.value), fmt(row.empirical.standard_error), fmt(row.null_se),
                          fmt(row.theoretical), fmt(row.z), row.passed ? "true" : "false"});
    plot.push_back({static_cast<double>(i), row.empirical.value, row.theoretical, row.null_se});
  }
  emit(o, config_echo(o, seed, n), seed, json_io::verification_to_json(r), table);
  write_plot(o, {"index", "empirical", "theoretical", "null_se"}, plot);
  std::cerr << "verify " << o.target << ": " << (r.rows.size() - r.failures()) << "/" << r.rows.size()
            << " rows passed";
  if (r.excluded) std::cerr << ", " << r.excluded << " uncertified path(s) excluded";
  if (r.identity_mismatches) std::cerr << ", " << r.identity_mismatches << " identity mismatch(es)";
  std::cerr << "\n";
  return r.all_passed() ? 0 : kExitFail;
}

// Standard probes rescaled to sup-norm x0 / 2 so that they are admissible
// for the GPP df identity.
std::vector<NamedProbe> gpp_probes(const Options& o, GridConfig grid, double x0) {
  auto probes = read_probes(o, grid);
  if (o.probe != "standard") return probes;
  for (auto& p : probes) {
    const double s = sup_norm(p.f);
    if (s > 0.0) p.f = scale(p.f, 0.5 * x0 / s);
  }
  return probes;
}

int cmd_verify(const Options& o) {
  const std::uint64_t seed = resolve_seed(o);
  const GridConfig grid{o.grid};
  const SeedSpec root{seed, 0};
  if (o.target == "msp-df") {
    const std::size_t n = o.n.value_or(100000);
    const auto fam = json_io::family_from_json(read_descriptor(o.family, "family"), o.quad);
    const auto r = verify_msp_df(fam, read_probes(o, grid), n, root, o.workers, o.quad, {}, o.alpha);
    return report_verification(o, seed, n, r);
  }
  if (o.target == "max-stability") {
    const std::size_t n = o.n.value_or(100000);
    const auto fam = json_io::family_from_json(read_descriptor(o.family, "family"), o.quad);
    const auto r = max_stability_check(fam, read_probes(o, grid), n, o.k, root, o.workers, {}, o.alpha);
    return report_verification(o, seed, n, r);
  }
  if (o.target == "gpp-df") {
    const std::size_t n = o.n.value_or(100000);
    const auto gen = json_io::generator_from_json(read_descriptor(o.generator, "generator"), o.quad);
    const auto probes = gpp_probes(o, grid, gpp_threshold(gen));
    const auto r = verify_gpp_df(gen, probes, n, root, o.workers, o.quad, o.alpha);
    return report_verification(o, seed, n, r);
  }
  if (o.target == "equivalence") {
    const std::size_t n = o.n.value_or(100000);
    const auto g1 = json_io::generator_from_json(read_descriptor(o.generator, "generator"), o.quad);
    const auto g2 = json_io::generator_from_json(read_descriptor(o.generator2, "generator2"), o.quad);
    const auto v = generators_equivalent(g1, g2, read_probes(o, grid), n, o.alpha, root, o.workers);
    Table table{{"probe_id", "est1", "se1", "est2", "se2", "z"}, {}};
    std::vector<std::vector<double>> plot;
    for (std::size_t i = 0; i < v.rows.size(); ++i) {
      const auto& r = v.rows[i];
      table.rows.push_back({r.probe_id, fmt(r.first.value), fmt(r.first.standard_error), fmt(r.second.value),
                            fmt(r.second.standard_error), fmt(r.z)});
      plot.push_back({static_cast<double>(i), r.first.value, r.second.value, r.z});
    }
    emit(o, config_echo(o, seed, n), seed, json_io::equivalence_to_json(v), table);
    write_plot(o, {"index", "est1", "est2", "z"}, plot);
    std::cerr << "verify equivalence: " << verdict_name(v.verdict) << " (max |z| = " << v.max_abs_z
              << ", critical " << v.critical_value << ")\n";
    return v.consistent() ? 0 : kExitFail;
  }
  if (o.target == "norm-axioms") {
    std::optional<DNormSpec> spec;
    std::size_t n = 0;
    if (!o.family.empty()) {
      spec = QuadratureRoute{json_io::family_from_json(read_descriptor(o.family, "family"), o.quad), o.quad};
    } else {
      n = o.n.value_or(10000);
      spec = MonteCarloRoute{json_io::generator_from_json(read_descriptor(o.generator, "generator"), o.quad), n, root,
                             o.workers, grid};
    }
    const auto r = norm_axiom_suite(*spec, read_probes(o, grid), o.scalars);
    Table table{{"axiom", "subject", "lhs", "rhs", "slack", "pass"}, {}};
    for (const auto& a : r.rows) {
      table.rows.push_back({a.axiom, a.subject, fmt(a.lhs), fmt(a.rhs), fmt(a.slack), a.passed ? "true" : "false"});
    }
    emit(o, config_echo(o, seed, n), seed, json_io::axioms_to_json(r), table);
    std::cerr << "verify norm-axioms: " << (r.rows.size() - r.failures()) << "/" << r.rows.size()
              << " rows passed\n";
    return r.passed() ? 0 : kExitFail;
  }
  if (o.target == "validate-family") {
    const auto fam = json_io::family_from_json(read_descriptor(o.family, "family"), o.quad);
    const auto r = validate_family(fam, o.quad);
    Table table{{"condition", "pass", "detail"}, {}};
    std::size_t ok = 0;
    for (const auto& c : r.conditions) {
      table.rows.push_back({c.name, c.passed ? "true" : "false", "\"" + c.detail + "\""});
      ok += c.passed ? 1 : 0;
    }
    emit(o, config_echo(o, seed, 0), seed, json_io::validation_to_json(r), table);
    std::cerr << "verify validate-family: " << ok << "/" << r.conditions.size() << " conditions passed\n";
    return r.passed() ? 0 : kExitFail;
  }
  throw PreconditionError("unknown verify check '" + o.target + "'");
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--grid", o.grid, "grid resolution T")->check(CLI::PositiveNumber);
  app->add_option("--probe", o.probe, "probe set: standard, inline JSON, or @file.json");
  app->add_option("--seed", o.seed, "master seed (default: $DNORM_LAB_SEED, else 1)");
  app->add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--out", o.out, "output file (default: stdout)");
  app->add_option("--plot-data", o.plot_data, "also write a gnuplot data file");
  app->add_option("--quad-tol", o.quad.abs_tol, "quadrature absolute tolerance");
  app->add_option("--quad-rel-tol", o.quad.rel_tol, "quadrature relative tolerance");
  app->add_option("--tail-tol", o.quad.tail_tol, "infinite-domain shell tolerance");
  app->add_option("--max-subdivisions", o.quad.max_subdivisions, "quadrature subdivision limit");
}

void add_mc(CLI::App* app, Options& o) {
  app->add_option("--n", o.n, "replicate count");
  app->add_option("--workers", o.workers, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"dnorm: D-norm evaluation, generator and process simulation, Monte Carlo verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dnorm_lab::kVersion));

  auto* eval = app.add_subcommand("eval", "D-norm of each probe by quadrature over a spectral family");
  eval->add_option("--family", o.family, "family descriptor")->required();
  eval->add_flag("--no-validate", o.no_validate, "skip the family validator");
  add_common(eval, o);

  auto* mc = app.add_subcommand("mc", "D-norm of each probe by Monte Carlo over a generator");
  mc->add_option("--generator", o.generator, "generator descriptor")->required();
  add_common(mc, o);
  add_mc(mc, o);

  auto* sim = app.add_subcommand("simulate", "simulate max-stable (msp) or generalized Pareto (gpp) paths");
  sim->add_option("kind", o.target, "msp or gpp")->required()->check(CLI::IsMember({"msp", "gpp"}));
  sim->add_option("--family", o.family, "family on [0,1] (msp)");
  sim->add_option("--generator", o.generator, "generator with finite sup bound (gpp)");
  sim->add_option("--truncation", o.truncation, "certified or capped")->check(CLI::IsMember({"certified", "capped"}));
  sim->add_option("--max-points", o.max_points, "Poisson point cap per path")->check(CLI::PositiveNumber);
  add_common(sim, o);
  add_mc(sim, o);

  auto* ver = app.add_subcommand("verify", "run a verification; exit 0 iff every row passes");
  ver->add_option("check", o.target, "msp-df | gpp-df | max-stability | equivalence | norm-axioms | validate-family")
      ->required()
      ->check(CLI::IsMember({"msp-df", "gpp-df", "max-stability", "equivalence", "norm-axioms", "validate-family"}));
  ver->add_option("--family", o.family, "family descriptor");
  ver->add_option("--generator", o.generator, "generator descriptor");
  ver->add_option("--generator2", o.generator2, "second generator (equivalence)");
  ver->add_option("--k", o.k, "number of maxima (max-stability)")->check(CLI::PositiveNumber);
  ver->add_option("--alpha", o.alpha, "family-wise level")->check(CLI::Range(1e-12, 0.5));
  ver->add_option("--scalars", o.scalars, "scalars for homogeneity (norm-axioms)")->delimiter(',');
  add_common(ver, o);
  add_mc(ver, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitPrecondition;
  }

  try {
    if (eval->parsed()) {
      o.command = "eval";
      o.quad.validate();
      return cmd_eval(o);
    }
    if (mc->parsed()) {
      o.command = "mc";
      o.quad.validate();
      return cmd_mc(o);
    }
    if (sim->parsed()) {
      o.command = "simulate";
      o.quad.validate();
      return cmd_simulate(o);
    }
    o.command = "verify";
    o.quad.validate();
    return cmd_verify(o);
  } catch (const dnorm_lab::PreconditionError& e) {
    std::cerr << "precondition violated: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "bad descriptor: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const dnorm_lab::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << " (partial value " << e.partial_value() << ")\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
