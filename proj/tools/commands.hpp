#ifndef EIV_TOOLS_COMMANDS_HPP
#define EIV_TOOLS_COMMANDS_HPP

// Subcommand bodies for the eiv tool. Every output carries config hash, seed and version.

#include <spdlog/spdlog.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "eiv/config.hpp"
#include "eiv/deconv.hpp"
#include "eiv/diagnostics.hpp"
#include "eiv/estimate.hpp"
#include "eiv/semiparam.hpp"
#include "eiv/simulate.hpp"
#include "suite.hpp"

namespace eiv::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct RunContext {
  std::string command;
  Config cfg;
  fs::path out = "out";
  std::uint64_t seed = 20240601;
  int jobs = 1;
  std::vector<fs::path> inputs;

  std::vector<std::pair<std::string, std::string>> meta() const {
    return {{"command", command}, {"config_hash", cfg.hash()}, {"seed", std::to_string(seed)}, {"version", EIV_VERSION}};
  }
};

// Output helpers ---------------------------------------------------------------------------

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const RunContext& ctx, const std::string& name, const std::vector<std::string>& header)
      : path_(output_path(ctx, name)), os_(path_) {
    if (!os_) throw Error("cannot write " + path_.string());
    for (const auto& [k, v] : ctx.meta()) os_ << "# " << k << "=" << v << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << quote(cells[i]);
    os_ << "\n";
  }

  static fs::path output_path(const RunContext& ctx, const std::string& name) {
    fs::create_directories(ctx.out);
    const fs::path p = ctx.out / name;
    for (const auto& in : ctx.inputs)
      if (fs::exists(in) && fs::exists(p) && fs::equivalent(in, p))
        throw ConfigError("--out: output " + p.string() + " would overwrite an input file");
    return p;
  }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }

  fs::path path_;
  std::ofstream os_;
};

inline void write_json(const RunContext& ctx, const std::string& name, json j) {
  json m;
  for (const auto& [k, v] : ctx.meta()) m[k] = v;
  j["meta"] = m;
  const auto p = CsvWriter::output_path(ctx, name);
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  os << j.dump(2) << "\n";
}

// Config readers ---------------------------------------------------------------------------

inline std::vector<double> theta_list(const Config& c, const std::string& key, const ThetaVec& def, int m) {
  const auto v = c.get_list(key, std::vector<double>(def.data(), def.data() + def.size()));
  if (static_cast<int>(v.size()) != m)
    throw ConfigError(key + ": expected " + std::to_string(m) + " values, got " + std::to_string(v.size()));
  return v;
}

inline ThetaVec to_theta(const std::vector<double>& v) {
  return Eigen::Map<const ThetaVec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline const std::set<std::string>& dgp_keys() {
  static const std::set<std::string> k{"seed",          "dgp.g",          "dgp.g.breaks",   "dgp.g.values",
                                       "dgp.g.model",   "dgp.g.theta",    "dgp.F.locations", "dgp.F.weights",
                                       "dgp.z",         "dgp.z.a",        "dgp.z.b",        "dgp.sigma_dy",
                                       "dgp.sigma_dx"};
  return k;
}

inline DiscreteDistribution read_error_law(const Config& c) {
  const auto def = default_error_law();
  std::vector<double> loc, w;
  for (const auto& a : def.atoms()) {
    loc.push_back(a.location);
    w.push_back(a.weight);
  }
  loc = c.get_list("dgp.F.locations", loc);
  w = c.get_list("dgp.F.weights", c.has("dgp.F.locations") ? std::vector<double>(loc.size(), 1.0 / loc.size()) : w);
  if (loc.size() != w.size()) throw ConfigError("dgp.F.weights: length differs from dgp.F.locations");
  std::vector<DiscreteDistribution::Atom> atoms;
  for (std::size_t j = 0; j < loc.size(); ++j) atoms.push_back({w[j], loc[j]});
  try {
    return DiscreteDistribution(std::move(atoms));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("dgp.F.locations: ") + e.what());
  }
}

inline RegressionFunction read_regression(const Config& c) {
  const auto kind = c.get_string("dgp.g", "step");
  if (kind == "step") {
    const auto b = c.get_list("dgp.g.breaks", {-1.0, 1.0});
    const auto v = c.get_list("dgp.g.values", {1.0});
    if (b.size() != v.size() + 1) throw ConfigError("dgp.g.values: need one value per interval between dgp.g.breaks");
    try {
      return RegressionFunction(StepFunction(b, v));
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("dgp.g.breaks: ") + e.what());
    }
  }
  if (kind == "model") {
    const auto name = c.get_string("dgp.g.model", "poly1+gauss");
    ThetaModel m;
    try {
      m = make_model(name);
    } catch (const InvalidArgument& e) {
      throw ConfigError("dgp.g.model: " + std::string(e.what()));
    }
    return m.regression(to_theta(theta_list(c, "dgp.g.theta", m.theta_star, m.m)));
  }
  throw ConfigError("dgp.g: expected 'step' or 'model', got '" + kind + "'");
}

inline DGP read_dgp(const Config& c, std::uint64_t seed) {
  DGP d = default_dgp();
  d.g = read_regression(c);
  d.F = read_error_law(c);
  const auto z = c.get_string("dgp.z", "uniform");
  if (z == "uniform") {
    d.z = InstrumentLaw::uniform(c.get_double("dgp.z.a", -3.0), c.get_double("dgp.z.b", 3.0));
    if (!(d.z.b > d.z.a)) throw ConfigError("dgp.z.b: must exceed dgp.z.a");
  } else if (z == "gaussian") {
    d.z = InstrumentLaw::gaussian(c.get_double("dgp.z.a", 0.0), c.get_double("dgp.z.b", 2.0));
    if (!(d.z.b > 0.0)) throw ConfigError("dgp.z.b: standard deviation must be > 0");
  } else {
    throw ConfigError("dgp.z: expected 'uniform' or 'gaussian', got '" + z + "'");
  }
  d.sigma_dy = c.get_double("dgp.sigma_dy", 0.2, 0.0, 1e6);
  d.sigma_dx = c.get_double("dgp.sigma_dx", 0.1, 0.0, 1e6);
  d.seed = seed;
  return d;
}

inline json dgp_json(const Config& c, const DGP& d) {
  json j;
  j["g"] = c.get_string("dgp.g", "step");
  json F = json::array();
  for (const auto& a : d.F.atoms()) F.push_back({{"weight", a.weight}, {"location", a.location}});
  j["F"] = F;
  j["z"] = {{"kind", d.z.kind == InstrumentLaw::Kind::kUniform ? "uniform" : "gaussian"}, {"a", d.z.a}, {"b", d.z.b}};
  j["sigma_dy"] = d.sigma_dy;
  j["sigma_dx"] = d.sigma_dx;
  return j;
}

// simulate ---------------------------------------------------------------------------------

inline int cmd_simulate(RunContext& ctx) {
  auto keys = dgp_keys();
  keys.insert("simulate.n");
  ctx.cfg.check_known(keys);
  const auto n = static_cast<std::size_t>(ctx.cfg.get_int("simulate.n", 50000, 1, 100000000));
  const auto d = read_dgp(ctx.cfg, ctx.seed);
  spdlog::info("simulate: drawing n = {} with seed {}", n, ctx.seed);
  const auto s = draw(d, n);
  {
    const auto p = CsvWriter::output_path(ctx, "sample.csv");
    std::ofstream os(p);
    if (!os) throw Error("cannot write " + p.string());
    write_sample_csv(os, s, ctx.meta());
  }
  json j;
  j["n"] = n;
  j["dgp"] = dgp_json(ctx.cfg, d);
  j["sample"] = "sample.csv";
  write_json(ctx, "sample_meta.json", j);
  spdlog::info("simulate: wrote {}", (ctx.out / "sample.csv").string());
  return 0;
}

// estimate-nonparam ------------------------------------------------------------------------

inline RegularizationConfig read_regularization(const Config& c) {
  RegularizationConfig r;
  r.auto_zeta_bar = c.get_bool("deconv.auto_zeta_bar", false);
  r.zeta_bar = c.get_double("deconv.zeta_bar", r.auto_zeta_bar ? 20.0 : 8.0, 1e-6, 1e4);
  const double half = c.get_double("deconv.grid_half", r.zeta_bar, 1e-6, 1e4);
  const double step = c.get_double("deconv.grid_step", 0.01, 1e-6, 1.0);
  if (half < r.zeta_bar) throw ConfigError("deconv.grid_half: must be >= deconv.zeta_bar");
  if (half / step > 2e6) throw ConfigError("deconv.grid_step: grid would exceed 4e6 points");
  r.grid = RealGrid::symmetric(half, step);
  r.trim_threshold = c.get_double("deconv.trim_threshold", r.auto_zeta_bar ? 1e-2 : 1e-4, 0.0, 1.0);
  r.interpolate_trimmed = c.get_bool("deconv.interpolate_trimmed", true);
  try {
    r.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("deconv.zeta_bar: ") + e.what());
  }
  return r;
}

inline RealGrid read_target(const Config& c) {
  const double lo = c.get_double("target.lo", -3.0);
  const double hi = c.get_double("target.hi", 3.0);
  const auto n = static_cast<std::size_t>(c.get_int("target.n", 601, 2, 1000000));
  if (!(hi > lo)) throw ConfigError("target.hi: must exceed target.lo");
  return RealGrid(lo, hi, n);
}

inline int cmd_estimate_nonparam(RunContext& ctx) {
  auto keys = dgp_keys();
  keys.insert({"input", "deconv.zeta_bar", "deconv.grid_half", "deconv.grid_step", "deconv.trim_threshold",
               "deconv.interpolate_trimmed", "deconv.auto_zeta_bar", "bins.count", "bins.min_per_bin", "target.lo",
               "target.hi", "target.n"});
  ctx.cfg.check_known(keys);
  const auto cfg = read_regularization(ctx.cfg);
  const auto target = read_target(ctx.cfg);
  const auto input = ctx.cfg.get_string("input", "oracle");
  json src;
  const auto spectra = [&] {
    if (input == "oracle") {
      const auto d = read_dgp(ctx.cfg, ctx.seed);
      if (!d.g.is_step()) throw ConfigError("input: oracle moments need dgp.g = step");
      const auto car = oracle_carriers(d.g.as_step(), d.F);
      src = {{"input", "oracle"}, {"dgp", dgp_json(ctx.cfg, d)}};
      return moments_to_spectra(car.w_y, car.w_xy, cfg.grid);
    }
    if (!fs::exists(input)) throw ConfigError("input: file not found '" + input + "'");
    ctx.inputs.push_back(input);
    const auto s = read_sample_csv(input);
    const auto bins = static_cast<std::size_t>(ctx.cfg.get_int("bins.count", 0, 0, 100000));
    const auto minb = static_cast<std::size_t>(ctx.cfg.get_int("bins.min_per_bin", 5, 1, 1000000));
    const auto b = bin_conditional_means(s, bins ? bins : default_bin_count(s.size()), minb);
    spdlog::info("estimate-nonparam: {} records in {} bins", s.size(), b.bins.size());
    src = {{"input", input}, {"n", s.size()}, {"bins", b.bins.size()}};
    return moments_to_spectra(b, cfg.grid);
  }();
  const auto res = run_pipeline(spectra, cfg, target);
  for (const auto& w : res.diagnostics.warnings) spdlog::warn("estimate-nonparam: {}", w);
  {
    CsvWriter w(ctx, "phi.csv", {"zeta", "re", "im"});
    for (std::size_t i = 0; i < res.phi.size(); ++i)
      w.row({num(res.phi.grid[i]), num(res.phi.values[i].real()), num(res.phi.values[i].imag())});
  }
  {
    CsvWriter w(ctx, "g.csv", {"x", "g"});
    for (std::size_t i = 0; i < target.size(); ++i) w.row({num(target[i]), num(res.g_values[i])});
  }
  const auto& dg = res.diagnostics;
  json j = {{"min_abs_eps_y", dg.min_abs_eps_y},
            {"trimmed_fraction", dg.trimmed_fraction},
            {"imag_residual", dg.imag_residual},
            {"zeta_bar_used", dg.zeta_bar_used},
            {"warnings", dg.warnings},
            {"source", src}};
  write_json(ctx, "diagnostics.json", j);
  spdlog::info("estimate-nonparam: zeta_bar {}, trimmed {:.3f}", dg.zeta_bar_used, dg.trimmed_fraction);
  return 0;
}

// estimate-semiparam -----------------------------------------------------------------------

inline Schedule read_schedule(const Config& c) {
  Schedule s;
  s.xi = c.get_list("schedule.xi", s.xi);
  s.xi_eps_ratio = c.get_double("schedule.xi_eps_ratio", s.xi_eps_ratio);
  s.eps = c.get_double("schedule.eps", s.eps);
  s.eps_n = c.get_list("schedule.eps_n", s.eps_n);
  s.exclusion = c.get_double("schedule.exclusion", s.exclusion);
  s.v_mollifier = c.get_double("schedule.v_mollifier", s.v_mollifier);
  s.v_zeta_bar = c.get_double("schedule.v_zeta_bar", s.v_zeta_bar);
  s.extrapolate = c.get_bool("schedule.extrapolate", s.extrapolate);
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    // Messages read "schedule: <field> ..."; point at the list most likely responsible.
    const std::string m = e.what();
    std::string key = "schedule.xi";
    for (const char* k : {"eps_n", "xi_eps_ratio", "v_mollifier"})
      if (m.find(k) != std::string::npos) key = std::string("schedule.") + k;
    throw ConfigError(key + ": " + m);
  }
  return s;
}

inline int cmd_estimate_semiparam(RunContext& ctx) {
  auto keys = dgp_keys();
  keys.insert({"input", "semiparam.model", "semiparam.theta_init", "semiparam.theta_true", "semiparam.theta_lo",
               "semiparam.theta_hi", "schedule.xi", "schedule.xi_eps_ratio", "schedule.eps", "schedule.eps_n",
               "schedule.exclusion", "schedule.v_mollifier", "schedule.v_zeta_bar", "schedule.extrapolate",
               "gmm.max_evals", "gmm.restarts", "gmm.init_scale", "gmm.gn_iters", "bins.count"});
  ctx.cfg.check_known(keys);
  const auto name = ctx.cfg.get_string("semiparam.model", "poly1+gauss");
  ThetaModel model;
  try {
    model = make_model(name);
  } catch (const InvalidArgument& e) {
    throw ConfigError("semiparam.model: " + std::string(e.what()));
  }
  const auto sch = read_schedule(ctx.cfg);
  const ThetaVec truth = to_theta(theta_list(ctx.cfg, "semiparam.theta_true", model.theta_star, model.m));
  const ThetaVec init = to_theta(
      theta_list(ctx.cfg, "semiparam.theta_init", suite::detail::perturbed_start(model.theta_star), model.m));
  const ThetaVec lo = to_theta(
      theta_list(ctx.cfg, "semiparam.theta_lo", ThetaVec::Constant(model.m, -1e6), model.m));
  const ThetaVec hi = to_theta(theta_list(ctx.cfg, "semiparam.theta_hi", ThetaVec::Constant(model.m, 1e6), model.m));
  for (Eigen::Index j = 0; j < model.m; ++j) {
    if (!(lo(j) < hi(j))) throw ConfigError("semiparam.theta_lo: must be below semiparam.theta_hi");
    if (init(j) < lo(j) || init(j) > hi(j)) throw ConfigError("semiparam.theta_init: outside [theta_lo, theta_hi]");
  }
  GmmOptions go;
  go.max_evals = static_cast<int>(ctx.cfg.get_int("gmm.max_evals", go.max_evals, 10, 10000000));
  go.restarts = static_cast<int>(ctx.cfg.get_int("gmm.restarts", go.restarts, 0, 100));
  go.init_scale = ctx.cfg.get_double("gmm.init_scale", go.init_scale, 1e-8, 10.0);
  go.gn_iters = static_cast<int>(ctx.cfg.get_int("gmm.gn_iters", go.gn_iters, 0, 10000));
  go.jobs = ctx.jobs;

  const auto input = ctx.cfg.get_string("input", "oracle");
  std::optional<MomentData> data;
  json src;
  if (input == "oracle") {
    const auto F = read_error_law(ctx.cfg);
    model.validate(truth);
    data = MomentData::oracle(model, truth, F);
    src = {{"input", "oracle"}, {"theta_true", std::vector<double>(truth.data(), truth.data() + truth.size())}};
  } else {
    if (!fs::exists(input)) throw ConfigError("input: file not found '" + input + "'");
    ctx.inputs.push_back(input);
    const auto s = read_sample_csv(input);
    const auto bins = static_cast<std::size_t>(ctx.cfg.get_int("bins.count", 0, 0, 100000));
    const auto b = bin_conditional_means(s, bins ? bins : default_bin_count(s.size()), 1);
    data = MomentData::from_sample(s, b.p);
    src = {{"input", input}, {"n", s.size()}};
  }
  spdlog::info("estimate-semiparam: model {}, m = {}", model.name, model.m);
  const EqEvaluator eq(model, *data, sch);
  const auto rep = gmm_solve(eq, init, go);
  {
    CsvWriter w(ctx, "eq_trace.csv", {"stage", "iteration", "objective"});
    for (const auto& t : rep.trace) w.row({t.stage, std::to_string(t.iteration), num(t.objective)});
  }
  bool inside = true;
  for (Eigen::Index j = 0; j < model.m; ++j) inside = inside && rep.theta(j) >= lo(j) && rep.theta(j) <= hi(j);
  const auto e = eq.evaluate(rep.theta);
  json comps = json::array();
  for (const auto& c : e.components)
    comps.push_back({{"family", to_string(c.family)}, {"point", c.point}, {"index", c.index},
                     {"re", c.value.real()}, {"im", c.value.imag()}});
  const auto& sv = rep.rank.singular_values;
  json j = {{"model", model.name},
            {"theta_hat", std::vector<double>(rep.theta.data(), rep.theta.data() + rep.theta.size())},
            {"theta_init", std::vector<double>(init.data(), init.data() + init.size())},
            {"within_bounds", inside},
            {"eq_norm_inf", rep.eq_norm_inf},
            {"objective", rep.objective},
            {"converged", rep.converged},
            {"evaluations", rep.evaluations},
            {"iterations", rep.iterations},
            {"rank", {{"rank", rep.rank.rank},
                      {"m", model.m},
                      {"singular_values", std::vector<double>(sv.data(), sv.data() + sv.size())},
                      {"condition_ratio", rep.rank.condition_ratio()}}},
            {"components", comps},
            {"skipped", rep.skipped},
            {"source", src}};
  write_json(ctx, "semiparam.json", j);
  if (!inside) spdlog::warn("estimate-semiparam: theta_hat left [theta_lo, theta_hi]");
  if (rep.rank.rank < model.m) spdlog::warn("estimate-semiparam: Jacobian rank {} < m = {}", rep.rank.rank, model.m);
  spdlog::info("estimate-semiparam: |EQ|_inf = {:.3e} after {} evaluations", rep.eq_norm_inf, rep.evaluations);
  return 0;
}

// diagnose ---------------------------------------------------------------------------------

inline int cmd_diagnose(RunContext& ctx) {
  auto keys = dgp_keys();
  keys.insert({"diagnose.phi", "diagnose.scale", "diagnose.zeta_bar", "diagnose.band", "diagnose.step", "illposed.n",
               "illposed.band", "illposed.step"});
  ctx.cfg.check_known(keys);
  const auto kind = ctx.cfg.get_string("diagnose.phi", "discrete");
  const double scale = ctx.cfg.get_double("diagnose.scale", 1.0, 1e-12, 1e6);
  const double band = ctx.cfg.get_double("diagnose.band", 6.0, 1e-3, 1e4);
  const double step = ctx.cfg.get_double("diagnose.step", 0.01, 1e-6, 1.0);
  std::optional<double> zb;
  if (ctx.cfg.has("diagnose.zeta_bar")) zb = ctx.cfg.get_double("diagnose.zeta_bar", 0.0, 1e-6, 1e6);
  std::function<cplx(double)> phi;
  if (kind == "discrete") {
    const auto F = read_error_law(ctx.cfg);
    phi = [F](double z) { return F.charfun(z); };
  } else if (kind == "gaussian") {
    phi = [scale](double z) { return cplx(std::exp(-scale * z * z)); };
  } else if (kind == "rational") {
    phi = [scale](double z) { return cplx(1.0 / (1.0 + scale * z * z)); };
  } else {
    throw ConfigError("diagnose.phi: expected 'discrete', 'gaussian' or 'rational', got '" + kind + "'");
  }
  const auto grid = RealGrid::symmetric(band, step);
  const auto spec = GridSpectrum::sample(grid, phi);
  const auto rep = classify(spec, zb, grid);
  json j = {{"phi", kind},
            {"band", band},
            {"case1_bounded_support", rep.case1_bounded_support},
            {"case2_inverse_poly_bounded", rep.case2_inverse_poly_bounded},
            {"case2_l", rep.case2_l},
            {"case2_C", rep.case2_C},
            {"case3_OM_proxy", rep.case3_OM_proxy},
            {"verdict", to_string(rep.verdict)}};
  write_json(ctx, "case_report.json", j);
  spdlog::info("diagnose: verdict {}", to_string(rep.verdict));

  std::vector<int> ns;
  for (double v : ctx.cfg.get_list("illposed.n", {2, 3, 4, 5, 6, 7, 8})) {
    if (v != std::floor(v) || v < 2 || v > 40) throw ConfigError("illposed.n: entries must be integers in [2, 40]");
    ns.push_back(static_cast<int>(v));
  }
  const double ib = ctx.cfg.get_double("illposed.band", 10.0, 1.0, 100.0);
  const double is = ctx.cfg.get_double("illposed.step", 1e-3, 1e-5, 0.1);
  const auto rows = illposed_demo(ns, RealGrid::symmetric(ib, is));
  CsvWriter w(ctx, "illposed.csv", {"n", "I_n", "lower_bound", "sup_amplified", "pairing"});
  for (const auto& r : rows)
    w.row({std::to_string(r.n), num(r.I_n), num(r.lower_bound), num(r.sup_amplified), num(r.pairing)});
  return 0;
}

// demo -------------------------------------------------------------------------------------

inline int cmd_demo(RunContext& ctx) {
  ctx.cfg.check_known({"seed", "demo.criteria", "demo.c8_seeds", "demo.c8_n", "demo.c9_seeds"});
  std::vector<int> ids;
  for (double v : ctx.cfg.get_list("demo.criteria", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10})) {
    if (v != std::floor(v) || v < 1 || v > 10) throw ConfigError("demo.criteria: entries must be integers in [1, 10]");
    ids.push_back(static_cast<int>(v));
  }
  suite::Options o;
  o.jobs = ctx.jobs;
  o.seed = ctx.seed;
  o.c8_seeds = static_cast<int>(ctx.cfg.get_int("demo.c8_seeds", o.c8_seeds, 1, 1000));
  o.c8_n = static_cast<std::size_t>(ctx.cfg.get_int("demo.c8_n", static_cast<long long>(o.c8_n), 100, 10000000));
  o.c9_seeds = static_cast<int>(ctx.cfg.get_int("demo.c9_seeds", o.c9_seeds, 1, 1000));
  const auto results = suite::run(ids, o, [](const suite::CriterionResult& r) { spdlog::info("{}", r.line()); });

  CsvWriter w(ctx, "demo.csv", {"id", "title", "pass", "metric", "value", "bound", "seconds", "detail"});
  json arr = json::array();
  int passed = 0;
  for (const auto& r : results) {
    w.row({std::to_string(r.id), r.title, r.pass ? "PASS" : "FAIL", r.metric, num(r.value), r.bound,
           num(r.seconds), r.detail});
    arr.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"metric", r.metric}, {"value", r.value},
                   {"bound", r.bound}, {"detail", r.detail}});
    passed += r.pass;
  }
  write_json(ctx, "demo.json", {{"criteria", arr}, {"passed", passed}, {"total", results.size()}});

  // Plot series: g and its truncated reconstructions from oracle inputs.
  const auto d = default_dgp();
  const auto car = oracle_carriers(d.g.as_step(), d.F);
  const RealGrid x(-3.0, 3.0, 601);
  std::vector<std::vector<double>> curves;
  for (double zb : {2.0, 4.0, 8.0}) {
    RegularizationConfig cfg;
    cfg.zeta_bar = zb;
    cfg.grid = RealGrid::symmetric(zb, 0.01);
    curves.push_back(run_pipeline(car.w_y, car.w_xy, cfg, x).g_values);
  }
  CsvWriter t(ctx, "truncation_series.csv", {"x", "g", "g_hat_2", "g_hat_4", "g_hat_8"});
  for (std::size_t i = 0; i < x.size(); ++i)
    t.row({num(x[i]), num(d.g(x[i])), num(curves[0][i]), num(curves[1][i]), num(curves[2][i])});
  spdlog::info("demo: {} of {} criteria passed", passed, results.size());
  return 0;
}

}  // namespace eiv::cli

#endif  // EIV_TOOLS_COMMANDS_HPP
