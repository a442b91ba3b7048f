#include "homokin/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <utility>

#include "json.hpp"

#include "homokin/boltzmann.hpp"
#include "homokin/deformation.hpp"
#include "homokin/errors.hpp"
#include "homokin/hydro.hpp"
#include "homokin/meanfield.hpp"
#include "homokin/measure.hpp"
#include "homokin/omd.hpp"
#include "homokin/potential.hpp"
#include "homokin/rng.hpp"
#include "homokin/series.hpp"
#include "homokin/version.hpp"

namespace homokin::harness {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- parsing

// Object view that remembers which keys were consumed so leftovers can be
// rejected; typos in config files must fail, not silently run defaults.
class ObjReader {
 public:
  ObjReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    return typed<T>(key);
  }

  template <typename T>
  T require(const std::string& key) const {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing required key '" + key + "'");
    return typed<T>(key);
  }

  const json* child(const std::string& key) const {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
  }

 private:
  template <typename T>
  T typed(const std::string& key) const {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json& j_;
  std::string where_;
  mutable std::set<std::string> seen_;
};

PotentialBlock parse_potential(const json& j, const std::string& where) {
  ObjReader r(j, where);
  PotentialBlock b;
  b.kind = r.get("kind", b.kind);
  b.alpha = r.get("alpha", b.alpha);
  b.strength = r.get("strength", b.strength);
  b.k = r.get("k", b.k);
  b.r0 = r.get("r0", b.r0);
  b.depth = r.get("depth", b.depth);
  b.sigma = r.get("sigma", b.sigma);
  b.cutoff = r.get("cutoff", b.cutoff);
  r.finish();
  return b;
}

OmdBlock parse_omd(const json& j, const std::string& where) {
  ObjReader r(j, where);
  OmdBlock b;
  b.init_csv = r.get("init_csv", b.init_csv);
  b.lattice_extent = r.get("lattice_extent", b.lattice_extent);
  b.scaling = r.get("scaling", b.scaling);
  b.epsilon = r.get("epsilon", b.epsilon);
  r.finish();
  return b;
}

MeanfieldBlock parse_meanfield(const json& j, const std::string& where) {
  ObjReader r(j, where);
  MeanfieldBlock b;
  b.mode = r.get("mode", b.mode);
  b.n_list = r.get("n_list", b.n_list);
  b.t_eval = r.get("t_eval", b.t_eval);
  b.n_particles = r.get("n_particles", b.n_particles);
  b.perturbation = r.get("perturbation", b.perturbation);
  b.checks = r.get("checks", b.checks);
  b.sigma_x = r.get("sigma_x", b.sigma_x);
  b.sigma_w = r.get("sigma_w", b.sigma_w);
  b.init_csv = r.get("init_csv", b.init_csv);
  r.finish();
  return b;
}

DsmcBlock parse_dsmc(const json& j, const std::string& where) {
  ObjReader r(j, where);
  DsmcBlock b;
  b.kernel = r.get("kernel", b.kernel);
  b.rate_const = r.get("rate_const", b.rate_const);
  b.diameter = r.get("diameter", b.diameter);
  b.epsilon = r.get("epsilon", b.epsilon);
  b.n_sim = r.get("n_sim", b.n_sim);
  b.number_density = r.get("number_density", b.number_density);
  b.init = r.get("init", b.init);
  b.theta0 = r.get("theta0", b.theta0);
  b.cov = r.get("cov", b.cov);
  b.init_csv = r.get("init_csv", b.init_csv);
  b.emit_final_ensemble = r.get("emit_final_ensemble", b.emit_final_ensemble);
  b.self_similar = r.get("self_similar", b.self_similar);
  r.finish();
  return b;
}

HydroBlock parse_hydro(const json& j, const std::string& where) {
  ObjReader r(j, where);
  HydroBlock b;
  b.model = r.get("model", b.model);
  b.rho0 = r.get("rho0", b.rho0);
  b.theta0 = r.get("theta0", b.theta0);
  b.mu0 = r.get("mu0", b.mu0);
  b.omega_exp = r.get("omega_exp", b.omega_exp);
  b.epsilon = r.get("epsilon", b.epsilon);
  r.finish();
  return b;
}

ExperimentConfig parse_object(const json& j, const std::string& where, int depth);

CompareBlock parse_compare(const json& j, const std::string& where, int depth) {
  if (depth > 0) throw ConfigError(where + ": compare arms cannot themselves be comparisons");
  ObjReader r(j, where);
  CompareBlock b;
  b.metric = r.get("metric", b.metric);
  b.field = r.get("field", b.field);
  b.tolerance = r.get("tolerance", b.tolerance);
  if (const json* a = r.child("arm_a"))
    b.arm_a = std::make_shared<ExperimentConfig>(parse_object(*a, where + ".arm_a", depth + 1));
  if (const json* a = r.child("arm_b"))
    b.arm_b = std::make_shared<ExperimentConfig>(parse_object(*a, where + ".arm_b", depth + 1));
  if (const json* a = r.child("calibration"))
    b.calibration =
        std::make_shared<ExperimentConfig>(parse_object(*a, where + ".calibration", depth + 1));
  r.finish();
  return b;
}

void require_one_of(const std::string& where, const std::string& value,
                    std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (value == a) return;
  std::string msg = where + ": '" + value + "' is not one of {";
  bool first = true;
  for (const char* a : allowed) {
    if (!first) msg += ", ";
    msg += a;
    first = false;
  }
  throw ConfigError(msg + "}");
}

void validate(const ExperimentConfig& c, const std::string& where, bool nested) {
  require_one_of(where + ".level", c.level, {"omd", "meanfield", "dsmc", "hydro", "compare"});
  if (nested && c.level == "compare")
    throw ConfigError(where + ": compare arms must be leaf levels");
  if (!(c.dt > 0)) throw ConfigError(where + ".dt: must be positive");
  if (!(c.horizon > 0)) throw ConfigError(where + ".horizon: must be positive");
  if (c.stride < 1) throw ConfigError(where + ".stride: must be >= 1");
  if (c.seeds.empty()) throw ConfigError(where + ".seeds: need at least one seed");

  const Deformation def(c.A);
  const auto t_star = def.singular_time();
  auto check_time = [&](double t, const std::string& key) {
    if (t_star && t >= *t_star)
      throw ConfigError(where + "." + key + ": " + std::to_string(t) +
                        " reaches the deformation's singular time " + std::to_string(*t_star));
  };
  check_time(c.horizon, "horizon");

  require_one_of(where + ".potential.kind", c.potential.kind,
                 {"none", "inverse_power", "harmonic", "truncated_lj"});
  if (c.potential.kind != "none" && !(c.potential.cutoff > 0))
    throw ConfigError(where + ".potential.cutoff: must be positive for kind '" +
                      c.potential.kind + "'");

  require_one_of(where + ".omd.scaling", c.omd.scaling, {"unit", "mean_field", "boltzmann"});
  if (!(c.omd.epsilon > 0)) throw ConfigError(where + ".omd.epsilon: must be positive");
  if (c.omd.lattice_extent < 0)
    throw ConfigError(where + ".omd.lattice_extent: must be >= 0");
  if (c.level == "omd" && c.omd.init_csv.empty())
    throw ConfigError(where + ".omd.init_csv: required for level omd");

  require_one_of(where + ".meanfield.mode", c.meanfield.mode,
                 {"convergence", "stability", "transport"});
  if (c.level == "meanfield") {
    const auto& m = c.meanfield;
    if (m.mode == "convergence") {
      if (m.n_list.empty()) throw ConfigError(where + ".meanfield.n_list: must be non-empty");
      for (std::size_t i = 0; i < m.n_list.size(); ++i) {
        if (m.n_list[i] < 2) throw ConfigError(where + ".meanfield.n_list: entries must be >= 2");
        if (i > 0 && m.n_list[i] <= m.n_list[i - 1])
          throw ConfigError(where + ".meanfield.n_list: must be strictly increasing");
      }
      if (!(m.t_eval > 0)) throw ConfigError(where + ".meanfield.t_eval: must be positive");
      check_time(m.t_eval, "meanfield.t_eval");
    }
    if (m.n_particles < 2)
      throw ConfigError(where + ".meanfield.n_particles: must be >= 2");
    if (m.checks < 1) throw ConfigError(where + ".meanfield.checks: must be >= 1");
    if (!(m.sigma_x > 0) || !(m.sigma_w > 0))
      throw ConfigError(where + ".meanfield.sigma_x/sigma_w: must be positive");
    if (m.perturbation < 0)
      throw ConfigError(where + ".meanfield.perturbation: must be >= 0");
  }

  require_one_of(where + ".dsmc.kernel", c.dsmc.kernel, {"maxwell", "hard_sphere"});
  require_one_of(where + ".dsmc.init", c.dsmc.init, {"gaussian", "csv"});
  if (!(c.dsmc.epsilon > 0)) throw ConfigError(where + ".dsmc.epsilon: must be positive");
  if (!(c.dsmc.number_density > 0))
    throw ConfigError(where + ".dsmc.number_density: must be positive");
  if (!(c.dsmc.theta0 > 0)) throw ConfigError(where + ".dsmc.theta0: must be positive");
  if (!c.dsmc.cov.empty() && c.dsmc.cov.size() != 9)
    throw ConfigError(where + ".dsmc.cov: need 9 row-major reals, got " +
                      std::to_string(c.dsmc.cov.size()));
  if (c.level == "dsmc") {
    if (c.dsmc.init == "gaussian" && c.dsmc.n_sim < 2)
      throw ConfigError(where + ".dsmc.n_sim: must be >= 2");
    if (c.dsmc.init == "csv" && c.dsmc.init_csv.empty())
      throw ConfigError(where + ".dsmc.init_csv: required when dsmc.init is 'csv'");
  }

  require_one_of(where + ".hydro.model", c.hydro.model, {"euler", "navier_stokes"});
  if (!(c.hydro.rho0 > 0) || !(c.hydro.theta0 > 0))
    throw ConfigError(where + ".hydro.rho0/theta0: must be positive");
  if (c.hydro.epsilon < 0) throw ConfigError(where + ".hydro.epsilon: must be >= 0");

  if (c.level == "compare") {
    const auto& b = c.compare;
    require_one_of(where + ".compare.metric", b.metric, {"sup_rel_dev", "w1"});
    if (!(b.tolerance > 0)) throw ConfigError(where + ".compare.tolerance: must be positive");
    if (!b.arm_a || !b.arm_b)
      throw ConfigError(where + ".compare: both arm_a and arm_b are required");
    if (b.metric == "w1") {
      auto measure_arm = [&](const ExperimentConfig& arm, const std::string& name) {
        const bool ok = (arm.level == "dsmc" && arm.dsmc.emit_final_ensemble) ||
                        (arm.level == "meanfield" && arm.meanfield.mode == "transport");
        if (!ok)
          throw ConfigError(where + ".compare." + name +
                            ": the w1 metric needs a dsmc arm with emit_final_ensemble or a "
                            "meanfield arm in transport mode");
      };
      measure_arm(*b.arm_a, "arm_a");
      measure_arm(*b.arm_b, "arm_b");
    }
    if (b.calibration) {
      if (b.calibration->level != "dsmc")
        throw ConfigError(where + ".compare.calibration: must be a dsmc run");
      const bool a_ns = b.arm_a->level == "hydro" && b.arm_a->hydro.model == "navier_stokes";
      const bool b_ns = b.arm_b->level == "hydro" && b.arm_b->hydro.model == "navier_stokes";
      if (a_ns == b_ns)
        throw ConfigError(where +
                          ".compare.calibration: exactly one arm must be hydro/navier_stokes");
    }
  }
}

ExperimentConfig parse_object(const json& j, const std::string& where, int depth) {
  ObjReader r(j, where);
  ExperimentConfig c;
  c.level = r.require<std::string>("level");
  const json* dj = r.child("deformation");
  if (!dj) throw ConfigError(where + ": missing required block 'deformation'");
  {
    ObjReader dr(*dj, where + ".deformation");
    auto a = dr.require<std::vector<double>>("A");
    if (a.size() != 9)
      throw ConfigError(where + ".deformation.A: need 9 row-major reals, got " +
                        std::to_string(a.size()));
    std::copy(a.begin(), a.end(), c.A.m.begin());
    dr.finish();
  }
  c.dt = r.get("dt", c.dt);
  c.horizon = r.get("horizon", c.horizon);
  c.stride = r.get("stride", c.stride);
  c.seeds = r.get("seeds", c.seeds);
  c.output_dir = r.get("output_dir", c.output_dir);
  if (const json* p = r.child("potential")) c.potential = parse_potential(*p, where + ".potential");
  if (const json* p = r.child("omd")) c.omd = parse_omd(*p, where + ".omd");
  if (const json* p = r.child("meanfield")) c.meanfield = parse_meanfield(*p, where + ".meanfield");
  if (const json* p = r.child("dsmc")) c.dsmc = parse_dsmc(*p, where + ".dsmc");
  if (const json* p = r.child("hydro")) c.hydro = parse_hydro(*p, where + ".hydro");
  if (const json* p = r.child("compare")) c.compare = parse_compare(*p, where + ".compare", depth);
  r.finish();
  validate(c, where, depth > 0);
  return c;
}

void apply_override(json& root, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set expects key=value, got '" + spec + "'");
  const std::string path = spec.substr(0, eq);
  const std::string text = spec.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
    if (value.is_object()) value = text;  // only scalars and arrays override
  } catch (const json::exception&) {
    value = text;
  }

  json* cur = &root;
  std::size_t pos = 0;
  while (true) {
    const auto dot = path.find('.', pos);
    const std::string key =
        dot == std::string::npos ? path.substr(pos) : path.substr(pos, dot - pos);
    if (key.empty()) throw ConfigError("--set path has an empty segment: '" + spec + "'");
    if (dot == std::string::npos) {
      (*cur)[key] = value;
      return;
    }
    json& next = (*cur)[key];
    if (next.is_null()) next = json::object();
    if (!next.is_object())
      throw ConfigError("--set path '" + path + "' descends into a non-object at '" + key + "'");
    cur = &next;
    pos = dot + 1;
  }
}

// ------------------------------------------------------- serialization

json config_json(const ExperimentConfig& c) {
  json j;
  j["level"] = c.level;
  j["deformation"] = {{"A", std::vector<double>(c.A.m.begin(), c.A.m.end())}};
  j["dt"] = c.dt;
  j["horizon"] = c.horizon;
  j["stride"] = c.stride;
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir;
  j["potential"] = {{"kind", c.potential.kind}, {"alpha", c.potential.alpha},
                    {"strength", c.potential.strength}, {"k", c.potential.k},
                    {"r0", c.potential.r0}, {"depth", c.potential.depth},
                    {"sigma", c.potential.sigma}, {"cutoff", c.potential.cutoff}};
  j["omd"] = {{"init_csv", c.omd.init_csv}, {"lattice_extent", c.omd.lattice_extent},
              {"scaling", c.omd.scaling}, {"epsilon", c.omd.epsilon}};
  j["meanfield"] = {{"mode", c.meanfield.mode}, {"n_list", c.meanfield.n_list},
                    {"t_eval", c.meanfield.t_eval}, {"n_particles", c.meanfield.n_particles},
                    {"perturbation", c.meanfield.perturbation}, {"checks", c.meanfield.checks},
                    {"sigma_x", c.meanfield.sigma_x}, {"sigma_w", c.meanfield.sigma_w},
                    {"init_csv", c.meanfield.init_csv}};
  j["dsmc"] = {{"kernel", c.dsmc.kernel}, {"rate_const", c.dsmc.rate_const},
               {"diameter", c.dsmc.diameter}, {"epsilon", c.dsmc.epsilon},
               {"n_sim", c.dsmc.n_sim}, {"number_density", c.dsmc.number_density},
               {"init", c.dsmc.init}, {"theta0", c.dsmc.theta0}, {"cov", c.dsmc.cov},
               {"init_csv", c.dsmc.init_csv},
               {"emit_final_ensemble", c.dsmc.emit_final_ensemble},
               {"self_similar", c.dsmc.self_similar}};
  j["hydro"] = {{"model", c.hydro.model}, {"rho0", c.hydro.rho0}, {"theta0", c.hydro.theta0},
                {"mu0", c.hydro.mu0}, {"omega_exp", c.hydro.omega_exp},
                {"epsilon", c.hydro.epsilon}};
  if (c.level == "compare") {
    json cmp = {{"metric", c.compare.metric}, {"field", c.compare.field},
                {"tolerance", c.compare.tolerance}};
    if (c.compare.arm_a) cmp["arm_a"] = config_json(*c.compare.arm_a);
    if (c.compare.arm_b) cmp["arm_b"] = config_json(*c.compare.arm_b);
    if (c.compare.calibration) cmp["calibration"] = config_json(*c.compare.calibration);
    j["compare"] = cmp;
  }
  return j;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a:") + buf;
}

std::string iso_utc_now() {
  const std::time_t tt = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ------------------------------------------------------------ run plumbing

struct ArtifactWriter {
  fs::path dir;
  std::vector<std::string> names;

  void table(const std::string& name, const Table& t) {
    save_table_csv((dir / name).string(), t);
    names.push_back(name);
  }
  void cloud(const std::string& name, const measure::EmpiricalMeasure& m) {
    measure::save_csv((dir / name).string(), m);
    names.push_back(name);
  }
  void json_file(const std::string& name, const json& j) {
    std::ofstream f(dir / name);
    if (!f) throw Error("cannot write " + (dir / name).string());
    f << j.dump(2) << "\n";
    names.push_back(name);
  }
};

PairPotential free_potential() { return PairPotential::harmonic(0.0, 0.0, 0.0); }

std::optional<PairPotential> make_potential(const PotentialBlock& b) {
  if (b.kind == "none") return std::nullopt;
  if (b.kind == "inverse_power") return PairPotential::inverse_power(b.alpha, b.strength, b.cutoff);
  if (b.kind == "harmonic") return PairPotential::harmonic(b.k, b.r0, b.cutoff);
  return PairPotential::truncated_lj(b.depth, b.sigma, b.cutoff);
}

omd::Scaling make_scaling(const OmdBlock& b) {
  if (b.scaling == "unit") return omd::Scaling::unit();
  if (b.scaling == "mean_field") return omd::Scaling::mean_field();
  return omd::Scaling::boltzmann(b.epsilon);
}

boltzmann::CollisionKernel make_kernel(const DsmcBlock& b) {
  if (b.kernel == "maxwell") return boltzmann::CollisionKernel::maxwell(b.rate_const, b.epsilon);
  return boltzmann::CollisionKernel::hard_sphere(b.diameter, b.epsilon);
}

boltzmann::VelocityEnsemble make_ensemble(const DsmcBlock& b, std::uint64_t seed) {
  if (b.init == "csv") {
    const auto m = measure::load_csv(b.init_csv);
    std::vector<Vec3> w;
    w.reserve(m.size());
    for (const auto& p : m.points) w.push_back(p.w);
    if (w.size() < 2) throw ConfigError("dsmc.init_csv: need at least 2 particles");
    return boltzmann::VelocityEnsemble(std::move(w), b.number_density, seed);
  }
  if (!b.cov.empty()) {
    Mat3 cov;
    std::copy(b.cov.begin(), b.cov.end(), cov.m.begin());
    return boltzmann::gaussian_ensemble_aniso(b.n_sim, cov, {}, b.number_density, seed);
  }
  return boltzmann::gaussian_ensemble(b.n_sim, b.theta0, {}, b.number_density, seed);
}

void run_omd(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const Deformation def(cfg.A);
  auto [x0, w0] = omd::load_initial_csv(cfg.omd.init_csv);
  omd::ParticleSystem sys(def, std::move(x0), std::move(w0));
  const PairPotential pot = make_potential(cfg.potential).value_or(free_potential());
  const omd::LatticeSpec lat{cfg.omd.lattice_extent};
  const omd::Scaling sc = make_scaling(cfg.omd);

  Table traj = omd::make_trajectory_table();
  omd::append_snapshot(traj, sys);
  const int steps = static_cast<int>(std::llround(cfg.horizon / cfg.dt));
  for (int k = 1; k <= steps; ++k) {
    omd::step(sys, pot, lat, cfg.dt, sc);
    if (k % cfg.stride == 0 || k == steps) omd::append_snapshot(traj, sys);
  }
  w.table("trajectory.csv", traj);
}

void run_meanfield(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const Deformation def(cfg.A);
  const auto& b = cfg.meanfield;
  meanfield::GaussianSpec spec;
  spec.sigma_x = b.sigma_x;
  spec.sigma_w = b.sigma_w;

  if (b.mode == "convergence") {
    const auto pot = make_potential(cfg.potential);
    const auto sum =
        meanfield::convergence_study(def, spec, b.n_list, cfg.seeds, b.t_eval, cfg.dt, pot);
    Table study;
    study.columns = {"N", "seed", "t", "W1"};
    for (const auto& row : sum.rows)
      study.append({static_cast<double>(row.N), static_cast<double>(row.seed), row.t, row.w1});
    w.table("study.csv", study);
    w.json_file("summary.json",
                {{"slope", sum.slope},
                 {"ci_low", sum.slope_ci_low},
                 {"ci_high", sum.slope_ci_high},
                 {"monotone_fraction", sum.monotone_fraction}});
    return;
  }

  if (b.mode == "stability") {
    const PairPotential pot = make_potential(cfg.potential).value_or(free_potential());
    Table tb;
    tb.columns = {"seed", "t", "w1", "envelope"};
    json runs = json::array();
    bool violation = false;
    for (std::uint64_t seed : cfg.seeds) {
      CounterRng rng(seed, 0x57ab);
      auto g0 = meanfield::sample_cloud(spec, b.n_particles, rng);
      auto h0 = g0;
      for (auto& p : h0.points) {
        p.x += rng.normal3(b.perturbation);
        p.w += rng.normal3(b.perturbation);
      }
      const auto rep =
          meanfield::stability_check(g0, h0, def, pot, cfg.dt, cfg.horizon, b.checks, seed);
      for (const auto& [t, w1v] : rep.w1_at)
        tb.append({static_cast<double>(seed), t, w1v,
                   rep.degenerate ? 0.0 : std::exp(2.0 * t * rep.L) * rep.w1_initial});
      runs.push_back({{"seed", seed},
                      {"w1_initial", rep.w1_initial},
                      {"L", rep.L},
                      {"max_ratio", rep.max_ratio},
                      {"max_w1", rep.max_w1},
                      {"degenerate", rep.degenerate}});
      if (!rep.degenerate && rep.max_ratio > 1.05) violation = true;
    }
    w.table("stability.csv", tb);
    w.json_file("stability.json",
                {{"runs", runs}, {"violation", violation}, {"ratio_tolerance", 0.05}});
    return;
  }

  // transport
  measure::EmpiricalMeasure m0;
  if (!b.init_csv.empty()) {
    m0 = measure::load_csv(b.init_csv);
  } else {
    CounterRng rng(cfg.seeds.front(), 0x7a9);
    m0 = meanfield::sample_cloud(spec, b.n_particles, rng);
  }
  w.cloud("initial_measure.csv", m0);
  w.cloud("final_measure.csv", meanfield::transport_pushforward(m0, def, cfg.horizon));
}

void run_dsmc(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const Deformation def(cfg.A);
  const auto& b = cfg.dsmc;
  for (std::uint64_t seed : cfg.seeds) {
    boltzmann::VelocityEnsemble ens = make_ensemble(b, seed);
    boltzmann::CollisionKernel kernel = make_kernel(b);
    const auto series = boltzmann::run(ens, def, kernel, cfg.dt, cfg.horizon, cfg.stride);
    const std::string tag = "seed" + std::to_string(seed);
    w.table("moments_" + tag + ".csv", boltzmann::to_table(series));
    w.json_file("moments_" + tag + ".json", {{"seed", seed},
                                             {"kernel", b.kernel},
                                             {"dt", cfg.dt},
                                             {"epsilon", b.epsilon},
                                             {"n_sim", ens.w.size()},
                                             {"number_density", b.number_density},
                                             {"horizon", cfg.horizon},
                                             {"stride", cfg.stride}});
    if (b.emit_final_ensemble) {
      measure::EmpiricalMeasure m;
      m.points.reserve(ens.w.size());
      for (const auto& v : ens.w) m.points.push_back({Vec3{}, v});
      m.weights.assign(ens.w.size(), 1.0 / static_cast<double>(ens.w.size()));
      w.cloud("ensemble_" + tag + ".csv", m);
    }
    if (b.self_similar) {
      const auto fit = boltzmann::self_similar_fit(series);
      w.json_file("selfsimilar_" + tag + ".json",
                  {{"beta_hat", fit.beta_hat},
                   {"beta_se", fit.beta_se},
                   {"p_hat", std::vector<double>(fit.p_hat.m.begin(), fit.p_hat.m.end())},
                   {"drift", fit.drift},
                   {"fit_start", fit.fit_start}});
    }
  }
}

void run_hydro(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const Deformation def(cfg.A);
  const auto& b = cfg.hydro;
  const hydro::HydroState st{b.rho0, b.theta0};
  hydro::HydroSeries series;
  if (b.model == "euler") {
    series = hydro::euler_solve(st, def, cfg.dt, cfg.horizon, cfg.stride);
  } else {
    const hydro::ViscosityLaw law{b.mu0, b.omega_exp, b.epsilon};
    series = hydro::navier_stokes_solve(st, def, law, cfg.dt, cfg.horizon, cfg.stride);
  }
  w.table("series.csv", hydro::to_table(series));

  if (series.t.size() >= 3) {
    // ideal-closure residual of the integrated series (discretization error)
    boltzmann::MomentsSeries ms;
    for (std::size_t k = 0; k < series.t.size(); ++k) {
      boltzmann::Moments m;
      m.rho = series.rho[k];
      m.theta = series.theta[k];
      m.e = 1.5 * m.theta;
      m.P = (m.rho * m.theta) * Mat3::identity();
      ms.t.push_back(series.t[k]);
      ms.m.push_back(m);
    }
    const auto res = hydro::conservation_residual(ms, def);
    Table rt;
    rt.columns = {"t", "r1", "r3"};
    for (std::size_t k = 0; k < res.t.size(); ++k) rt.append({res.t[k], res.r1[k], res.r3[k]});
    w.table("residual.csv", rt);
  }
}

// Mean over seeds of a field column from per-seed moment CSVs (identical
// deterministic time grids).
std::pair<std::vector<double>, std::vector<double>> dsmc_mean_series(
    const ExperimentConfig& arm, const std::string& field) {
  std::vector<double> t, acc;
  for (std::size_t s = 0; s < arm.seeds.size(); ++s) {
    const std::string path =
        (fs::path(arm.output_dir) / ("moments_seed" + std::to_string(arm.seeds[s]) + ".csv"))
            .string();
    const Table tb = load_table_csv(path);
    const auto ts = tb.column("t");
    const auto ys = tb.column(field);
    if (s == 0) {
      t = ts;
      acc.assign(ys.begin(), ys.end());
    } else {
      if (ts.size() != t.size())
        throw GridMismatch("per-seed moment series disagree in length");
      for (std::size_t k = 0; k < ys.size(); ++k) acc[k] += ys[k];
    }
  }
  for (double& v : acc) v /= static_cast<double>(arm.seeds.size());
  return {t, acc};
}

std::pair<std::vector<double>, std::vector<double>> arm_field_series(const ExperimentConfig& arm,
                                                                     const std::string& field) {
  if (arm.level == "hydro") {
    const Table tb = load_table_csv((fs::path(arm.output_dir) / "series.csv").string());
    return {tb.column("t"), tb.column(field)};
  }
  if (arm.level == "dsmc") return dsmc_mean_series(arm, field);
  throw ConfigError("compare metric sup_rel_dev supports hydro and dsmc arms, got level '" +
                    arm.level + "'");
}

measure::EmpiricalMeasure arm_final_measure(const ExperimentConfig& arm) {
  if (arm.level == "dsmc")
    return measure::load_csv(
        (fs::path(arm.output_dir) / ("ensemble_seed" + std::to_string(arm.seeds.front()) + ".csv"))
            .string());
  return measure::load_csv((fs::path(arm.output_dir) / "final_measure.csv").string());
}

boltzmann::MomentsSeries averaged_moments(const ExperimentConfig& arm) {
  std::vector<boltzmann::MomentsSeries> all;
  for (std::uint64_t seed : arm.seeds) {
    const std::string path =
        (fs::path(arm.output_dir) / ("moments_seed" + std::to_string(seed) + ".csv")).string();
    all.push_back(boltzmann::from_table(load_table_csv(path)));
  }
  boltzmann::MomentsSeries mean = all.front();
  for (std::size_t r = 1; r < all.size(); ++r) {
    if (all[r].t.size() != mean.t.size())
      throw GridMismatch("per-seed moment series disagree in length");
    for (std::size_t k = 0; k < mean.t.size(); ++k) {
      auto& m = mean.m[k];
      const auto& o = all[r].m[k];
      m.rho += o.rho;
      m.e += o.e;
      m.theta += o.theta;
      m.u += o.u;
      m.P += o.P;
      m.q += o.q;
    }
  }
  const double inv = 1.0 / static_cast<double>(all.size());
  for (auto& m : mean.m) {
    m.rho *= inv;
    m.e *= inv;
    m.theta *= inv;
    m.u *= inv;
    m.P *= inv;
    m.q *= inv;
  }
  return mean;
}

ComparisonReport run_compare(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const auto& b = cfg.compare;
  ExperimentConfig arm_a = *b.arm_a;
  ExperimentConfig arm_b = *b.arm_b;
  arm_a.output_dir = (w.dir / "arm_a").string();
  arm_b.output_dir = (w.dir / "arm_b").string();

  if (b.calibration) {
    ExperimentConfig cal = *b.calibration;
    cal.output_dir = (w.dir / "calibration").string();
    run(cal);
    ExperimentConfig& ns_arm =
        (arm_a.level == "hydro" && arm_a.hydro.model == "navier_stokes") ? arm_a : arm_b;
    const Deformation cal_def(cal.A);
    const auto fit = hydro::calibrate_viscosity(averaged_moments(cal), cal_def,
                                                ns_arm.hydro.omega_exp, ns_arm.hydro.epsilon);
    ns_arm.hydro.mu0 = fit.mu0;
    const auto shear = simple_shear_rate(cal.A);
    w.json_file("calibration.json", {{"mu0_hat", fit.mu0},
                                     {"ci_low", fit.mu0 - 1.96 * fit.mu0_se},
                                     {"ci_high", fit.mu0 + 1.96 * fit.mu0_se},
                                     {"omega_exp", ns_arm.hydro.omega_exp},
                                     {"K", shear ? *shear : 0.0},
                                     {"epsilon", ns_arm.hydro.epsilon}});
  }

  run(arm_a);
  run(arm_b);

  double deviation = 0;
  if (b.metric == "sup_rel_dev") {
    const auto [ta, ya] = arm_field_series(arm_a, b.field);
    const auto [tb, yb] = arm_field_series(arm_b, b.field);
    deviation = sup_rel_dev(ta, ya, tb, yb);
  } else {
    const auto ma = arm_final_measure(arm_a);
    const auto mb = arm_final_measure(arm_b);
    if (ma.size() == mb.size() && ma.size() <= 2048 && ma.uniform_weights() &&
        mb.uniform_weights()) {
      deviation = measure::w1_exact(ma, mb);
    } else {
      deviation = measure::w1_sliced(ma, mb, 128, cfg.seeds.front());
    }
  }

  ComparisonReport rep;
  rep.arm_a = arm_a.level;
  rep.arm_b = arm_b.level;
  rep.metric = b.metric;
  rep.field = b.metric == "sup_rel_dev" ? b.field : "";
  rep.max_deviation = deviation;
  rep.tolerance = b.tolerance;
  rep.pass = deviation <= b.tolerance;
  rep.config_hash = config_hash(cfg);
  rep.seeds = cfg.seeds;
  w.json_file("report.json", {{"arm_a", rep.arm_a},
                              {"arm_b", rep.arm_b},
                              {"metric", rep.metric},
                              {"field", rep.field},
                              {"max_deviation", rep.max_deviation},
                              {"tolerance", rep.tolerance},
                              {"pass", rep.pass},
                              {"config_hash", rep.config_hash},
                              {"seeds", rep.seeds}});
  return rep;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text,
                              const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);
  return parse_object(j, "config", 0);
}

ExperimentConfig load_config_file(const std::string& path,
                                  const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_config(text, overrides);
}

std::string canonical_config(const ExperimentConfig& cfg) { return config_json(cfg).dump(); }

std::string config_hash(const ExperimentConfig& cfg) { return fnv1a_hex(canonical_config(cfg)); }

double sup_rel_dev(const std::vector<double>& ta, const std::vector<double>& ya,
                   const std::vector<double>& tb, const std::vector<double>& yb) {
  if (ta.size() < 2 || tb.size() < 2 || ta.size() != ya.size() || tb.size() != yb.size())
    throw GridMismatch("each series needs >= 2 samples with matching value count");
  if (!std::is_sorted(ta.begin(), ta.end()) || !std::is_sorted(tb.begin(), tb.end()))
    throw GridMismatch("series time grids must be ascending");
  const double lo = std::max(ta.front(), tb.front());
  const double hi = std::min(ta.back(), tb.back());
  const double span_a = ta.back() - ta.front();
  const double span_b = tb.back() - tb.front();
  if (hi <= lo || hi - lo < 0.5 * span_a || hi - lo < 0.5 * span_b)
    throw GridMismatch("time grids overlap on [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "], less than half of a series span");

  auto lerp_at = [](const std::vector<double>& t, const std::vector<double>& y, double tq) {
    const auto it = std::lower_bound(t.begin(), t.end(), tq);
    if (it == t.begin()) return y.front();
    if (it == t.end()) return y.back();
    const std::size_t hi_idx = static_cast<std::size_t>(it - t.begin());
    const std::size_t lo_idx = hi_idx - 1;
    const double f = (tq - t[lo_idx]) / (t[hi_idx] - t[lo_idx]);
    return y[lo_idx] + f * (y[hi_idx] - y[lo_idx]);
  };

  std::vector<double> grid;
  for (double t : ta)
    if (t >= lo && t <= hi) grid.push_back(t);
  for (double t : tb)
    if (t >= lo && t <= hi) grid.push_back(t);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  double dev = 0;
  for (double t : grid) {
    const double a = lerp_at(ta, ya, t);
    const double bb = lerp_at(tb, yb, t);
    const double denom = std::max(std::abs(a), std::abs(bb));
    if (denom < 1e-300) continue;  // both vanish: no deviation
    dev = std::max(dev, std::abs(a - bb) / denom);
  }
  return dev;
}

RunResult run(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(cfg.output_dir);
  ArtifactWriter w{fs::path(cfg.output_dir), {}};
  w.json_file("config.json", config_json(cfg));

  RunResult result;
  if (cfg.level == "omd") {
    run_omd(cfg, w);
  } else if (cfg.level == "meanfield") {
    run_meanfield(cfg, w);
  } else if (cfg.level == "dsmc") {
    run_dsmc(cfg, w);
  } else if (cfg.level == "hydro") {
    run_hydro(cfg, w);
  } else {
    result.report = run_compare(cfg, w);
    result.pass = result.report->pass;
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::sort(w.names.begin(), w.names.end());
  json manifest = {{"config_hash", config_hash(cfg)}, {"level", cfg.level},
                   {"seeds", cfg.seeds},             {"version", homokin::version},
                   {"created", iso_utc_now()},       {"wall_time_s", wall},
                   {"artifacts", w.names}};
  {
    std::ofstream f(w.dir / "manifest.json");
    if (!f) throw Error("cannot write " + (w.dir / "manifest.json").string());
    f << manifest.dump(2) << "\n";
  }
  result.artifacts = w.names;
  result.artifacts.push_back("manifest.json");
  return result;
}

}  // namespace homokin::harness
