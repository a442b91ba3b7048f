#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "homokin/linalg.hpp"

namespace homokin::harness {

// One structured config per run. Every block carries defaults; which blocks
// are consulted depends on `level`. Unknown keys anywhere in the file are
// rejected so that typos fail loudly instead of silently running defaults.

struct PotentialBlock {
  std::string kind = "none";  // none|inverse_power|harmonic|truncated_lj
  double alpha = 2.0;
  double strength = 1.0;
  double k = 1.0;
  double r0 = 1.0;
  double depth = 1.0;
  double sigma = 1.0;
  double cutoff = 0.0;
};

struct OmdBlock {
  std::string init_csv;       // columns x1,x2,x3,w1,w2,w3
  int lattice_extent = 0;
  std::string scaling = "unit";  // unit|mean_field|boltzmann
  double epsilon = 1.0;          // boltzmann scaling parameter
};

struct MeanfieldBlock {
  std::string mode = "convergence";  // convergence|stability|transport
  std::vector<int> n_list = {64, 256, 1024};
  double t_eval = 0.5;      // convergence: comparison time
  int n_particles = 256;    // stability/transport cloud size
  double perturbation = 0.01;  // stability: initial W1-scale offset
  int checks = 8;           // stability: number of sampled times
  double sigma_x = 1.0;     // gaussian cloud widths
  double sigma_w = 1.0;
  std::string init_csv;     // transport: explicit initial measure (optional)
};

struct DsmcBlock {
  std::string kernel = "maxwell";  // maxwell|hard_sphere
  double rate_const = 1.0;         // maxwell collision rate constant
  double diameter = 1.0;           // hard-sphere diameter
  double epsilon = 1.0;            // Knudsen parameter
  int n_sim = 10000;
  double number_density = 1.0;
  std::string init = "gaussian";  // gaussian|csv
  double theta0 = 1.0;            // isotropic gaussian temperature
  std::vector<double> cov;        // empty, or 9 row-major reals (anisotropic)
  std::string init_csv;           // measure CSV; its w columns seed the run
  bool emit_final_ensemble = false;
  bool self_similar = false;      // also emit a tail-fit JSON per seed
};

struct HydroBlock {
  std::string model = "euler";  // euler|navier_stokes
  double rho0 = 1.0;
  double theta0 = 1.0;
  double mu0 = 1.0;       // viscosity prefactor (navier_stokes)
  double omega_exp = 1.0; // mu(theta) = mu0 theta^omega_exp
  double epsilon = 0.0;   // Knudsen prefactor of the heating term
};

struct ExperimentConfig;

struct CompareBlock {
  std::string metric = "sup_rel_dev";  // sup_rel_dev|w1
  std::string field = "theta";         // series column for sup_rel_dev
  double tolerance = 0.1;
  std::shared_ptr<ExperimentConfig> arm_a;
  std::shared_ptr<ExperimentConfig> arm_b;
  // Optional extra run whose moment series calibrates mu0 for the
  // navier_stokes arm before that arm is integrated.
  std::shared_ptr<ExperimentConfig> calibration;
};

struct ExperimentConfig {
  std::string level = "hydro";  // omd|meanfield|dsmc|hydro|compare
  Mat3 A{};                     // config key deformation.A, nine row-major reals
  double dt = 1e-3;
  double horizon = 1.0;
  int stride = 1;
  std::vector<std::uint64_t> seeds = {1};
  std::string output_dir = ".";

  PotentialBlock potential;
  OmdBlock omd;
  MeanfieldBlock meanfield;
  DsmcBlock dsmc;
  HydroBlock hydro;
  CompareBlock compare;
};

// Parses JSON text into a validated config. `overrides` are dotted-path
// scalar assignments ("dsmc.n_sim=20000", "compare.arm_b.hydro.mu0=3.2")
// applied to the document before parsing. Throws ConfigError on unknown keys,
// bad enums, non-positive steps, or horizon at/after the deformation's
// singular time.
ExperimentConfig parse_config(const std::string& json_text,
                              const std::vector<std::string>& overrides = {});
ExperimentConfig load_config_file(const std::string& path,
                                  const std::vector<std::string>& overrides = {});

// Canonical serialization: sorted keys, round-trip-exact numbers. Parsing the
// result reproduces an equivalent config, and its FNV-1a hash names the run.
std::string canonical_config(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

struct ComparisonReport {
  std::string arm_a;   // level of the first arm
  std::string arm_b;   // level of the second arm
  std::string metric;
  std::string field;
  double max_deviation = 0;
  double tolerance = 0;
  bool pass = false;   // max_deviation <= tolerance
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
};

// Largest pointwise relative deviation |a-b| / max(|a|,|b|) after linear
// interpolation of both series onto the union of their sample times inside
// the overlap window. Throws GridMismatch when the overlap spans less than
// half of either grid.
double sup_rel_dev(const std::vector<double>& ta, const std::vector<double>& ya,
                   const std::vector<double>& tb, const std::vector<double>& yb);

struct RunResult {
  bool pass = true;  // false only for a failed comparison
  std::vector<std::string> artifacts;  // file names relative to output_dir
  std::optional<ComparisonReport> report;
};

// Dispatches on cfg.level and writes the level's artifacts plus config.json
// and manifest.json into cfg.output_dir (created if needed). Identical
// config + seeds produce byte-identical CSV artifacts; only the manifest's
// created/wall_time_s fields vary between reruns.
RunResult run(const ExperimentConfig& cfg);

}  // namespace homokin::harness
