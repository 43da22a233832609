#pragma once

#include "flowstab/geometry.hpp"

#include <string>

namespace flowstab {

struct ReferenceParams {
  std::string kind = "zero";  ///< zero | periodic | csv
  double a0 = 0.5;
  double omega = 1.0;
  std::string path;  ///< csv table, resolved relative to the config file
};

struct BasesParams {
  int M = 4;
  int N_gal = 24;
  int M_t = 4;
  double svd_tol = 1e-10;
};

struct SynthesisParams {
  double T = 12.0;
  double dt_R = 0.012;
  double dt_A = 0.05;
  double tol_res = 1e-8;
};

struct SimulationParams {
  double dt = 2.5e-3;
  double dt_reduced = 1e-3;
  double T_sim = 10.0;
  int stride = 20;
  int init_modes = 4;
  double amplitude = 1e-3;  ///< H1-discrete norm of the initial perturbation
  double epsilon = 1e-2;    ///< advisory smallness bound for nonlinear runs
  double kappa_scale = 0.5;
  unsigned seed = 7;
  double sweep_start = 1e-3;
  double sweep_factor = 2.0;
  int sweep_count = 10;
  double degrade_tol = 0.15;
  int picard_max_iter = 30;
  double picard_tol = 1e-8;
};

struct OpenLoopParams {
  double delta = 0.1;
  int intervals = 8;
  double dt = 1e-3;
};

struct RunConfig {
  DomainParams domain;
  PatchParams patch;
  double nu = 0.025;
  double lambda = 1.0;
  BasesParams bases;
  ReferenceParams reference;
  SynthesisParams synthesis;
  SimulationParams simulation;
  OpenLoopParams openloop;

  /// Hash of everything the cached bases and gain depend on.
  std::string synthesis_hash() const;
  /// Hash of the whole configuration.
  std::string full_hash() const;
  /// Canonical key=value listing, one line per key, sorted by section.
  std::string canonical() const;
};

/// Parses INI text. `origin` is used in messages ("file:line: ...").
/// Unknown sections or keys, malformed values and out-of-range parameters
/// raise InputError.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);
void validate(const RunConfig& cfg);

}  // namespace flowstab
