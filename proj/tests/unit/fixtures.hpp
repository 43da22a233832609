#pragma once

#include "flowstab/config.hpp"
#include "flowstab/workflow.hpp"

namespace fixtures {

// Coarse version of the default setup; fast enough for unit tests.
inline flowstab::RunConfig small_config() {
  flowstab::RunConfig cfg;
  cfg.domain.nx = cfg.domain.ny = 16;
  cfg.bases.N_gal = 8;
  cfg.synthesis.T = 6.0;
  cfg.synthesis.dt_R = 0.02;
  cfg.simulation.T_sim = 3.0;
  cfg.simulation.dt = 5e-3;
  cfg.simulation.dt_reduced = 5e-3;
  cfg.simulation.sweep_count = 2;
  cfg.openloop.intervals = 3;
  cfg.openloop.dt = 5e-3;
  return cfg;
}

inline const flowstab::Plant& small_plant() {
  static const auto p = flowstab::build_plant(small_config());
  return *p;
}

inline const flowstab::RiccatiGain& small_gain() {
  static const flowstab::RiccatiGain g = flowstab::solve_dre(small_plant().sys, 6.0, 0.02);
  return g;
}

}  // namespace fixtures
