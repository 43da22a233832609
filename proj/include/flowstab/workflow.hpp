#pragma once

#include "flowstab/config.hpp"
#include "flowstab/control_basis.hpp"
#include "flowstab/field_ops.hpp"
#include "flowstab/flow_models.hpp"
#include "flowstab/riccati.hpp"
#include "flowstab/simulators.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace flowstab {

/// Everything assembled from a config. Members hold references into each
/// other, so the object is neither copyable nor movable.
struct Plant {
  RunConfig cfg;
  std::unique_ptr<FieldOperators> ops;
  ControlPatch patch;
  ControlBasis basis;
  StokesBasis stokes;
  std::unique_ptr<OseenOperator> oseen;
  ReducedModel model;
  ExtendedSystem sys;

  Plant() = default;
  Plant(const Plant&) = delete;
  Plant& operator=(const Plant&) = delete;

  FullOrderPlant full() const { return {*oseen, stokes, basis}; }
  InitialState initial_state(double amplitude, unsigned seed) const;
};

ReferenceTrajectory make_reference(const RunConfig& cfg, const FieldOperators& ops);

/// Builds grid, bases, reference and reduced model. A cached Stokes basis is
/// used when given.
std::unique_ptr<Plant> build_plant(const RunConfig& cfg, const StokesBasis* cached_stokes = nullptr);

struct Options {
  RunConfig cfg;
  std::filesystem::path out;
  bool deterministic = false;
};

/// --out if given, else $FLOWSTAB_OUT, else ./flowstab_out.
std::filesystem::path resolve_out_dir(const std::string& flag);

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool upper = true;  ///< pass if value <= threshold, else value >= threshold
  bool pass = false;
};

/// Runs a named invariant suite in memory: basis, operators, riccati,
/// closedloop, appendix or all.
std::vector<Check> run_suite(const RunConfig& cfg, const std::string& suite);

int cmd_synthesize(const Options& opt);
int cmd_simulate(const Options& opt, const std::string& mode);
int cmd_verify(const Options& opt, const std::string& suite);
int cmd_report(const Options& opt);

}  // namespace flowstab
