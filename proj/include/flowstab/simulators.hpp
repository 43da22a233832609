#pragma once

#include "flowstab/control_basis.hpp"
#include "flowstab/field_ops.hpp"
#include "flowstab/flow_models.hpp"
#include "flowstab/riccati.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace flowstab {

/// Rate of the control coordinates, kappa' = rate(t, x, kappa).
using RateFn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, const Eigen::VectorXd&)>;

RateFn gain_rate(const RiccatiGain& gain);

/// Time series of one simulation. Every step is recorded; full-order field
/// snapshots are kept at `stride`, or at every step when the history is kept.
struct SimRun {
  std::string kind;
  std::string status = "ok";
  std::string kappa_rule;  ///< "euler" or "rk4": how kappa was advanced
  double dt = 0.0;
  double lambda = 0.0;
  int stride = 1;

  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> kappa;
  std::vector<Eigen::VectorXd> kdot;
  std::vector<double> norm_pi;
  std::vector<double> norm_h1;
  std::vector<double> norm_kappa;
  std::vector<double> norm_kdot;
  std::vector<double> cost;        ///< accumulated weighted cost from t_0
  std::vector<double> trace_flux;  ///< boundary integral of the normal control trace
  double max_trace_defect = 0.0;   ///< max |state trace - Xi kappa|

  std::vector<int> snapshot_steps;
  std::vector<Eigen::VectorXd> snapshots;  ///< interior face values
  std::vector<Eigen::VectorXd> history;    ///< interior face values at every step, if kept

  int steps() const { return static_cast<int>(t.size()); }
  /// Combined norm sqrt(|x|^2 + |kappa|^2) per step.
  std::vector<double> extended_norm() const;
};

/// Least-squares slope of -log(y) on [t0, t1].
double fit_decay_rate(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1);

/// RK4 on x' = A_xx x + A_xk kappa, kappa' = rate, with the plant taken from `sys`.
SimRun simulate_reduced(const ExtendedSystem& sys, const RateFn& rate, const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& kappa0, double T, double dt,
                        const Eigen::VectorXd* grad_weights = nullptr);

SimRun simulate_reduced_closedloop(const ExtendedSystem& sys, const RiccatiGain& gain,
                                   const Eigen::VectorXd& x0, const Eigen::VectorXd& kappa0, double T,
                                   double dt, const Eigen::VectorXd* grad_weights = nullptr);

/// Everything the full-order stepping needs. References must outlive the plant.
struct FullOrderPlant {
  const OseenOperator& oseen;
  const StokesBasis& stokes;
  const ControlBasis& basis;
};

struct FullSimOptions {
  double dt = 2.5e-3;
  double T = 10.0;
  int stride = 20;
  bool nonlinear = false;
  bool keep_history = false;
  double divergence_limit = 1e6;
  /// Picard: forcing -N(zbar) from this run's history replaces the nonlinearity.
  const SimRun* frozen = nullptr;
};

/// Crank-Nicolson diffusion, explicit convection, projection; the boundary
/// trace is Xi kappa at every step and kappa is advanced by explicit Euler.
SimRun simulate_full(const FullOrderPlant& plant, const RateFn& rate, const FlowField& v0,
                     const Eigen::VectorXd& kappa0, const FullSimOptions& opts, double lambda);

SimRun simulate_full_linear(const FullOrderPlant& plant, const RiccatiGain& gain, const FlowField& v0,
                            const Eigen::VectorXd& kappa0, FullSimOptions opts);
SimRun simulate_full_nonlinear(const FullOrderPlant& plant, const RiccatiGain& gain, const FlowField& v0,
                               const Eigen::VectorXd& kappa0, FullSimOptions opts);
/// One application of the fixed-point map: linear closed loop with frozen
/// forcing -N(zbar). zbar must carry its full history.
SimRun picard_map(const SimRun& zbar, const FullOrderPlant& plant, const RiccatiGain& gain,
                  const FlowField& v0, const Eigen::VectorXd& kappa0, FullSimOptions opts);

/// sup over unit windows of sqrt(int e^{lambda s} f(s) ds), f sampled per step.
double z_norm_from_series(const std::vector<double>& t, const std::vector<double>& f_sq, double lambda);
/// Discrete Z-lambda norm of a full-order run (H1 per step, from the history).
double z_norm(const SimRun& run, const ControlBasis& basis, const FieldOperators& ops);
/// Discrete Z-lambda distance between two full-order runs on the same grid.
double z_distance(const SimRun& a, const SimRun& b, const ControlBasis& basis, const FieldOperators& ops);

struct IntegralFeedbackCheck {
  double max_mismatch = 0.0;  ///< max_t |Xi kappa(t) - (Xi kappa(0) + int Xi kappa')|
  double max_flux = 0.0;      ///< max_t |int_Gamma zeta . n|
  std::vector<Eigen::VectorXd> zeta;
};

/// Boundary control series zeta(t) = Xi kappa(t), cross-checked against the
/// initial trace plus the time integral of Xi kappa'.
IntegralFeedbackCheck export_integral_feedback(const SimRun& run, const ControlBasis& basis,
                                               bool keep_series = false);

/// Cost-to-go e^{lambda t}(R(t) w, w) along a reduced run.
std::vector<double> lyapunov_psi(const RiccatiGain& gain, const SimRun& run);
/// Tail integral of |w|^2 over the stored horizon along a reduced run.
std::vector<double> lyapunov_phi(const SimRun& run);

struct InitialState {
  FlowField v0;
  Eigen::VectorXd x0;
  Eigen::VectorXd kappa0;
};

/// Random combination of the first `modes` Stokes eigenfields plus a Stokes
/// lifting of Xi kappa0, scaled to the requested H1 norm.
InitialState make_initial_state(const StokesBasis& stokes, const ControlBasis& basis, const FieldOperators& ops,
                                int modes, double kappa_scale, unsigned seed, double h1_amplitude);

/// Scale an initial state by s (fields, coordinates and control together).
InitialState scaled(const InitialState& s, double factor);

}  // namespace flowstab
