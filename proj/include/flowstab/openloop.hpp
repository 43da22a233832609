#pragma once

#include "flowstab/control_basis.hpp"
#include "flowstab/flow_models.hpp"
#include "flowstab/simulators.hpp"

#include <Eigen/Dense>

#include <vector>

namespace flowstab {

/// Time shapes on a unit interval (local time tau in [0,1]).
struct TimeShaping {
  double delta = 0.1;
  int M_t = 4;

  /// Support of phi is [inner_delta, 1 - inner_delta], strictly inside the collars.
  double inner_delta() const { return delta + (1.0 - 2.0 * delta) / 8.0; }
  /// 1 on [0, delta], C^1 cubic transition, 0 on [1 - delta, 1].
  double phi_flat(double tau) const;
  double phi_flat_d(double tau) const;
  /// sin^2 bump on [inner_delta, 1 - inner_delta].
  double phi(double tau) const;
  double phi_d(double tau) const;
  /// sin^2 bump on [delta, 1 - delta].
  double phi_tilde(double tau) const;
  /// min of phi_tilde over the support of phi.
  double phi_tilde_floor() const;

  static double sigma(int m, double tau);
  static double sigma_d(int m, double tau);
};

/// Reduced plant with prescribed control coordinates kappa(t):
/// x' = A_xx(t) x + A_xk(t) kappa(t).
using KappaFn = std::function<Eigen::VectorXd(double)>;
Eigen::VectorXd propagate_reduced(const ReducedModel& model, const Eigen::VectorXd& x0, const KappaFn& kappa,
                                  double t0, double t1, double dt, SimRun* record = nullptr);

struct FlattenResult {
  Eigen::VectorXd kappa_start;  ///< kappa_phi(0) in kernel-complement coordinates
  Eigen::VectorXd z_full;       ///< kappa_phi(0) in full coordinates
  Eigen::VectorXd x_end;
  double terminal_trace_sup = 0.0;
};

/// First interval: kappa_phi(t) = phi_flat(t) (z^{v0.n} + kappa_tau), which removes
/// the boundary trace by t = 1.
FlattenResult flatten_initial(const ReducedModel& model, const ControlBasis& basis, const FlowField& v0,
                              const Eigen::VectorXd& x0, const Eigen::VectorXd& kappa_tau,
                              const TimeShaping& shaping, double dt);

struct DriveResult {
  Eigen::MatrixXd coeff;       ///< kernel-complement coordinates x M_t
  Eigen::MatrixXd coeff_full;  ///< 2M x M_t
  Eigen::VectorXd x_end;
  int rank = 0;
  double post_residual = 0.0;  ///< |Pi_N x(n+1)| / |x(n)|
};

/// Cache of the input-to-final-state map for autonomous models.
struct ResponseCache {
  Eigen::MatrixXd response;  ///< N_gal x (n_perp * M_t), column c*M_t + (m-1)
  bool valid = false;
};

DriveResult drive_PiN_to_zero(const ReducedModel& model, const ControlBasis& basis, const Eigen::VectorXd& x_n,
                              double t_n, int N, const TimeShaping& shaping, double dt,
                              ResponseCache* cache = nullptr);

struct IntervalDiagnostics {
  int n = 0;
  double rho = 0.0;
  double coeff_norm = 0.0;
  int rank = 0;
};

struct OpenLoopResult {
  int N = 0;
  std::vector<IntervalDiagnostics> intervals;
  SimRun run;
  double max_rho = 0.0;          ///< over intervals n >= 1
  double fitted_rate = 0.0;      ///< decay rate of |x| at integer times
  double control_energy = 0.0;   ///< sum_n e^{lambda_hat n} |kappa|^2_{H1(n,n+1)}
  double terminal_trace_sup = 0.0;
};

OpenLoopResult concatenate(const ReducedModel& model, const ControlBasis& basis, const FlowField& v0,
                           const Eigen::VectorXd& x0, const Eigen::VectorXd& kappa_tau, int intervals, int N,
                           const TimeShaping& shaping, double dt, double lambda_hat);

struct SweepRow {
  int N = 0;
  double max_rho = 0.0;
  bool rank_ok = true;
};

struct OpenLoopSweep {
  std::vector<SweepRow> rows;
  int chosen_N = 0;  ///< smallest N with max_rho <= target, 0 if none
  OpenLoopResult chosen;
};

/// Runs N = 1..N_gal and picks the smallest N whose per-step ratio is at most
/// `target`. Throws NumericalError with the table if none qualifies.
OpenLoopSweep sweep_openloop(const ReducedModel& model, const ControlBasis& basis, const FlowField& v0,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& kappa_tau, int intervals,
                             const TimeShaping& shaping, double dt, double lambda_hat, double target);

}  // namespace flowstab
