#include "flowstab/riccati.hpp"

#include "flowstab/errors.hpp"
#include "flowstab/log.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

namespace flowstab {

Eigen::MatrixXd ExtendedSystem::dynamics(double t) const {
  return -(A.at(t) + 0.5 * lambda * Eigen::MatrixXd::Identity(n(), n()));
}

ExtendedSystem build_extended(const ReducedModel& model, double lambda) {
  if (!(lambda > 0.0)) throw InputError("lambda must be positive");
  ExtendedSystem sys;
  sys.lambda = lambda;
  sys.n_x = model.N_gal;
  sys.n_k = model.n_perp;
  const int n = sys.n();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  for (size_t k = 0; k < model.A_xx.values.size(); ++k) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    a.topLeftCorner(sys.n_x, sys.n_x) = -model.A_xx.values[k];
    a.topRightCorner(sys.n_x, sys.n_k) = -model.A_xk.values[k];
    a -= 0.5 * lambda * I;
    sys.A.times.push_back(model.A_xx.times[k]);
    sys.A.values.push_back(a);
  }
  sys.B = Eigen::MatrixXd::Zero(n, n);
  sys.B.bottomRightCorner(sys.n_k, sys.n_k).setIdentity();
  sys.C = I;
  return sys;
}

ExtendedSystem scalar_system(double a, double lambda) {
  if (!(lambda > 0.0)) throw InputError("lambda must be positive");
  ExtendedSystem sys;
  sys.lambda = lambda;
  sys.n_x = 0;
  sys.n_k = 1;
  sys.A.times = {0.0};
  sys.A.values = {Eigen::MatrixXd::Constant(1, 1, -a - 0.5 * lambda)};
  sys.B = Eigen::MatrixXd::Identity(1, 1);
  sys.C = Eigen::MatrixXd::Identity(1, 1);
  return sys;
}

double scalar_riccati_root(double a, double lambda) {
  const double s = a + 0.5 * lambda;
  return s + std::sqrt(s * s + 1.0);
}

Eigen::MatrixXd RiccatiGain::at(double t, bool* clamped) const {
  if (R.empty()) throw InputError("empty gain table");
  const bool outside = t < times.front() - 1e-12 || t > times.back() + 1e-12;
  if (clamped) *clamped = outside;
  if (R.size() == 1 || t <= times.front()) return R.front();
  if (t >= times.back()) return R.back();
  const double dt = times[1] - times[0];
  size_t k = static_cast<size_t>(std::floor((t - times.front()) / dt));
  k = std::min(k, times.size() - 2);
  while (k > 0 && times[k] > t) --k;
  while (k + 2 < times.size() && times[k + 1] < t) ++k;
  const double s = (t - times[k]) / (times[k + 1] - times[k]);
  return (1.0 - s) * R[k] + s * R[k + 1];
}

Eigen::MatrixXd RiccatiGain::gain_matrix(double t) const {
  const Eigen::MatrixXd r = at(t);
  return -r.bottomRows(n_k);
}

double RiccatiGain::max_gain_norm() const {
  double m = 0.0;
  for (const auto& r : R) m = std::max(m, r.bottomRows(n_k).norm());
  return m;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const int n = static_cast<int>(A.rows());
  Eigen::ComplexSchur<Eigen::MatrixXd> schur(A);
  if (schur.info() != Eigen::Success) throw NumericalError("Schur decomposition failed");
  const Eigen::MatrixXcd& U = schur.matrixU();
  const Eigen::MatrixXcd& T = schur.matrixT();
  const Eigen::MatrixXcd Qt = U.adjoint() * Q.cast<std::complex<double>>() * U;
  const Eigen::MatrixXcd Th = T.adjoint();
  Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXcd rhs = Qt.col(j);
    for (int k = 0; k < j; ++k) rhs -= X.col(k) * T(k, j);
    Eigen::MatrixXcd Mj = Th;
    Mj.diagonal().array() += T(j, j);
    for (int i = 0; i < n; ++i) {
      std::complex<double> s = rhs[i];
      for (int k = 0; k < i; ++k) s -= Mj(i, k) * X(k, j);
      if (std::abs(Mj(i, i)) < 1e-300) throw NumericalError("singular Lyapunov equation");
      X(i, j) = s / Mj(i, i);
    }
  }
  Eigen::MatrixXd Xr = (U * X * U.adjoint()).real();
  return 0.5 * (Xr + Xr.transpose());
}

namespace {

Eigen::MatrixXd riccati_rhs(const Eigen::MatrixXd& S, const Eigen::MatrixXd& A, const Eigen::MatrixXd& BB,
                            const Eigen::MatrixXd& C) {
  return S * A + A.transpose() * S + S * BB * S - C;
}

}  // namespace

RiccatiGain solve_dre(const ExtendedSystem& sys, double T, double dt, const Eigen::MatrixXd& terminal,
                      DreStats* stats) {
  const int n = sys.n();
  if (T < 0.0) throw InputError("horizon must be nonnegative");
  if (terminal.rows() != n || terminal.cols() != n) throw InputError("terminal matrix has wrong size");
  RiccatiGain gain;
  gain.n_x = sys.n_x;
  gain.n_k = sys.n_k;
  gain.lambda = sys.lambda;
  DreStats st;

  const int steps = T > 0.0 ? std::max(1, static_cast<int>(std::llround(T / dt))) : 0;
  if (T > 0.0 && !(dt > 0.0)) throw InputError("dt_R must be positive");
  const double h = steps > 0 ? T / steps : 0.0;
  gain.times.resize(steps + 1);
  gain.R.resize(steps + 1);
  for (int k = 0; k <= steps; ++k) gain.times[k] = k * h;
  gain.R[steps] = 0.5 * (terminal + terminal.transpose());

  const Eigen::MatrixXd BB = sys.B * sys.B.transpose();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const bool autonomous = sys.autonomous();
  const Eigen::MatrixXd A_const = sys.A.at(0.0);

  for (int k = steps - 1; k >= 0; --k) {
    const Eigen::MatrixXd& Rn = gain.R[k + 1];
    const Eigen::MatrixXd A = autonomous ? A_const : sys.A.at(0.5 * (gain.times[k] + gain.times[k + 1]));
    Eigen::MatrixXd S = Rn;
    int it = 0;
    for (; it < 50; ++it) {
      const Eigen::MatrixXd G = 2.0 * (S - Rn) + h * riccati_rhs(S, A, BB, sys.C);
      const Eigen::MatrixXd Ahat = I + h * (A + BB * S);
      const Eigen::MatrixXd delta = solve_lyapunov(Ahat, -G);
      S += delta;
      S = 0.5 * (S + S.transpose());
      if (!S.allFinite()) throw NumericalError("non-stabilizable configuration or sign error");
      if (delta.norm() <= 1e-14 * (1.0 + S.norm())) {
        ++it;
        break;
      }
    }
    st.max_newton_iterations = std::max(st.max_newton_iterations, it);
    Eigen::MatrixXd Rk = 2.0 * S - Rn;
    Rk = 0.5 * (Rk + Rk.transpose());
    const double nrm = Rk.norm();
    if (!(nrm <= 1e12)) throw NumericalError("non-stabilizable configuration or sign error");
    gain.R[k] = Rk;
  }

  for (const auto& r : gain.R) {
    const double nrm = r.norm();
    st.max_norm = std::max(st.max_norm, nrm);
    st.max_asymmetry = std::max(st.max_asymmetry, (r - r.transpose()).norm() / (1.0 + nrm));
  }
  st.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& r : gain.R) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r, Eigen::EigenvaluesOnly);
    st.min_eigenvalue = std::min(st.min_eigenvalue, es.eigenvalues().minCoeff());
  }
  if (stats) *stats = st;
  return gain;
}

RiccatiGain solve_dre(const ExtendedSystem& sys, double T, double dt, DreStats* stats) {
  return solve_dre(sys, T, dt, Eigen::MatrixXd::Zero(sys.n(), sys.n()), stats);
}

Eigen::VectorXd feedback(const RiccatiGain& gain, double t, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& kappa) {
  if (x.size() != gain.n_x || kappa.size() != gain.n_k) throw InputError("feedback: dimension mismatch");
  bool clamped = false;
  const Eigen::MatrixXd r = gain.at(t, &clamped);
  if (clamped) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) log_warn("feedback evaluated outside the gain horizon; clamping");
  }
  return -r.block(gain.n_x, 0, gain.n_k, gain.n_x) * x - r.block(gain.n_x, gain.n_x, gain.n_k, gain.n_k) * kappa;
}

double value_function(const RiccatiGain& gain, double t, const Eigen::VectorXd& w) {
  if (w.size() != gain.n()) throw InputError("value function: dimension mismatch");
  return std::exp(gain.lambda * t) * w.dot(gain.at(t) * w);
}

double riccati_residual(const ExtendedSystem& sys, const RiccatiGain& gain) {
  const Eigen::MatrixXd BB = sys.B * sys.B.transpose();
  double worst = 0.0;
  for (size_t k = 0; k + 1 < gain.R.size(); ++k) {
    const double h = gain.times[k + 1] - gain.times[k];
    const double tm = 0.5 * (gain.times[k] + gain.times[k + 1]);
    const Eigen::MatrixXd Rm = 0.5 * (gain.R[k] + gain.R[k + 1]);
    const Eigen::MatrixXd Rdot = (gain.R[k + 1] - gain.R[k]) / h;
    const Eigen::MatrixXd res = Rdot - riccati_rhs(Rm, sys.A.at(tm), BB, sys.C);
    worst = std::max(worst, res.norm() / (1.0 + Rm.norm()));
  }
  return worst;
}

double horizon_sensitivity(const ExtendedSystem& sys, double T, double dt) {
  const RiccatiGain g1 = solve_dre(sys, T, dt);
  const RiccatiGain g2 = solve_dre(sys, 2.0 * T, dt);
  const double n2 = g2.R.front().norm();
  return (g1.R.front() - g2.R.front()).norm() / (n2 > 0.0 ? n2 : 1.0);
}

}  // namespace flowstab
