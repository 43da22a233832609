#include "flowstab/openloop.hpp"

#include "flowstab/errors.hpp"
#include "flowstab/log.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace flowstab {

namespace {

constexpr double kPi = std::numbers::pi;

double bump(double tau, double a, double b) {
  if (tau <= a || tau >= b) return 0.0;
  const double s = std::sin(kPi * (tau - a) / (b - a));
  return s * s;
}

double bump_d(double tau, double a, double b) {
  if (tau <= a || tau >= b) return 0.0;
  return kPi / (b - a) * std::sin(2.0 * kPi * (tau - a) / (b - a));
}

}  // namespace

double TimeShaping::phi_flat(double tau) const {
  if (tau <= delta) return 1.0;
  if (tau >= 1.0 - delta) return 0.0;
  const double s = (tau - delta) / (1.0 - 2.0 * delta);
  return 1.0 - (3.0 * s * s - 2.0 * s * s * s);
}

double TimeShaping::phi_flat_d(double tau) const {
  if (tau <= delta || tau >= 1.0 - delta) return 0.0;
  const double s = (tau - delta) / (1.0 - 2.0 * delta);
  return -(6.0 * s - 6.0 * s * s) / (1.0 - 2.0 * delta);
}

double TimeShaping::phi(double tau) const { return bump(tau, inner_delta(), 1.0 - inner_delta()); }

double TimeShaping::phi_d(double tau) const { return bump_d(tau, inner_delta(), 1.0 - inner_delta()); }

double TimeShaping::phi_tilde(double tau) const { return bump(tau, delta, 1.0 - delta); }

double TimeShaping::phi_tilde_floor() const { return phi_tilde(inner_delta()); }

double TimeShaping::sigma(int m, double tau) { return std::sqrt(2.0) * std::sin(m * kPi * tau); }

double TimeShaping::sigma_d(int m, double tau) { return std::sqrt(2.0) * m * kPi * std::cos(m * kPi * tau); }

Eigen::VectorXd propagate_reduced(const ReducedModel& model, const Eigen::VectorXd& x0, const KappaFn& kappa,
                                  double t0, double t1, double dt, SimRun* record) {
  const bool autonomous = model.A_xx.is_constant();
  const Eigen::MatrixXd Axx0 = model.A_xx.at(t0), Axk0 = model.A_xk.at(t0);
  auto f = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (autonomous) return Axx0 * x + Axk0 * kappa(t);
    return model.A_xx.at(t) * x + model.A_xk.at(t) * kappa(t);
  };
  const int steps = std::max(1, static_cast<int>(std::llround((t1 - t0) / dt)));
  const double h = (t1 - t0) / steps;
  Eigen::VectorXd x = x0;
  auto rec = [&](double t) {
    if (!record) return;
    if (!record->t.empty() && t <= record->t.back() + 1e-12) return;
    const Eigen::VectorXd k = kappa(t);
    const double eps = 1e-6;
    const Eigen::VectorXd kd = (kappa(t + eps) - kappa(t - eps)) / (2.0 * eps);
    record->t.push_back(t);
    record->x.push_back(x);
    record->kappa.push_back(k);
    record->kdot.push_back(kd);
    record->norm_pi.push_back(x.norm());
    record->norm_h1.push_back(std::sqrt(x.squaredNorm() + x.cwiseAbs2().dot(model.mu)));
    record->norm_kappa.push_back(k.norm());
    record->norm_kdot.push_back(kd.norm());
    record->cost.push_back(0.0);
  };
  rec(t0);
  for (int s = 0; s < steps; ++s) {
    const double t = t0 + s * h;
    const Eigen::VectorXd k1 = f(t, x);
    const Eigen::VectorXd k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(t + h, x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    rec(t0 + (s + 1) * h);
  }
  return x;
}

FlattenResult flatten_initial(const ReducedModel& model, const ControlBasis& basis, const FlowField& v0,
                              const Eigen::VectorXd& x0, const Eigen::VectorXd& kappa_tau,
                              const TimeShaping& shaping, double dt) {
  if (kappa_tau.size() != 2 * basis.M) throw InputError("tangential seed must have 2M entries");
  const TraceCoordinates tc = z_of_normal_trace(v0, basis);
  FlattenResult out;
  out.z_full = tc.z + basis.P_Nperp * (basis.Q_l * kappa_tau);
  out.kappa_start = basis.perp_basis.transpose() * out.z_full;
  const Eigen::VectorXd ks = out.kappa_start;
  out.x_end = propagate_reduced(model, x0, [&](double t) -> Eigen::VectorXd { return shaping.phi_flat(t) * ks; },
                                0.0, 1.0, dt);
  out.terminal_trace_sup = basis.apply_perp(shaping.phi_flat(1.0) * ks).cwiseAbs().maxCoeff();
  return out;
}

namespace {

Eigen::VectorXd shaped_kappa(const TimeShaping& sh, const Eigen::MatrixXd& coeff, double tau) {
  const double p = sh.phi(tau);
  Eigen::VectorXd k = Eigen::VectorXd::Zero(coeff.rows());
  if (p == 0.0) return k;
  for (int m = 1; m <= coeff.cols(); ++m) k += TimeShaping::sigma(m, tau) * coeff.col(m - 1);
  return p * k;
}

Eigen::VectorXd shaped_kappa_d(const TimeShaping& sh, const Eigen::MatrixXd& coeff, double tau) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(coeff.rows()), b = a;
  for (int m = 1; m <= coeff.cols(); ++m) {
    a += TimeShaping::sigma(m, tau) * coeff.col(m - 1);
    b += TimeShaping::sigma_d(m, tau) * coeff.col(m - 1);
  }
  return sh.phi_d(tau) * a + sh.phi(tau) * b;
}

Eigen::MatrixXd response_matrix(const ReducedModel& model, double t_n, const TimeShaping& sh, double dt) {
  const int m = model.n_perp, Mt = sh.M_t;
  Eigen::MatrixXd G(model.N_gal, m * Mt);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(model.N_gal);
  for (int c = 0; c < m; ++c) {
    for (int k = 1; k <= Mt; ++k) {
      const Eigen::VectorXd e = Eigen::VectorXd::Unit(m, c);
      G.col(c * Mt + k - 1) = propagate_reduced(
          model, zero,
          [&](double t) -> Eigen::VectorXd { return sh.phi(t - t_n) * TimeShaping::sigma(k, t - t_n) * e; }, t_n,
          t_n + 1.0, dt);
    }
  }
  return G;
}

}  // namespace

DriveResult drive_PiN_to_zero(const ReducedModel& model, const ControlBasis& basis, const Eigen::VectorXd& x_n,
                              double t_n, int N, const TimeShaping& shaping, double dt, ResponseCache* cache) {
  if (N < 1 || N > model.N_gal) throw InputError("target mode count out of range");
  if (shaping.M_t < 1) throw InputError("M_t must be positive");
  const int m = model.n_perp, Mt = shaping.M_t;

  Eigen::MatrixXd G;
  const bool autonomous = model.A_xx.is_constant();
  if (cache && autonomous && cache->valid) {
    G = cache->response;
  } else {
    G = response_matrix(model, autonomous ? 0.0 : t_n, shaping, dt);
    if (cache && autonomous) {
      cache->response = G;
      cache->valid = true;
    }
  }
  const Eigen::VectorXd free =
      propagate_reduced(model, x_n, [&](double) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(m); }, t_n,
                        t_n + 1.0, dt);

  const Eigen::MatrixXd GN = G.topRows(N);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(GN, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = 1e-10 * (s.size() ? s[0] : 0.0);
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > cutoff) ++rank;
  DriveResult out;
  out.rank = rank;
  if (rank < N) throw NumericalError("insufficient controls: increase M or M_t");

  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (int i = 0; i < rank; ++i) inv[i] = 1.0 / s[i];
  const Eigen::VectorXd a = svd.matrixV() * (inv.asDiagonal() * (svd.matrixU().transpose() * (-free.head(N))));

  out.coeff.resize(m, Mt);
  for (int c = 0; c < m; ++c)
    for (int k = 0; k < Mt; ++k) out.coeff(c, k) = a[c * Mt + k];
  out.coeff_full = basis.perp_basis * out.coeff;
  if (out.coeff.norm() > 1e8) log_warn("open-loop coefficients exceed 1e8; the input map is ill conditioned");

  const Eigen::MatrixXd coeff = out.coeff;
  out.x_end = propagate_reduced(
      model, x_n, [&](double t) { return shaped_kappa(shaping, coeff, t - t_n); }, t_n, t_n + 1.0, dt);
  const double xn = x_n.norm();
  out.post_residual = xn > 0.0 ? out.x_end.head(N).norm() / xn : out.x_end.head(N).norm();
  return out;
}

OpenLoopResult concatenate(const ReducedModel& model, const ControlBasis& basis, const FlowField& v0,
                           const Eigen::VectorXd& x0, const Eigen::VectorXd& kappa_tau, int intervals, int N,
                           const TimeShaping& shaping, double dt, double lambda_hat) {
  if (intervals < 1) throw InputError("need at least one interval");
  OpenLoopResult out;
  out.N = N;
  out.run.kind = "openloop";
  out.run.kappa_rule = "prescribed";
  out.run.dt = dt;
  out.run.lambda = 2.0 * lambda_hat;

  const FlattenResult fl = flatten_initial(model, basis, v0, x0, kappa_tau, shaping, dt);
  out.terminal_trace_sup = fl.terminal_trace_sup;
  const Eigen::VectorXd ks = fl.kappa_start;
  propagate_reduced(model, x0, [&](double t) -> Eigen::VectorXd { return shaping.phi_flat(t) * ks; }, 0.0, 1.0, dt,
                    &out.run);

  const int quad = 1000;
  auto energy = [&](const std::function<Eigen::VectorXd(double)>& k, const std::function<Eigen::VectorXd(double)>& kd) {
    double e = 0.0;
    for (int q = 0; q <= quad; ++q) {
      const double tau = static_cast<double>(q) / quad;
      const double w = (q == 0 || q == quad) ? 0.5 : 1.0;
      e += w * (k(tau).squaredNorm() + kd(tau).squaredNorm());
    }
    return e / quad;
  };
  out.control_energy =
      energy([&](double tau) -> Eigen::VectorXd { return shaping.phi_flat(tau) * ks; },
             [&](double tau) -> Eigen::VectorXd { return shaping.phi_flat_d(tau) * ks; });
  {
    IntervalDiagnostics d0;
    d0.n = 0;
    d0.rho = x0.norm() > 0.0 ? fl.x_end.norm() / x0.norm() : 0.0;
    d0.coeff_norm = ks.norm();
    d0.rank = 0;
    out.intervals.push_back(d0);
  }

  ResponseCache cache;
  Eigen::VectorXd x = fl.x_end;
  std::vector<double> tn{1.0}, xn{x.norm()};
  for (int n = 1; n < intervals; ++n) {
    const DriveResult dr = drive_PiN_to_zero(model, basis, x, n, N, shaping, dt, &cache);
    const Eigen::MatrixXd coeff = dr.coeff;
    const double t_n = n;
    propagate_reduced(
        model, x, [&](double t) { return shaped_kappa(shaping, coeff, t - t_n); }, t_n, t_n + 1.0, dt, &out.run);
    out.control_energy += std::exp(lambda_hat * n) *
                          energy([&](double tau) { return shaped_kappa(shaping, coeff, tau); },
                                 [&](double tau) { return shaped_kappa_d(shaping, coeff, tau); });
    IntervalDiagnostics di;
    di.n = n;
    di.rho = x.norm() > 0.0 ? dr.x_end.norm() / x.norm() : 0.0;
    di.coeff_norm = dr.coeff_full.norm();
    di.rank = dr.rank;
    out.intervals.push_back(di);
    out.max_rho = std::max(out.max_rho, di.rho);
    x = dr.x_end;
    tn.push_back(n + 1.0);
    xn.push_back(x.norm());
  }
  bool positive = tn.size() >= 2;
  for (double v : xn) positive = positive && v > 0.0;
  out.fitted_rate = positive ? fit_decay_rate(tn, xn, tn.front(), tn.back()) : 0.0;
  return out;
}

OpenLoopSweep sweep_openloop(const ReducedModel& model, const ControlBasis& basis, const FlowField& v0,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& kappa_tau, int intervals,
                             const TimeShaping& shaping, double dt, double lambda_hat, double target) {
  OpenLoopSweep sweep;
  for (int N = 1; N <= model.N_gal; ++N) {
    SweepRow row;
    row.N = N;
    try {
      OpenLoopResult r = concatenate(model, basis, v0, x0, kappa_tau, intervals, N, shaping, dt, lambda_hat);
      row.max_rho = r.max_rho;
      if (sweep.chosen_N == 0 && r.max_rho <= target) {
        sweep.chosen_N = N;
        sweep.chosen = std::move(r);
      }
    } catch (const NumericalError&) {
      row.rank_ok = false;
      row.max_rho = std::numeric_limits<double>::quiet_NaN();
    }
    sweep.rows.push_back(row);
  }
  if (sweep.chosen_N == 0) {
    std::ostringstream os;
    os << "contraction not achieved for any N <= " << model.N_gal << "; N vs max rho:";
    for (const auto& r : sweep.rows) os << " " << r.N << ":" << r.max_rho;
    throw NumericalError(os.str());
  }
  return sweep;
}

}  // namespace flowstab
