#include "flowstab/simulators.hpp"

#include "flowstab/errors.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <random>

namespace flowstab {

RateFn gain_rate(const RiccatiGain& gain) {
  return [&gain](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& k) { return feedback(gain, t, x, k); };
}

std::vector<double> SimRun::extended_norm() const {
  std::vector<double> out(t.size());
  for (size_t k = 0; k < t.size(); ++k) out[k] = std::sqrt(x[k].squaredNorm() + kappa[k].squaredNorm());
  return out;
}

double fit_decay_rate(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1) {
  double st = 0, sy = 0, stt = 0, sty = 0;
  int n = 0;
  for (size_t k = 0; k < t.size() && k < y.size(); ++k) {
    if (t[k] < t0 - 1e-12 || t[k] > t1 + 1e-12 || !(y[k] > 0.0)) continue;
    const double ly = std::log(y[k]);
    st += t[k];
    sy += ly;
    stt += t[k] * t[k];
    sty += t[k] * ly;
    ++n;
  }
  if (n < 2) throw NumericalError("not enough samples to fit a decay rate");
  const double slope = (n * sty - st * sy) / (n * stt - st * st);
  return -slope;
}

namespace {

void record_reduced(SimRun& run, double t, const Eigen::VectorXd& x, const Eigen::VectorXd& k,
                    const Eigen::VectorXd& kd, const Eigen::VectorXd* grad_weights) {
  const double lam = run.lambda;
  const double integrand = std::exp(lam * t) * (x.squaredNorm() + k.squaredNorm() + kd.squaredNorm());
  double cost = 0.0;
  if (!run.t.empty()) {
    const double tp = run.t.back();
    const double prev = std::exp(lam * tp) * (run.x.back().squaredNorm() + run.kappa.back().squaredNorm() +
                                              run.kdot.back().squaredNorm());
    cost = run.cost.back() + 0.5 * (t - tp) * (prev + integrand);
  }
  run.t.push_back(t);
  run.x.push_back(x);
  run.kappa.push_back(k);
  run.kdot.push_back(kd);
  run.norm_pi.push_back(x.norm());
  double h1 = x.squaredNorm();
  if (grad_weights && grad_weights->size() == x.size()) h1 += x.cwiseAbs2().dot(*grad_weights);
  run.norm_h1.push_back(std::sqrt(h1));
  run.norm_kappa.push_back(k.norm());
  run.norm_kdot.push_back(kd.norm());
  run.cost.push_back(cost);
}

}  // namespace

SimRun simulate_reduced(const ExtendedSystem& sys, const RateFn& rate, const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& kappa0, double T, double dt, const Eigen::VectorXd* grad_weights) {
  const int nx = sys.n_x, nk = sys.n_k, n = sys.n();
  if (x0.size() != nx || kappa0.size() != nk) throw InputError("reduced simulation: dimension mismatch");
  if (!(dt > 0.0) || T < 0.0) throw InputError("reduced simulation: bad time grid");
  SimRun run;
  run.kind = "reduced";
  run.kappa_rule = "rk4";
  run.dt = dt;
  run.lambda = sys.lambda;

  const bool autonomous = sys.autonomous();
  const Eigen::MatrixXd A0 = sys.dynamics(0.0);
  auto f = [&](double t, const Eigen::VectorXd& w) {
    const Eigen::MatrixXd A = autonomous ? A0 : sys.dynamics(t);
    Eigen::VectorXd dw = A * w;
    dw.tail(nk) += rate(t, w.head(nx), w.tail(nk));
    return dw;
  };

  const int steps = static_cast<int>(std::llround(T / dt));
  Eigen::VectorXd w(n);
  w << x0, kappa0;
  const double w0 = std::max(w.norm(), 1e-300);
  for (int s = 0;; ++s) {
    const double t = s * dt;
    record_reduced(run, t, w.head(nx), w.tail(nk), rate(t, w.head(nx), w.tail(nk)), grad_weights);
    if (s == steps) break;
    const Eigen::VectorXd k1 = f(t, w);
    const Eigen::VectorXd k2 = f(t + 0.5 * dt, w + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = f(t + 0.5 * dt, w + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = f(t + dt, w + dt * k3);
    w += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!w.allFinite() || w.norm() > 1e6 * w0)
      throw NumericalError("reduced simulation unstable at t=" + std::to_string(t + dt) + " (reduce dt)");
  }
  return run;
}

SimRun simulate_reduced_closedloop(const ExtendedSystem& sys, const RiccatiGain& gain, const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& kappa0, double T, double dt,
                                   const Eigen::VectorXd* grad_weights) {
  if (gain.n_x != sys.n_x || gain.n_k != sys.n_k) throw InputError("gain does not match the system");
  return simulate_reduced(sys, gain_rate(gain), x0, kappa0, T, dt, grad_weights);
}

SimRun simulate_full(const FullOrderPlant& plant, const RateFn& rate, const FlowField& v0,
                     const Eigen::VectorXd& kappa0, const FullSimOptions& opts, double lambda) {
  const FieldOperators& ops = plant.oseen.ops();
  const RectDomain& d = ops.domain();
  const int ni = d.num_interior(), nb = d.num_boundary();
  const ControlBasis& basis = plant.basis;
  const double dt = opts.dt, nu = plant.oseen.nu();
  if (kappa0.size() != basis.dim_perp()) throw InputError("kappa0 has wrong dimension");
  if (v0.interior.size() != ni) throw InputError("initial field does not match grid");
  if (!(dt > 0.0) || opts.T < 0.0) throw InputError("full simulation: bad time grid");

  Eigen::VectorXd g = basis.apply_perp(kappa0);
  {
    Eigen::VectorXd tr(2 * nb);
    tr << v0.normal, v0.tangential;
    const double defect = (tr - g).cwiseAbs().maxCoeff();
    if (defect > 1e-8 * (1.0 + g.cwiseAbs().maxCoeff())) throw InputError("incompatible initial trace");
  }

  const int steps = static_cast<int>(std::llround(opts.T / dt));
  if (opts.frozen && !opts.frozen->history.empty() && static_cast<int>(opts.frozen->history.size()) < steps + 1)
    throw InputError("frozen history shorter than the simulation horizon");

  SpMat eye(ni, ni);
  eye.setIdentity();
  const SpMat cn = eye - (0.5 * dt * nu) * ops.laplacian_interior();
  Eigen::SimplicialLDLT<SpMat> solver(cn);
  if (solver.info() != Eigen::Success) throw NumericalError("Crank-Nicolson factorization failed");

  const bool has_conv = plant.oseen.reference().kind() != ReferenceTrajectory::Kind::Zero;
  const Eigen::VectorXd w = d.boundary_weights();
  const Eigen::MatrixXd EtM = plant.stokes.mass_weight * plant.stokes.E.transpose();

  SimRun run;
  run.kind = opts.frozen ? "picard" : (opts.nonlinear ? "nonlinear" : "linear");
  run.kappa_rule = "euler";
  run.dt = dt;
  run.lambda = lambda;
  run.stride = std::max(1, opts.stride);

  Eigen::VectorXd v = v0.interior;
  Eigen::VectorXd kappa = kappa0;
  const double start = std::max(ops.h1_norm(v0), 1e-300);

  auto frozen_field = [&](int s) {
    FlowField z = FlowField::zeros(d);
    z.interior = opts.frozen->history[s];
    const Eigen::VectorXd gz = basis.apply_perp(opts.frozen->kappa[s]);
    z.normal = gz.head(nb);
    z.tangential = gz.tail(nb);
    return z;
  };

  for (int s = 0;; ++s) {
    const double t = s * dt;
    FlowField cur{v, g.head(nb), g.tail(nb)};
    const Eigen::VectorXd x = EtM * v;
    const Eigen::VectorXd kd = rate(t, x, kappa);

    const double integrand = std::exp(lambda * t) * (x.squaredNorm() + kappa.squaredNorm() + kd.squaredNorm());
    double cost = 0.0;
    if (!run.t.empty()) {
      const double prev = std::exp(lambda * run.t.back()) *
                          (run.x.back().squaredNorm() + run.kappa.back().squaredNorm() + run.kdot.back().squaredNorm());
      cost = run.cost.back() + 0.5 * dt * (prev + integrand);
    }
    const Eigen::VectorXd p = ops.solve_neumann(ops.divergence_interior() * v);
    const Eigen::VectorXd piv = v - ops.gradient() * p;
    const double h1 = ops.h1_norm(cur);
    run.t.push_back(t);
    run.x.push_back(x);
    run.kappa.push_back(kappa);
    run.kdot.push_back(kd);
    run.norm_pi.push_back(std::sqrt(ops.inner(piv, piv)));
    run.norm_h1.push_back(h1);
    run.norm_kappa.push_back(kappa.norm());
    run.norm_kdot.push_back(kd.norm());
    run.cost.push_back(cost);
    run.trace_flux.push_back(w.dot(g.head(nb)));
    if (opts.keep_history) run.history.push_back(v);
    if (s % run.stride == 0 || s == steps) {
      run.snapshot_steps.push_back(s);
      run.snapshots.push_back(v);
    }

    if (!std::isfinite(h1) || h1 > opts.divergence_limit * std::max(1.0, start)) {
      run.status = "diverged";
      break;
    }
    if (s == steps) break;

    const Eigen::VectorXd kappa_next = kappa + dt * kd;
    const Eigen::VectorXd g_next = basis.apply_perp(kappa_next);
    const Eigen::VectorXd ext = cur.extended();

    Eigen::VectorXd rhs = v + (0.5 * dt * nu) * (ops.laplacian_interior() * v) +
                          (0.5 * dt * nu) * (ops.laplacian_boundary() * (g + g_next));
    if (has_conv) rhs -= dt * (plant.oseen.convection(t) * ext);
    if (opts.frozen) {
      if (!opts.frozen->history.empty()) rhs -= dt * convection_nonlinear(frozen_field(s), ops);
    } else if (opts.nonlinear) {
      rhs -= dt * convection_nonlinear(cur, ops);
    }
    const Eigen::VectorXd vstar = solver.solve(rhs);
    const Eigen::VectorXd phi =
        ops.solve_neumann(ops.divergence_interior() * vstar + ops.divergence_normal() * g_next.head(nb));
    v = vstar - ops.gradient() * phi;
    kappa = kappa_next;
    g = g_next;
  }
  return run;
}

SimRun simulate_full_linear(const FullOrderPlant& plant, const RiccatiGain& gain, const FlowField& v0,
                            const Eigen::VectorXd& kappa0, FullSimOptions opts) {
  opts.nonlinear = false;
  opts.frozen = nullptr;
  return simulate_full(plant, gain_rate(gain), v0, kappa0, opts, gain.lambda);
}

SimRun simulate_full_nonlinear(const FullOrderPlant& plant, const RiccatiGain& gain, const FlowField& v0,
                               const Eigen::VectorXd& kappa0, FullSimOptions opts) {
  opts.nonlinear = true;
  opts.frozen = nullptr;
  return simulate_full(plant, gain_rate(gain), v0, kappa0, opts, gain.lambda);
}

SimRun picard_map(const SimRun& zbar, const FullOrderPlant& plant, const RiccatiGain& gain, const FlowField& v0,
                  const Eigen::VectorXd& kappa0, FullSimOptions opts) {
  if (!zbar.history.empty() && std::abs(zbar.dt - opts.dt) > 1e-15)
    throw InputError("picard map: history uses a different time step");
  opts.nonlinear = false;
  opts.frozen = &zbar;
  opts.keep_history = true;
  return simulate_full(plant, gain_rate(gain), v0, kappa0, opts, gain.lambda);
}

double z_norm_from_series(const std::vector<double>& t, const std::vector<double>& f_sq, double lambda) {
  const size_t n = t.size();
  if (n < 2 || f_sq.size() != n) return n == 1 ? std::sqrt(std::max(0.0, f_sq[0])) : 0.0;
  std::vector<double> prefix(n, 0.0);
  for (size_t k = 1; k < n; ++k)
    prefix[k] = prefix[k - 1] + 0.5 * (t[k] - t[k - 1]) *
                                    (std::exp(lambda * t[k - 1]) * f_sq[k - 1] + std::exp(lambda * t[k]) * f_sq[k]);
  double best = 0.0;
  size_t hi = 0;
  for (size_t lo = 0; lo < n; ++lo) {
    while (hi + 1 < n && t[hi + 1] <= t[lo] + 1.0 + 1e-9) ++hi;
    best = std::max(best, prefix[hi] - prefix[lo]);
    if (t[lo] + 1.0 > t.back() + 1e-9) break;
  }
  return std::sqrt(best);
}

namespace {

double h1_sq_of(const Eigen::VectorXd& interior, const Eigen::VectorXd& kappa, const ControlBasis& basis,
                const FieldOperators& ops) {
  const int nb = ops.domain().num_boundary();
  const Eigen::VectorXd g = basis.apply_perp(kappa);
  const FlowField f{interior, g.head(nb), g.tail(nb)};
  return ops.inner(f.interior, f.interior) + ops.grad_norm_sq(f);
}

}  // namespace

double z_norm(const SimRun& run, const ControlBasis& basis, const FieldOperators& ops) {
  if (run.history.size() != run.t.size()) throw InputError("Z norm needs the full history of the run");
  std::vector<double> f(run.t.size());
  for (size_t k = 0; k < f.size(); ++k) f[k] = h1_sq_of(run.history[k], run.kappa[k], basis, ops);
  return z_norm_from_series(run.t, f, run.lambda);
}

double z_distance(const SimRun& a, const SimRun& b, const ControlBasis& basis, const FieldOperators& ops) {
  if (a.history.size() != a.t.size() || b.history.size() != b.t.size() || a.t.size() != b.t.size())
    throw InputError("Z distance needs two full histories of equal length");
  std::vector<double> f(a.t.size());
  for (size_t k = 0; k < f.size(); ++k)
    f[k] = h1_sq_of(a.history[k] - b.history[k], a.kappa[k] - b.kappa[k], basis, ops);
  return z_norm_from_series(a.t, f, a.lambda);
}

IntegralFeedbackCheck export_integral_feedback(const SimRun& run, const ControlBasis& basis, bool keep_series) {
  IntegralFeedbackCheck out;
  if (run.t.empty()) return out;
  const int nb = basis.num_boundary();
  const bool euler = run.kappa_rule == "euler";
  Eigen::VectorXd integral = basis.apply_perp(run.kappa.front());
  for (size_t k = 0; k < run.t.size(); ++k) {
    if (k > 0) {
      const double h = run.t[k] - run.t[k - 1];
      const Eigen::VectorXd rate = euler ? run.kdot[k - 1] : 0.5 * (run.kdot[k - 1] + run.kdot[k]);
      integral += h * basis.apply_perp(rate);
    }
    const Eigen::VectorXd zeta = basis.apply_perp(run.kappa[k]);
    const double scale = 1.0 + zeta.cwiseAbs().maxCoeff();
    out.max_mismatch = std::max(out.max_mismatch, (zeta - integral).cwiseAbs().maxCoeff() / scale);
    out.max_flux = std::max(out.max_flux, std::abs(basis.weights.dot(zeta.head(nb))));
    if (keep_series) out.zeta.push_back(zeta);
  }
  return out;
}

std::vector<double> lyapunov_psi(const RiccatiGain& gain, const SimRun& run) {
  if (run.t.size() < 2) throw InputError("trajectory too short for Lyapunov functionals");
  std::vector<double> psi(run.t.size());
  Eigen::VectorXd w(gain.n());
  for (size_t k = 0; k < run.t.size(); ++k) {
    w << run.x[k], run.kappa[k];
    psi[k] = value_function(gain, run.t[k], w);
  }
  return psi;
}

std::vector<double> lyapunov_phi(const SimRun& run) {
  if (run.t.size() < 2) throw InputError("trajectory too short for tail integration");
  const size_t n = run.t.size();
  std::vector<double> phi(n, 0.0);
  auto sq = [&](size_t k) { return run.x[k].squaredNorm() + run.kappa[k].squaredNorm(); };
  for (size_t k = n - 1; k-- > 0;) phi[k] = phi[k + 1] + 0.5 * (run.t[k + 1] - run.t[k]) * (sq(k) + sq(k + 1));
  return phi;
}

InitialState make_initial_state(const StokesBasis& stokes, const ControlBasis& basis, const FieldOperators& ops,
                                int modes, double kappa_scale, unsigned seed, double h1_amplitude) {
  const RectDomain& d = ops.domain();
  const int nb = d.num_boundary();
  modes = std::clamp(modes, 1, stokes.N_gal);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(stokes.N_gal);
  for (int i = 0; i < modes; ++i) c[i] = unif(rng);
  Eigen::VectorXd kappa(basis.dim_perp());
  for (int i = 0; i < kappa.size(); ++i) kappa[i] = unif(rng);
  if (kappa.size() > 0 && kappa.norm() > 0.0) kappa *= kappa_scale * c.norm() / kappa.norm();

  InitialState s;
  const Eigen::VectorXd g = basis.apply_perp(kappa);
  s.v0 = lift_stokes(g.head(nb), g.tail(nb), ops);
  s.v0.interior += stokes.E * c;
  const double h1 = ops.h1_norm(s.v0);
  if (!(h1 > 0.0)) throw NumericalError("initial state has zero norm");
  const double f = h1_amplitude / h1;
  s.v0 *= f;
  s.kappa0 = f * kappa;
  s.x0 = project_reduced(s.v0, stokes);
  return s;
}

InitialState scaled(const InitialState& s, double factor) {
  return {factor * s.v0, factor * s.x0, factor * s.kappa0};
}

}  // namespace flowstab
