#include "flowstab/workflow.hpp"

#include "flowstab/errors.hpp"
#include "flowstab/io.hpp"
#include "flowstab/log.hpp"
#include "flowstab/openloop.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <random>

namespace flowstab {

using nlohmann::json;
namespace fs = std::filesystem;

ReferenceTrajectory make_reference(const RunConfig& cfg, const FieldOperators& ops) {
  if (cfg.reference.kind == "periodic") return ReferenceTrajectory::periodic(ops, cfg.reference.a0, cfg.reference.omega);
  if (cfg.reference.kind == "csv") return ReferenceTrajectory::from_csv(cfg.reference.path, ops);
  return ReferenceTrajectory::zero(ops);
}

std::unique_ptr<Plant> build_plant(const RunConfig& cfg, const StokesBasis* cached_stokes) {
  auto p = std::make_unique<Plant>();
  p->cfg = cfg;
  const RectDomain domain = build_domain(cfg.domain);
  p->ops = std::make_unique<FieldOperators>(domain);
  p->patch = build_cutoff(cfg.patch, domain);
  p->basis = build_xi(cfg.bases.M, p->patch, domain, cfg.bases.svd_tol);
  if (cached_stokes) {
    if (cached_stokes->E.rows() != domain.num_interior() || cached_stokes->N_gal != cfg.bases.N_gal)
      throw InputError("cached Stokes basis does not match the grid");
    p->stokes = *cached_stokes;
  } else {
    p->stokes = stokes_eigenbasis(cfg.bases.N_gal, *p->ops, cfg.nu);
  }
  p->oseen = std::make_unique<OseenOperator>(*p->ops, make_reference(cfg, *p->ops), cfg.nu);
  p->model = assemble_reduced(*p->oseen, p->stokes, p->basis, cfg.synthesis.T, cfg.synthesis.dt_A);
  p->sys = build_extended(p->model, cfg.lambda);
  return p;
}

InitialState Plant::initial_state(double amplitude, unsigned seed) const {
  return make_initial_state(stokes, basis, *ops, cfg.simulation.init_modes, cfg.simulation.kappa_scale, seed,
                            amplitude);
}

fs::path resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("FLOWSTAB_OUT"); env && *env) return env;
  return "flowstab_out";
}

namespace {

fs::path cache_dir(const Options& opt) { return opt.out / "cache"; }

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

double safe_rate(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1) {
  try {
    return fit_decay_rate(t, y, t0, t1);
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Loaded {
  std::unique_ptr<Plant> plant;
  RiccatiGain gain;
};

Loaded load_synthesis(const Options& opt) {
  const std::string hash = opt.cfg.synthesis_hash();
  Loaded l;
  const StokesBasis stokes = load_stokes(cache_dir(opt) / "stokes", hash);
  l.gain = load_gain(cache_dir(opt) / "gain", hash);
  l.plant = build_plant(opt.cfg, &stokes);
  if (l.gain.n_x != l.plant->sys.n_x || l.gain.n_k != l.plant->sys.n_k)
    throw InputError("cached gain does not match the assembled system");
  return l;
}

json base_summary(const Options& opt, const std::string& mode) {
  return {{"mode", mode},
          {"config_hash", opt.cfg.full_hash()},
          {"synthesis_hash", opt.cfg.synthesis_hash()},
          {"seed", opt.cfg.simulation.seed},
          {"amplitude", opt.cfg.simulation.amplitude}};
}

}  // namespace

int cmd_synthesize(const Options& opt) {
  const RunConfig& cfg = opt.cfg;
  const std::string hash = cfg.synthesis_hash();
  auto plant = build_plant(cfg);
  DreStats st;
  const RiccatiGain gain = solve_dre(plant->sys, cfg.synthesis.T, cfg.synthesis.dt_R, &st);
  const double residual = riccati_residual(plant->sys, gain);
  if (!(residual <= cfg.synthesis.tol_res))
    throw NumericalError("Riccati residual " + std::to_string(residual) + " exceeds tol_res");

  save_control_basis(cache_dir(opt) / "basis", plant->basis, hash);
  save_stokes(cache_dir(opt) / "stokes", plant->stokes, hash);
  save_gain(cache_dir(opt) / "gain", gain, hash);

  const json summary = {{"config_hash", hash},
                        {"N_gal", plant->stokes.N_gal},
                        {"M", plant->basis.M},
                        {"n_boundary", plant->basis.num_boundary()},
                        {"dim_kernel", plant->basis.dim_kernel()},
                        {"dim_perp", plant->basis.dim_perp()},
                        {"alpha_1", plant->stokes.alpha[0]},
                        {"stokes_residual", plant->stokes.max_residual},
                        {"autonomous", plant->sys.autonomous()},
                        {"R0_norm", gain.R.front().norm()},
                        {"max_gain_norm", gain.max_gain_norm()},
                        {"min_eigenvalue", st.min_eigenvalue},
                        {"max_asymmetry", st.max_asymmetry},
                        {"riccati_residual", residual},
                        {"newton_iterations", st.max_newton_iterations},
                        {"samples", gain.R.size()}};
  write_json(opt.out / "synthesis.json", summary);
  std::printf("synthesized: N_gal=%d M=%d dim(N)=%d dim(N^perp)=%d\n", plant->stokes.N_gal, plant->basis.M,
              plant->basis.dim_kernel(), plant->basis.dim_perp());
  std::printf("|R(0)|=%.6g  feedback norm bound sup_t|K(t)|=%.6g  residual=%.3g\n", gain.R.front().norm(),
              gain.max_gain_norm(), residual);
  std::printf("cache written to %s\n", cache_dir(opt).string().c_str());
  return 0;
}

namespace {

int simulate_openloop(const Options& opt) {
  const RunConfig& cfg = opt.cfg;
  auto plant = build_plant(cfg);
  const InitialState s = plant->initial_state(cfg.simulation.amplitude, cfg.simulation.seed);
  TimeShaping sh;
  sh.delta = cfg.openloop.delta;
  sh.M_t = cfg.bases.M_t;
  const Eigen::VectorXd kappa_tau = plant->basis.Q_l * (plant->basis.perp_basis * s.kappa0);
  const double target = std::exp(-cfg.lambda);
  const fs::path dir = opt.out / "runs" / "openloop";

  const OpenLoopSweep sweep = sweep_openloop(plant->model, plant->basis, s.v0, s.x0, kappa_tau,
                                             cfg.openloop.intervals, sh, cfg.openloop.dt, 0.5 * cfg.lambda, target);
  std::string table = "N,max_rho,rank_ok\n";
  char buf[96];
  for (const auto& r : sweep.rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%d\n", r.N, r.max_rho, r.rank_ok ? 1 : 0);
    table += buf;
  }
  write_text(dir / "sweep.csv", table);
  std::string rho = "n,rho,coeff_norm,rank\n";
  for (const auto& d : sweep.chosen.intervals) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d\n", d.n, d.rho, d.coeff_norm, d.rank);
    rho += buf;
  }
  write_text(dir / "rho.csv", rho);

  json summary = base_summary(opt, "openloop");
  summary["chosen_N"] = sweep.chosen_N;
  summary["target"] = target;
  summary["max_rho"] = sweep.chosen.max_rho;
  summary["decay_rate"] = num(sweep.chosen.fitted_rate);
  summary["control_energy"] = sweep.chosen.control_energy;
  summary["terminal_trace_sup"] = sweep.chosen.terminal_trace_sup;
  bool monotone = true;
  for (size_t i = 1; i < sweep.rows.size(); ++i)
    if (sweep.rows[i].max_rho > sweep.rows[i - 1].max_rho) monotone = false;
  summary["rho_monotone_in_N"] = monotone;
  if (!monotone) log_info("per-step ratio is not monotone in N on this fixture (see sweep.csv)");
  write_run(dir, sweep.chosen.run, summary.dump(), false);
  std::printf("openloop: smallest N with max rho <= %.4f is %d (max rho %.4g)\n", target, sweep.chosen_N,
              sweep.chosen.max_rho);
  return 0;
}

int simulate_picard(const Options& opt, const Loaded& l) {
  const RunConfig& cfg = opt.cfg;
  const Plant& p = *l.plant;
  const InitialState s = p.initial_state(cfg.simulation.amplitude, cfg.simulation.seed);
  FullSimOptions o;
  o.dt = cfg.simulation.dt;
  o.T = cfg.simulation.T_sim;
  o.stride = cfg.simulation.stride;
  o.keep_history = true;
  const FullOrderPlant fp = p.full();

  // Contraction estimate from two different histories.
  const InitialState s2 = p.initial_state(cfg.simulation.amplitude, cfg.simulation.seed + 1);
  const SimRun za = simulate_full_linear(fp, l.gain, s.v0, s.kappa0, o);
  const SimRun zb = simulate_full_linear(fp, l.gain, s2.v0, s2.kappa0, o);
  const double d_in = z_distance(za, zb, p.basis, *p.ops);
  const double d_out =
      z_distance(picard_map(za, fp, l.gain, s.v0, s.kappa0, o), picard_map(zb, fp, l.gain, s.v0, s.kappa0, o),
                 p.basis, *p.ops);
  const double gamma = d_in > 0.0 ? d_out / d_in : 0.0;

  std::string iters = "iteration,z_difference\n";
  SimRun z = picard_map(SimRun{}, fp, l.gain, s.v0, s.kappa0, o);
  double diff = std::numeric_limits<double>::infinity();
  int k = 0;
  char buf[64];
  for (; k < cfg.simulation.picard_max_iter && diff > cfg.simulation.picard_tol && z.status == "ok"; ++k) {
    SimRun next = picard_map(z, fp, l.gain, s.v0, s.kappa0, o);
    diff = z_distance(next, z, p.basis, *p.ops);
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", k + 1, diff);
    iters += buf;
    z = std::move(next);
  }
  write_text(opt.out / "runs" / "picard" / "iterations.csv", iters);
  const SimRun direct = simulate_full_nonlinear(fp, l.gain, s.v0, s.kappa0, o);
  const double vs_direct = direct.status == "ok" && z.status == "ok" ? z_distance(z, direct, p.basis, *p.ops)
                                                                     : std::numeric_limits<double>::infinity();
  json summary = base_summary(opt, "picard");
  summary["gamma"] = gamma;
  summary["iterations"] = k;
  summary["converged"] = diff <= cfg.simulation.picard_tol;
  summary["last_difference"] = num(diff);
  summary["fixed_point_vs_direct"] = num(vs_direct);
  summary["z_norm"] = z.status == "ok" ? num(z_norm(z, p.basis, *p.ops)) : json(nullptr);
  write_run(opt.out / "runs" / "picard", z, summary.dump());
  std::printf("picard: gamma=%.3g iterations=%d fixed point vs direct=%.3g\n", gamma, k, vs_direct);
  return 0;
}

}  // namespace

int cmd_simulate(const Options& opt, const std::string& mode) {
  if (mode == "openloop") return simulate_openloop(opt);
  if (mode != "reduced" && mode != "linear" && mode != "nonlinear" && mode != "picard")
    throw InputError("unknown mode '" + mode + "' (reduced, linear, nonlinear, openloop, picard)");
  const RunConfig& cfg = opt.cfg;
  const Loaded l = load_synthesis(opt);
  if (mode == "picard") return simulate_picard(opt, l);
  const Plant& p = *l.plant;
  const auto& sim = cfg.simulation;
  const InitialState s = p.initial_state(sim.amplitude, sim.seed);
  const fs::path dir = opt.out / "runs" / mode;
  json summary = base_summary(opt, mode);
  const double t0 = std::min(1.0, 0.1 * sim.T_sim);

  if (mode == "reduced") {
    const SimRun run = simulate_reduced_closedloop(p.sys, l.gain, s.x0, s.kappa0, sim.T_sim, sim.dt_reduced,
                                                   &p.stokes.mu);
    Eigen::VectorXd w0(p.sys.n()), wT(p.sys.n());
    w0 << s.x0, s.kappa0;
    wT << run.x.back(), run.kappa.back();
    summary["decay_rate"] = num(safe_rate(run.t, run.extended_norm(), t0, sim.T_sim));
    summary["value_function_t0"] = value_function(l.gain, 0.0, w0);
    summary["cost_to_go_simulated"] = run.cost.back() + value_function(l.gain, run.t.back(), wT);
    summary["integral_feedback_mismatch"] = export_integral_feedback(run, p.basis).max_mismatch;
    write_run(dir, run, summary.dump());
    std::printf("reduced: decay rate %.4f\n", summary["decay_rate"].is_null() ? NAN : summary["decay_rate"].get<double>());
    return 0;
  }

  FullSimOptions o;
  o.dt = sim.dt;
  o.T = sim.T_sim;
  o.stride = sim.stride;
  const FullOrderPlant fp = p.full();
  if (mode == "linear") {
    const SimRun run = simulate_full_linear(fp, l.gain, s.v0, s.kappa0, o);
    const IntegralFeedbackCheck ifc = export_integral_feedback(run, p.basis);
    summary["status"] = run.status;
    summary["decay_rate"] = num(safe_rate(run.t, run.norm_pi, t0, sim.T_sim));
    summary["decay_rate_h1"] = num(safe_rate(run.t, run.norm_h1, t0, sim.T_sim));
    summary["integral_feedback_mismatch"] = ifc.max_mismatch;
    summary["max_trace_flux"] = ifc.max_flux;
    write_run(dir, run, summary.dump());
    std::printf("linear: status %s, decay rate %.4f\n", run.status.c_str(),
                summary["decay_rate"].is_null() ? NAN : summary["decay_rate"].get<double>());
    return 0;
  }

  // nonlinear: the run at the configured amplitude plus the amplitude sweep
  if (sim.amplitude > sim.epsilon)
    log_warn("initial H1 norm exceeds the configured smallness bound epsilon; decay is not guaranteed");
  const SimRun lin = simulate_full_linear(fp, l.gain, s.v0, s.kappa0, o);
  const double lin_rate = safe_rate(lin.t, lin.norm_h1, t0, sim.T_sim);
  const SimRun run = simulate_full_nonlinear(fp, l.gain, s.v0, s.kappa0, o);
  const double rate = run.status == "ok" ? safe_rate(run.t, run.norm_h1, t0, sim.T_sim) : NAN;
  summary["status"] = run.status;
  summary["decay_rate"] = num(rate);
  summary["linear_decay_rate"] = num(lin_rate);
  summary["relative_rate_difference"] = num(std::abs(rate - lin_rate) / lin_rate);

  const InitialState unit = p.initial_state(1.0, sim.seed);
  std::string table = "amplitude,status,decay_rate,relative_difference\n";
  double threshold = NAN, amp = sim.sweep_start;
  char buf[128];
  for (int i = 0; i < sim.sweep_count; ++i, amp *= sim.sweep_factor) {
    const InitialState si = scaled(unit, amp);
    const SimRun r = simulate_full_nonlinear(fp, l.gain, si.v0, si.kappa0, o);
    const double ri = r.status == "ok" ? safe_rate(r.t, r.norm_h1, t0, sim.T_sim) : NAN;
    const double rel = std::isfinite(ri) ? std::abs(ri - lin_rate) / lin_rate : NAN;
    std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g,%.17g\n", amp, r.status.c_str(), ri, rel);
    table += buf;
    if (std::isnan(threshold) && !(rel <= sim.degrade_tol)) threshold = amp;
  }
  write_text(dir / "sweep.csv", table);
  summary["degradation_threshold"] = num(threshold);
  write_run(dir, run, summary.dump());
  std::printf("nonlinear: status %s, decay rate %.4f (linear %.4f), degradation threshold %.4g\n",
              run.status.c_str(), rate, lin_rate, threshold);
  return 0;
}

namespace {

Check make_check(const std::string& name, double value, double threshold, bool upper = true) {
  Check c{name, value, threshold, upper, false};
  c.pass = std::isfinite(value) && (upper ? value <= threshold : value >= threshold);
  return c;
}

void suite_basis(const Plant& p, std::vector<Check>& out) {
  const ControlBasis& b = p.basis;
  out.push_back(make_check("basis.commutation", commutation_defect(b), 1e-12));
  const int m = 2 * b.M;
  out.push_back(make_check("basis.projector_sum", (b.P_N + b.P_Nperp - Eigen::MatrixXd::Identity(m, m)).norm(),
                           1e-12));
  const Eigen::VectorXd sw = b.weights.cwiseSqrt();
  Eigen::VectorXd w2(2 * b.num_boundary());
  w2 << sw, sw;
  const double ker = b.dim_kernel() ? (w2.asDiagonal() * (b.Xi * b.ker_basis)).norm() : 0.0;
  out.push_back(make_check("basis.kernel_annihilated", ker, 1e-10));
  double flux = 0.0;
  for (int j = 0; j < b.dim_perp(); ++j) flux = std::max(flux, std::abs(b.net_flux(b.perp_basis.col(j))));
  out.push_back(make_check("basis.zero_net_flux", flux, 1e-10));
  out.push_back(make_check("basis.min_perp_singular", b.min_perp_singular,
                           b.svd_tol * (b.singular_values.size() ? b.singular_values[0] : 1.0), false));
}

void suite_operators(const Plant& p, std::vector<Check>& out) {
  const FieldOperators& ops = *p.ops;
  const RectDomain& d = ops.domain();
  std::mt19937 rng(p.cfg.simulation.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  double idem = 0, annih = 0, orth = 0;
  for (int k = 0; k < 20; ++k) {
    FlowField v = FlowField::zeros(d);
    for (int i = 0; i < v.interior.size(); ++i) v.interior[i] = g(rng);
    Eigen::VectorXd q(d.num_cells());
    for (int i = 0; i < q.size(); ++i) q[i] = g(rng);
    const FlowField pv = leray_project(v, ops).field;
    idem = std::max(idem, (leray_project(pv, ops).field.interior - pv.interior).norm() / v.interior.norm());
    FlowField gq = FlowField::zeros(d);
    gq.interior = ops.gradient() * q;
    annih = std::max(annih, leray_project(gq, ops).field.interior.norm() / gq.interior.norm());
    orth = std::max(orth, std::abs(ops.inner(pv.interior, gq.interior)) /
                              std::sqrt(ops.inner(v.interior, v.interior) * ops.inner(gq.interior, gq.interior)));
  }
  out.push_back(make_check("operators.leray_idempotence", idem, 1e-9));
  out.push_back(make_check("operators.leray_gradient_annihilation", annih, 1e-9));
  out.push_back(make_check("operators.leray_orthogonality", orth, 1e-9));
  const SpMat& L = ops.laplacian_interior();
  out.push_back(make_check("operators.laplacian_symmetry", SpMat(L - SpMat(L.transpose())).norm(), 1e-12));
  out.push_back(make_check("operators.stokes_residual", p.stokes.max_residual, 1e-8));
  const int N = p.stokes.N_gal;
  out.push_back(make_check(
      "operators.stokes_orthonormality",
      (p.stokes.mass_weight * p.stokes.E.transpose() * p.stokes.E - Eigen::MatrixXd::Identity(N, N)).norm(), 1e-10));
  double div = 0.0;
  for (int j = 0; j < p.basis.dim_perp(); ++j) {
    const FlowField f = lift_control(Eigen::VectorXd::Unit(p.basis.dim_perp(), j), p.basis, ops);
    div = std::max(div, ops.div(f).cwiseAbs().maxCoeff());
  }
  out.push_back(make_check("operators.lift_divergence", div, 1e-9));
}

void suite_riccati(const Plant& p, std::vector<Check>& out) {
  double oracle = 0.0;
  for (double a : {0.3, -0.4}) {
    const RiccatiGain g = solve_dre(scalar_system(a, 1.0), 20.0, 0.01);
    oracle = std::max(oracle, std::abs(g.R.front()(0, 0) - scalar_riccati_root(a, 1.0)));
  }
  out.push_back(make_check("riccati.scalar_oracle", oracle, 1e-8));
  DreStats st;
  const RiccatiGain gain = solve_dre(p.sys, p.cfg.synthesis.T, p.cfg.synthesis.dt_R, &st);
  out.push_back(make_check("riccati.symmetry", st.max_asymmetry, 1e-10));
  out.push_back(make_check("riccati.residual", riccati_residual(p.sys, gain), p.cfg.synthesis.tol_res));
  out.push_back(make_check("riccati.min_eigenvalue", st.min_eigenvalue, -1e-10, false));
  if (p.sys.autonomous())
    out.push_back(make_check("riccati.horizon_doubling",
                             horizon_sensitivity(p.sys, p.cfg.synthesis.T, p.cfg.synthesis.dt_R), 1e-6));
}

void suite_closedloop(const Plant& p, std::vector<Check>& out) {
  const RunConfig& cfg = p.cfg;
  const auto& sim = cfg.simulation;
  const RiccatiGain gain = solve_dre(p.sys, cfg.synthesis.T, cfg.synthesis.dt_R);
  const InitialState s = p.initial_state(1.0, sim.seed);
  const double t0 = std::min(1.0, 0.1 * sim.T_sim);

  const SimRun red = simulate_reduced_closedloop(p.sys, gain, s.x0, s.kappa0, sim.T_sim, sim.dt_reduced);
  out.push_back(make_check("closedloop.reduced_decay_rate", safe_rate(red.t, red.extended_norm(), t0, sim.T_sim),
                           0.45 * cfg.lambda, false));
  Eigen::VectorXd w0(p.sys.n()), wT(p.sys.n());
  w0 << s.x0, s.kappa0;
  wT << red.x.back(), red.kappa.back();
  const double v0 = value_function(gain, 0.0, w0);
  const double cost = red.cost.back() + value_function(gain, red.t.back(), wT);
  out.push_back(make_check("closedloop.value_identity", std::abs(cost - v0) / v0, 0.01));
  const std::vector<double> psi = lyapunov_psi(gain, red), phi = lyapunov_phi(red);
  double rise = 0.0;
  for (size_t k = 1; k < psi.size(); ++k) {
    rise = std::max(rise, (psi[k] - psi[k - 1]) / psi.front());
    rise = std::max(rise, (phi[k] - phi[k - 1]) / phi.front());
  }
  out.push_back(make_check("closedloop.lyapunov_monotone", rise, 1e-8));

  FullSimOptions o;
  o.dt = sim.dt;
  o.T = sim.T_sim;
  o.stride = sim.stride;
  const SimRun full = simulate_full_linear(p.full(), gain, s.v0, s.kappa0, o);
  out.push_back(make_check("closedloop.full_decay_rate", safe_rate(full.t, full.norm_pi, t0, sim.T_sim),
                           0.40 * cfg.lambda, false));
  const IntegralFeedbackCheck ifc = export_integral_feedback(full, p.basis);
  out.push_back(make_check("closedloop.integral_feedback", ifc.max_mismatch, 1e-8));
  out.push_back(make_check("closedloop.zero_average_trace", ifc.max_flux, 1e-10));
}

void suite_appendix(const Plant& p, std::vector<Check>& out) {
  const ControlBasis fx = dependent_modes_fixture(512);
  out.push_back(make_check("appendix.kernel_dimension", std::abs(fx.dim_kernel() - 1.0), 0.0));
  double cosine = 0.0;
  if (fx.dim_kernel() == 1) {
    Eigen::VectorXd ref = Eigen::VectorXd::Zero(fx.ker_basis.rows());
    ref[0] = 3.0;
    ref[1] = -1.0;
    cosine = std::abs(ref.normalized().dot(fx.ker_basis.col(0).normalized()));
  }
  out.push_back(make_check("appendix.kernel_cosine", cosine, 0.999, false));
  out.push_back(make_check("appendix.coefficient_1", std::abs(fx.chi_coeff[0] - 0.3), 1e-3));
  out.push_back(make_check("appendix.coefficient_2", std::abs(fx.chi_coeff[1] + 0.1), 1e-3));
  out.push_back(make_check("appendix.commutation_fixture", commutation_defect(fx), 1e-12));
  out.push_back(make_check("appendix.commutation_default", commutation_defect(p.basis), 1e-12));
}

}  // namespace

std::vector<Check> run_suite(const RunConfig& cfg, const std::string& suite) {
  static const std::vector<std::string> names = {"basis", "operators", "riccati", "closedloop", "appendix"};
  if (suite != "all" && std::find(names.begin(), names.end(), suite) == names.end())
    throw InputError("unknown suite '" + suite + "' (basis, operators, riccati, closedloop, appendix, all)");
  std::vector<Check> out;
  if (suite == "appendix") {
    // The default basis alone does not need the Stokes basis or the model.
    RunConfig light = cfg;
    const RectDomain d = build_domain(cfg.domain);
    Plant p;
    p.cfg = light;
    p.basis = build_xi(cfg.bases.M, build_cutoff(cfg.patch, d), d, cfg.bases.svd_tol);
    suite_appendix(p, out);
    return out;
  }
  auto p = build_plant(cfg);
  const bool all = suite == "all";
  if (all || suite == "basis") suite_basis(*p, out);
  if (all || suite == "operators") suite_operators(*p, out);
  if (all || suite == "riccati") suite_riccati(*p, out);
  if (all || suite == "closedloop") suite_closedloop(*p, out);
  if (all) suite_appendix(*p, out);
  return out;
}

int cmd_verify(const Options& opt, const std::string& suite) {
  const std::vector<Check> checks = run_suite(opt.cfg, suite);
  json arr = json::array();
  bool ok = true;
  for (const auto& c : checks) {
    std::printf("[%s] %-40s %.6g %s %.6g\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value, c.upper ? "<=" : ">=",
                c.threshold);
    arr.push_back({{"name", c.name},
                   {"value", num(c.value)},
                   {"threshold", c.threshold},
                   {"bound", c.upper ? "upper" : "lower"},
                   {"pass", c.pass}});
    ok = ok && c.pass;
  }
  const json report = {{"suite", suite}, {"config_hash", opt.cfg.full_hash()}, {"passed", ok}, {"checks", arr}};
  write_json(opt.out / "verify" / (suite + ".json"), report);
  return ok ? 0 : 3;
}

int cmd_report(const Options& opt) {
  json report = {{"config_hash", opt.cfg.full_hash()}};
  bool any = false;
  auto slurp = [](const fs::path& p) { return json::parse(read_text(p)); };
  if (fs::exists(opt.out / "synthesis.json")) {
    report["synthesis"] = slurp(opt.out / "synthesis.json");
    any = true;
  }
  json runs = json::object();
  if (fs::exists(opt.out / "runs")) {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(opt.out / "runs"))
      if (fs::exists(e.path() / "run.json")) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
      json r = slurp(d / "run.json");
      r.erase("snapshots");
      runs[d.filename().string()] = r;
    }
  }
  if (!runs.empty()) {
    report["runs"] = runs;
    any = true;
  }
  json verify = json::object();
  if (fs::exists(opt.out / "verify")) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(opt.out / "verify"))
      if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) verify[f.stem().string()] = slurp(f);
  }
  if (!verify.empty()) {
    report["verify"] = verify;
    any = true;
  }
  if (!any) throw InputError("nothing to report in " + opt.out.string() + "; run synthesize, simulate or verify");
  for (auto it = runs.begin(); it != runs.end(); ++it) {
    const json& r = it.value();
    if (r.contains("config_hash") && r["config_hash"] != opt.cfg.full_hash())
      log_warn("run '" + it.key() + "' was produced with a different config");
    std::printf("%-10s status=%s decay_rate=%s\n", it.key().c_str(), r.value("status", std::string("ok")).c_str(),
                r.contains("decay_rate") ? r["decay_rate"].dump().c_str() : "-");
  }
  for (auto it = verify.begin(); it != verify.end(); ++it)
    std::printf("verify %-10s %s\n", it.key().c_str(), it.value().value("passed", false) ? "passed" : "FAILED");
  write_json(opt.out / "report.json", report);
  return 0;
}

}  // namespace flowstab
