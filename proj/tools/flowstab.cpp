#include "flowstab/config.hpp"
#include "flowstab/errors.hpp"
#include "flowstab/log.hpp"
#include "flowstab/workflow.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdio>
#include <exception>

int main(int argc, char** argv) {
  CLI::App app{"flowstab: boundary feedback synthesis and verification for 2D incompressible flow"};
  app.require_subcommand(1);

  std::string config_path, out_flag, mode = "reduced", suite = "all";
  bool deterministic = false, verbose = false, quiet = false;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_flag, "output directory (default: $FLOWSTAB_OUT or ./flowstab_out)");
    sub->add_flag("--deterministic", deterministic, "single-threaded reference path");
    sub->add_flag("-v,--verbose", verbose, "informational log messages");
    sub->add_flag("-q,--quiet", quiet, "suppress warnings");
  };
  auto* syn = app.add_subcommand("synthesize", "build bases and the Riccati gain, write the cache");
  auto* sim = app.add_subcommand("simulate", "run a closed-loop or open-loop simulation");
  auto* ver = app.add_subcommand("verify", "run an invariant suite and write a JSON report");
  auto* rep = app.add_subcommand("report", "collect artifacts of an output directory into report.json");
  for (auto* s : {syn, sim, ver, rep}) common(s);
  sim->add_option("--mode", mode, "reduced|linear|nonlinear|openloop|picard")
      ->check(CLI::IsMember({"reduced", "linear", "nonlinear", "openloop", "picard"}));
  ver->add_option("--suite", suite, "basis|operators|riccati|closedloop|appendix|all")
      ->check(CLI::IsMember({"basis", "operators", "riccati", "closedloop", "appendix", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  flowstab::set_log_level(quiet ? flowstab::LogLevel::Quiet
                                : (verbose ? flowstab::LogLevel::Info : flowstab::LogLevel::Warn));
  if (deterministic) Eigen::setNbThreads(1);

  try {
    flowstab::Options opt;
    opt.cfg = config_path.empty() ? flowstab::RunConfig{} : flowstab::load_config(config_path);
    opt.out = flowstab::resolve_out_dir(out_flag);
    opt.deterministic = deterministic;
    if (*syn) return flowstab::cmd_synthesize(opt);
    if (*sim) return flowstab::cmd_simulate(opt, mode);
    if (*ver) return flowstab::cmd_verify(opt, suite);
    return flowstab::cmd_report(opt);
  } catch (const flowstab::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const flowstab::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  }
}
