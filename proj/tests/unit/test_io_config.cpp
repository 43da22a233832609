#include "flowstab/config.hpp"
#include "flowstab/errors.hpp"
#include "flowstab/io.hpp"
#include "flowstab/workflow.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

using namespace flowstab;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("flowstab_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string default_ini() { return read_text(FLOWSTAB_SOURCE_DIR "/configs/default.ini"); }

std::string replace_line(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

int line_of(const std::string& text, const std::string& needle) {
  const auto pos = text.find(needle);
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + pos, '\n'));
}

}  // namespace

TEST_CASE("matrix CSV round trip is bit exact") {
  const fs::path dir = scratch("csv");
  std::mt19937 rng(1);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(5, 3);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = g(rng) * std::pow(10.0, i % 7 - 3);
  m(0, 0) = 0.1;
  m(1, 1) = -0.0;
  write_matrix_csv(dir / "m.csv", m);
  const Eigen::MatrixXd r = read_matrix_csv(dir / "m.csv");
  REQUIRE(r.rows() == 5);
  REQUIRE(r.cols() == 3);
  for (int i = 0; i < m.size(); ++i) CHECK(r.data()[i] == m.data()[i]);
  CHECK_THROWS_AS(read_matrix_csv(dir / "missing.csv"), InputError);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
}

TEST_CASE("default config parses to the built-in defaults") {
  const RunConfig cfg = parse_config(default_ini(), "default.ini");
  const RunConfig def;
  CHECK(cfg.domain.nx == 24);
  CHECK(cfg.bases.N_gal == 24);
  CHECK(cfg.patch.wall == Wall::Bottom);
  CHECK(cfg.nu == 0.025);
  CHECK(cfg.synthesis.dt_R == 0.012);
  CHECK(cfg.synthesis_hash() == def.synthesis_hash());
}

TEST_CASE("config errors carry file and line") {
  const std::string ini = default_ini();
  SUBCASE("lambda") {
    const std::string bad = replace_line(ini, "lambda = 1.0", "lambda = 0");
    const std::string where = "cfg.ini:" + std::to_string(line_of(bad, "lambda = 0")) + ": ";
    CHECK_THROWS_WITH_AS(parse_config(bad, "cfg.ini"), (where + "lambda must be positive").c_str(), InputError);
  }
  SUBCASE("unknown key") {
    const std::string bad = replace_line(ini, "nx = 24", "nxx = 24");
    const std::string where = "cfg.ini:" + std::to_string(line_of(bad, "nxx")) + ": ";
    CHECK_THROWS_WITH_AS(parse_config(bad, "cfg.ini"), (where + "unknown key 'nxx' in [domain]").c_str(),
                         InputError);
  }
  SUBCASE("coarse grid") {
    CHECK_THROWS_AS(parse_config(replace_line(ini, "nx = 24", "nx = 4"), "cfg.ini"), InputError);
  }
  SUBCASE("duplicate key") {
    CHECK_THROWS_AS(parse_config(replace_line(ini, "ny = 24", "ny = 24\nnx = 24"), "cfg.ini"), InputError);
  }
  SUBCASE("patch order") {
    CHECK_THROWS_AS(parse_config(replace_line(ini, "a_O = 0.15", "a_O = 0.2"), "cfg.ini"), InputError);
  }
  SUBCASE("unknown section") {
    CHECK_THROWS_AS(parse_config(ini + "\n[extra]\n", "cfg.ini"), InputError);
  }
  SUBCASE("bad number") {
    CHECK_THROWS_AS(parse_config(replace_line(ini, "nu = 0.025", "nu = fast"), "cfg.ini"), InputError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_config("/nonexistent/flowstab.ini"), InputError); }
}

TEST_CASE("hashes react to the right keys") {
  const RunConfig a;
  RunConfig b = a;
  b.simulation.seed = 99;
  CHECK(a.synthesis_hash() == b.synthesis_hash());
  CHECK(a.full_hash() != b.full_hash());
  b = a;
  b.lambda = 1.5;
  CHECK(a.synthesis_hash() != b.synthesis_hash());
  b = a;
  b.patch.a_c = 0.21;
  CHECK(a.synthesis_hash() != b.synthesis_hash());
}

TEST_CASE("gain and Stokes caches round trip and refuse other configs") {
  const fs::path dir = scratch("cache");
  const auto& p = fixtures::small_plant();
  const auto& g = fixtures::small_gain();
  save_gain(dir / "gain", g, "abc");
  const RiccatiGain r = load_gain(dir / "gain", "abc");
  REQUIRE(r.R.size() == g.R.size());
  CHECK(r.n_x == g.n_x);
  CHECK(r.n_k == g.n_k);
  CHECK(r.lambda == g.lambda);
  for (size_t k = 0; k < g.R.size(); ++k) {
    CHECK(r.times[k] == g.times[k]);
    CHECK((r.R[k] - g.R[k]).cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + g.R[k].cwiseAbs().maxCoeff()));
  }
  CHECK(fs::exists(dir / "gain" / "index.csv"));
  CHECK(stored_hash(dir / "gain" / "meta.json") == "abc");
  CHECK_THROWS_AS(load_gain(dir / "gain", "other"), InputError);
  CHECK_THROWS_AS(load_gain(dir / "nothing", "abc"), InputError);

  save_stokes(dir / "stokes", p.stokes, "abc");
  const StokesBasis s = load_stokes(dir / "stokes", "abc");
  CHECK((s.E - p.stokes.E).norm() == 0.0);
  CHECK((s.alpha - p.stokes.alpha).norm() == 0.0);
  CHECK(s.mass_weight == p.stokes.mass_weight);
  CHECK_THROWS_AS(load_stokes(dir / "stokes", "other"), InputError);
}

TEST_CASE("run artifacts") {
  const fs::path dir = scratch("run");
  const auto& p = fixtures::small_plant();
  const InitialState s = p.initial_state(1e-3, 2);
  FullSimOptions o;
  o.T = 0.2;
  o.dt = 5e-3;
  o.stride = 10;
  const SimRun r = simulate_full_linear(p.full(), fixtures::small_gain(), s.v0, s.kappa0, o);
  write_run(dir, r, "{\"decay_rate\": 1.0}");
  CHECK(fs::exists(dir / "run.json"));
  CHECK(fs::exists(dir / "timeseries.csv"));
  CHECK(fs::exists(dir / "snapshots" / "000000.csv"));
  const Eigen::MatrixXd snap = read_matrix_csv(dir / "snapshots" / "000000.csv");
  CHECK(snap.size() == p.ops->domain().num_interior());
  CHECK(read_text(dir / "run.json").find("decay_rate") != std::string::npos);
}

TEST_CASE("synthesize and simulate from the workflow") {
  const fs::path dir = scratch("workflow");
  Options opt{fixtures::small_config(), dir / "a", true};
  CHECK(cmd_synthesize(opt) == 0);
  CHECK(fs::exists(opt.out / "cache" / "gain" / "index.csv"));
  CHECK(fs::exists(opt.out / "synthesis.json"));

  Options again = opt;
  again.out = dir / "b";
  CHECK(cmd_synthesize(again) == 0);
  CHECK(read_text(opt.out / "cache" / "gain" / "R.csv") == read_text(again.out / "cache" / "gain" / "R.csv"));

  CHECK(cmd_simulate(opt, "reduced") == 0);
  CHECK(read_text(opt.out / "runs" / "reduced" / "run.json").find("decay_rate") != std::string::npos);
  CHECK(cmd_simulate(opt, "openloop") == 0);
  CHECK(fs::exists(opt.out / "runs" / "openloop" / "rho.csv"));
  CHECK_THROWS_AS(cmd_simulate(opt, "sideways"), InputError);

  // a run with a different synthesis config must not reuse the cache
  Options other = opt;
  other.cfg.lambda = 2.0;
  CHECK_THROWS_AS(cmd_simulate(other, "reduced"), InputError);
  Options empty = opt;
  empty.out = dir / "c";
  CHECK_THROWS_AS(cmd_simulate(empty, "reduced"), InputError);

  // large data are reported, not raised
  Options big = opt;
  big.cfg.simulation.amplitude = 1e4;
  big.cfg.simulation.sweep_count = 1;
  CHECK(cmd_simulate(big, "nonlinear") == 0);
  CHECK(read_text(opt.out / "runs" / "nonlinear" / "run.json").find("diverged") != std::string::npos);
}

TEST_CASE("appendix suite passes on the coarse fixture") {
  for (const Check& c : run_suite(fixtures::small_config(), "appendix")) {
    INFO(c.name << " = " << c.value);
    CHECK(c.pass);
  }
}
