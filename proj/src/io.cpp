#include "flowstab/io.hpp"

#include "flowstab/errors.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace flowstab {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw InputError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void check_hash(const fs::path& dir, const std::string& expected) {
  const fs::path meta = dir / "meta.json";
  if (!fs::exists(meta))
    throw InputError("synthesis cache missing in " + dir.string() + "; run `flowstab synthesize` first");
  const std::string got = stored_hash(meta);
  if (got != expected)
    throw InputError("cache in " + dir.string() + " was built for config " + got + ", current config is " +
                     expected + "; rerun `flowstab synthesize`");
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
  if (!f) throw InputError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
  std::string out = "# " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += fmt(m(i, j));
    }
    out += '\n';
  }
  write_text(path, out);
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line) || line.size() < 2 || line[0] != '#')
    throw InputError(path.string() + ":1: expected '# rows cols' header");
  long rows = -1, cols = -1;
  {
    std::istringstream hs(line.substr(1));
    if (!(hs >> rows >> cols) || rows < 0 || cols < 0)
      throw InputError(path.string() + ":1: bad matrix header");
  }
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (!std::getline(f, line)) throw InputError(path.string() + ": expected " + std::to_string(rows) + " rows");
    std::istringstream ls(line);
    std::string cell;
    long j = 0;
    while (std::getline(ls, cell, ',')) {
      if (j >= cols) throw InputError(path.string() + ":" + std::to_string(i + 2) + ": too many columns");
      try {
        size_t used = 0;
        m(i, j) = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw InputError(path.string() + ":" + std::to_string(i + 2) + ": bad number '" + cell + "'");
      }
      ++j;
    }
    if (j != cols) throw InputError(path.string() + ":" + std::to_string(i + 2) + ": too few columns");
  }
  return m;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string stored_hash(const fs::path& json_file) {
  if (!fs::exists(json_file)) return {};
  const json j = read_json(json_file);
  return j.value("config_hash", std::string{});
}

void save_gain(const fs::path& dir, const RiccatiGain& gain, const std::string& config_hash) {
  ensure_dir(dir);
  const int n = gain.n();
  const int packed = n * (n + 1) / 2;
  Eigen::MatrixXd table(static_cast<Eigen::Index>(gain.R.size()), packed);
  std::string index = "sample,t\n";
  for (size_t k = 0; k < gain.R.size(); ++k) {
    int c = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) table(static_cast<Eigen::Index>(k), c++) = gain.R[k](i, j);
    index += std::to_string(k) + "," + fmt(gain.times[k]) + "\n";
  }
  write_text(dir / "index.csv", index);
  write_matrix_csv(dir / "R.csv", table);
  json meta = {{"config_hash", config_hash}, {"n_x", gain.n_x},        {"n_k", gain.n_k},
               {"lambda", gain.lambda},      {"samples", gain.R.size()}, {"max_gain_norm", gain.max_gain_norm()}};
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

RiccatiGain load_gain(const fs::path& dir, const std::string& config_hash) {
  check_hash(dir, config_hash);
  const json meta = read_json(dir / "meta.json");
  RiccatiGain gain;
  gain.n_x = meta.at("n_x").get<int>();
  gain.n_k = meta.at("n_k").get<int>();
  gain.lambda = meta.at("lambda").get<double>();
  const int n = gain.n();
  const Eigen::MatrixXd table = read_matrix_csv(dir / "R.csv");
  if (table.cols() != n * (n + 1) / 2) throw InputError("gain table in " + dir.string() + " has wrong width");

  std::ifstream f(dir / "index.csv");
  std::string line;
  std::getline(f, line);
  while (std::getline(f, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    gain.times.push_back(std::stod(line.substr(comma + 1)));
  }
  if (static_cast<Eigen::Index>(gain.times.size()) != table.rows())
    throw InputError("gain index and table disagree in " + dir.string());
  for (Eigen::Index k = 0; k < table.rows(); ++k) {
    Eigen::MatrixXd r(n, n);
    int c = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) r(i, j) = r(j, i) = table(k, c++);
    gain.R.push_back(r);
  }
  return gain;
}

void save_control_basis(const fs::path& dir, const ControlBasis& basis, const std::string& config_hash) {
  ensure_dir(dir);
  write_matrix_csv(dir / "Xi.csv", basis.Xi);
  write_matrix_csv(dir / "P_N.csv", basis.P_N);
  write_matrix_csv(dir / "P_Nperp.csv", basis.P_Nperp);
  write_matrix_csv(dir / "Q_f.csv", basis.Q_f);
  write_matrix_csv(dir / "Q_l.csv", basis.Q_l);
  write_matrix_csv(dir / "perp_basis.csv", basis.perp_basis);
  json meta = {{"config_hash", config_hash},
               {"M", basis.M},
               {"dim_kernel", basis.dim_kernel()},
               {"dim_perp", basis.dim_perp()},
               {"min_perp_singular", basis.min_perp_singular}};
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

void save_stokes(const fs::path& dir, const StokesBasis& stokes, const std::string& config_hash) {
  ensure_dir(dir);
  write_matrix_csv(dir / "E.csv", stokes.E);
  write_matrix_csv(dir / "q.csv", stokes.q);
  Eigen::MatrixXd ev(stokes.N_gal, 2);
  ev.col(0) = stokes.mu;
  ev.col(1) = stokes.alpha;
  write_matrix_csv(dir / "eigenvalues.csv", ev);
  json meta = {{"config_hash", config_hash}, {"N_gal", stokes.N_gal},      {"nu", stokes.nu},
               {"mass_weight", stokes.mass_weight}, {"max_residual", stokes.max_residual}};
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

StokesBasis load_stokes(const fs::path& dir, const std::string& config_hash) {
  check_hash(dir, config_hash);
  const json meta = read_json(dir / "meta.json");
  StokesBasis s;
  s.N_gal = meta.at("N_gal").get<int>();
  s.nu = meta.at("nu").get<double>();
  s.mass_weight = meta.at("mass_weight").get<double>();
  s.max_residual = meta.at("max_residual").get<double>();
  s.E = read_matrix_csv(dir / "E.csv");
  s.q = read_matrix_csv(dir / "q.csv");
  const Eigen::MatrixXd ev = read_matrix_csv(dir / "eigenvalues.csv");
  if (ev.rows() != s.N_gal || ev.cols() != 2 || s.E.cols() != s.N_gal)
    throw InputError("Stokes cache in " + dir.string() + " is inconsistent");
  s.mu = ev.col(0);
  s.alpha = ev.col(1);
  return s;
}

void write_run(const fs::path& dir, const SimRun& run, const std::string& summary_json, bool write_snapshots) {
  ensure_dir(dir);
  std::string ts = "t,norm_pi,norm_h1,norm_kappa,norm_kdot,cost\n";
  for (int k = 0; k < run.steps(); ++k) {
    ts += fmt(run.t[k]) + "," + fmt(run.norm_pi[k]) + "," + fmt(run.norm_h1[k]) + "," + fmt(run.norm_kappa[k]) +
          "," + fmt(run.norm_kdot[k]) + "," + fmt(run.cost[k]) + "\n";
  }
  write_text(dir / "timeseries.csv", ts);

  if (!run.kappa.empty()) {
    Eigen::MatrixXd kap(run.steps(), 1 + 2 * run.kappa.front().size());
    for (int k = 0; k < run.steps(); ++k) {
      kap(k, 0) = run.t[k];
      kap.row(k).segment(1, run.kappa[k].size()) = run.kappa[k].transpose();
      kap.row(k).tail(run.kdot[k].size()) = run.kdot[k].transpose();
    }
    write_matrix_csv(dir / "controls.csv", kap);
  }

  json meta;
  meta["kind"] = run.kind;
  meta["status"] = run.status;
  meta["kappa_rule"] = run.kappa_rule;
  meta["dt"] = run.dt;
  meta["lambda"] = run.lambda;
  meta["steps"] = run.steps();
  meta["stride"] = run.stride;
  meta["max_trace_defect"] = run.max_trace_defect;
  if (!summary_json.empty()) {
    const json extra = json::parse(summary_json);
    for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
  }
  if (write_snapshots && !run.snapshots.empty()) {
    json snaps = json::array();
    for (size_t s = 0; s < run.snapshots.size(); ++s) {
      char name[32];
      std::snprintf(name, sizeof name, "%06d.csv", run.snapshot_steps[s]);
      write_matrix_csv(dir / "snapshots" / name, run.snapshots[s]);
      snaps.push_back({{"step", run.snapshot_steps[s]}, {"file", std::string("snapshots/") + name}});
    }
    meta["snapshots"] = snaps;
  }
  write_text(dir / "run.json", meta.dump(2) + "\n");
}

}  // namespace flowstab
