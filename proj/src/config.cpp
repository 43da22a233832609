#include "flowstab/config.hpp"

#include "flowstab/errors.hpp"
#include "flowstab/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace flowstab {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) throw std::invalid_argument("not a number");
  return v;
}

long to_long(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) throw std::invalid_argument("not an integer");
  return v;
}

struct Field {
  std::string section, key;
  bool synthesis;  ///< part of the synthesis hash
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
  std::function<std::string()> check;  ///< empty string when valid
};

template <class T>
std::string positive(T v, const char* what) {
  return v > 0 ? std::string{} : std::string(what) + " must be positive";
}

std::vector<Field> fields(RunConfig& c) {
  std::vector<Field> f;
  auto dbl = [&f](const char* sec, const char* key, bool syn, double& ref, std::function<std::string(double)> chk) {
    f.push_back({sec, key, syn, [&ref](const std::string& s) { ref = to_double(s); }, [&ref] { return fmt(ref); },
                 [&ref, chk] { return chk ? chk(ref) : std::string{}; }});
  };
  auto integer = [&f](const char* sec, const char* key, bool syn, int& ref, std::function<std::string(int)> chk) {
    f.push_back({sec, key, syn,
                 [&ref](const std::string& s) {
                   const long v = to_long(s);
                   if (v < -1000000000L || v > 1000000000L) throw std::invalid_argument("out of range");
                   ref = static_cast<int>(v);
                 },
                 [&ref] { return std::to_string(ref); }, [&ref, chk] { return chk ? chk(ref) : std::string{}; }});
  };
  auto pos = [](const char* what) { return [what](double v) { return positive(v, what); }; };
  auto ipos = [](const char* what) { return [what](int v) { return positive(v, what); }; };

  dbl("domain", "Lx", true, c.domain.Lx, pos("Lx"));
  dbl("domain", "Ly", true, c.domain.Ly, pos("Ly"));
  integer("domain", "nx", true, c.domain.nx, [](int v) { return v >= 8 ? "" : "nx must be at least 8"; });
  integer("domain", "ny", true, c.domain.ny, [](int v) { return v >= 8 ? "" : "ny must be at least 8"; });

  f.push_back({"patch", "wall", true,
               [&c](const std::string& s) {
                 try {
                   c.patch.wall = wall_from_string(s);
                 } catch (const std::exception&) {
                   throw std::invalid_argument("expected bottom, right, top or left");
                 }
               },
               [&c] { return to_string(c.patch.wall); }, [] { return std::string{}; }});
  auto nonneg = [](const char* what) {
    return [what](double v) { return v >= 0.0 ? std::string{} : std::string(what) + " must be nonnegative"; };
  };
  dbl("patch", "a_c", true, c.patch.a_c, nonneg("a_c"));
  dbl("patch", "b_c", true, c.patch.b_c, nonneg("b_c"));
  dbl("patch", "a_O", true, c.patch.a_O, nonneg("a_O"));
  dbl("patch", "b_O", true, c.patch.b_O, nonneg("b_O"));
  dbl("patch", "eps_chi", true, c.patch.eps_chi, pos("eps_chi"));

  dbl("physics", "nu", true, c.nu, pos("nu"));
  dbl("physics", "lambda", true, c.lambda, pos("lambda"));

  integer("bases", "M", true, c.bases.M, ipos("M"));
  integer("bases", "N_gal", true, c.bases.N_gal, ipos("N_gal"));
  integer("bases", "M_t", true, c.bases.M_t, ipos("M_t"));
  dbl("bases", "svd_tol", true, c.bases.svd_tol,
      [](double v) { return v > 0.0 && v < 1.0 ? "" : "svd_tol must lie in (0, 1)"; });

  f.push_back({"reference", "kind", true,
               [&c](const std::string& s) {
                 if (s != "zero" && s != "periodic" && s != "csv")
                   throw std::invalid_argument("expected zero, periodic or csv");
                 c.reference.kind = s;
               },
               [&c] { return c.reference.kind; }, [] { return std::string{}; }});
  dbl("reference", "a0", true, c.reference.a0, {});
  dbl("reference", "omega", true, c.reference.omega, nonneg("omega"));
  f.push_back({"reference", "path", true, [&c](const std::string& s) { c.reference.path = s; },
               [&c] { return c.reference.path; }, [] { return std::string{}; }});

  dbl("synthesis", "T", true, c.synthesis.T, pos("T"));
  dbl("synthesis", "dt_R", true, c.synthesis.dt_R, pos("dt_R"));
  dbl("synthesis", "dt_A", true, c.synthesis.dt_A, pos("dt_A"));
  dbl("synthesis", "tol_res", true, c.synthesis.tol_res, pos("tol_res"));

  auto& s = c.simulation;
  dbl("simulation", "dt", false, s.dt, pos("dt"));
  dbl("simulation", "dt_reduced", false, s.dt_reduced, pos("dt_reduced"));
  dbl("simulation", "T_sim", false, s.T_sim, pos("T_sim"));
  integer("simulation", "stride", false, s.stride, ipos("stride"));
  integer("simulation", "init_modes", false, s.init_modes, ipos("init_modes"));
  dbl("simulation", "amplitude", false, s.amplitude, pos("amplitude"));
  dbl("simulation", "epsilon", false, s.epsilon, pos("epsilon"));
  dbl("simulation", "kappa_scale", false, s.kappa_scale, nonneg("kappa_scale"));
  f.push_back({"simulation", "seed", false,
               [&s](const std::string& v) {
                 const long x = to_long(v);
                 if (x < 0 || x > 4294967295L) throw std::invalid_argument("seed must fit in 32 bits");
                 s.seed = static_cast<unsigned>(x);
               },
               [&s] { return std::to_string(s.seed); }, [] { return std::string{}; }});
  dbl("simulation", "sweep_start", false, s.sweep_start, pos("sweep_start"));
  dbl("simulation", "sweep_factor", false, s.sweep_factor,
      [](double v) { return v > 1.0 ? "" : "sweep_factor must exceed 1"; });
  integer("simulation", "sweep_count", false, s.sweep_count, ipos("sweep_count"));
  dbl("simulation", "degrade_tol", false, s.degrade_tol, pos("degrade_tol"));
  integer("simulation", "picard_max_iter", false, s.picard_max_iter, ipos("picard_max_iter"));
  dbl("simulation", "picard_tol", false, s.picard_tol, pos("picard_tol"));

  dbl("openloop", "delta", false, c.openloop.delta,
      [](double v) { return v > 0.0 && v < 0.25 ? "" : "delta must lie in (0, 0.25)"; });
  integer("openloop", "intervals", false, c.openloop.intervals,
          [](int v) { return v >= 2 ? "" : "intervals must be at least 2"; });
  dbl("openloop", "dt", false, c.openloop.dt, pos("dt"));
  return f;
}

struct Located {
  std::string origin;
  std::map<std::string, int> lines;  ///< "section.key" -> line
  std::string where(const std::string& sk) const {
    const auto it = lines.find(sk);
    return it == lines.end() ? origin + ": " : origin + ":" + std::to_string(it->second) + ": ";
  }
};

void validate_located(RunConfig& cfg, const Located& loc) {
  for (const auto& fd : fields(cfg)) {
    const std::string err = fd.check();
    if (!err.empty()) throw InputError(loc.where(fd.section + "." + fd.key) + err);
  }
  const auto& p = cfg.patch;
  const double L = (p.wall == Wall::Bottom || p.wall == Wall::Top) ? cfg.domain.Lx : cfg.domain.Ly;
  if (!(p.a_O < p.a_c && p.a_c < p.b_c && p.b_c < p.b_O))
    throw InputError(loc.where("patch.b_c") + "patch must satisfy a_O < a_c < b_c < b_O");
  if (p.b_O > L) throw InputError(loc.where("patch.b_O") + "b_O exceeds the wall length");
  const int nodes = (cfg.domain.nx - 1) * (cfg.domain.ny - 1);
  if (cfg.bases.N_gal > nodes)
    throw InputError(loc.where("bases.N_gal") + "N_gal exceeds the number of interior grid nodes");
  if (cfg.simulation.init_modes > cfg.bases.N_gal)
    throw InputError(loc.where("simulation.init_modes") + "init_modes exceeds N_gal");
  if (cfg.synthesis.dt_R > cfg.synthesis.T)
    throw InputError(loc.where("synthesis.dt_R") + "dt_R exceeds the synthesis horizon");
  if (cfg.simulation.T_sim > cfg.synthesis.T + 1e-12)
    throw InputError(loc.where("simulation.T_sim") + "T_sim exceeds the synthesis horizon T");
  if (cfg.reference.kind == "csv" && cfg.reference.path.empty())
    throw InputError(loc.where("reference.kind") + "reference kind csv needs a path");
}

}  // namespace

std::string RunConfig::canonical() const {
  RunConfig copy = *this;
  std::string out;
  for (const auto& fd : fields(copy)) out += fd.section + "." + fd.key + "=" + fd.get() + "\n";
  return out;
}

std::string RunConfig::synthesis_hash() const {
  RunConfig copy = *this;
  std::string out;
  for (const auto& fd : fields(copy))
    if (fd.synthesis) out += fd.section + "." + fd.key + "=" + fd.get() + "\n";
  return hex64(fnv1a64(out));
}

std::string RunConfig::full_hash() const { return hex64(fnv1a64(canonical())); }

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  auto fl = fields(cfg);
  std::map<std::string, Field*> by_name;
  std::map<std::string, bool> sections;
  for (auto& fd : fl) {
    by_name[fd.section + "." + fd.key] = &fd;
    sections[fd.section] = true;
  }
  Located loc{origin, {}};
  std::istringstream in(text);
  std::string raw, section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find_first_of("#;");
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    const std::string at = origin + ":" + std::to_string(lineno) + ": ";
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw InputError(at + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) throw InputError(at + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(at + "expected key = value");
    if (section.empty()) throw InputError(at + "key outside of any section");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const std::string name = section + "." + key;
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw InputError(at + "unknown key '" + key + "' in [" + section + "]");
    if (loc.lines.count(name)) throw InputError(at + "duplicate key '" + key + "'");
    try {
      it->second->set(value);
    } catch (const std::invalid_argument& e) {
      throw InputError(at + "bad value for " + key + " ('" + value + "'): " + e.what());
    }
    loc.lines[name] = lineno;
  }
  validate_located(cfg, loc);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  if (!std::filesystem::exists(path)) throw InputError("config file not found: " + path);
  RunConfig cfg = parse_config(read_text(path), path);
  if (cfg.reference.kind == "csv") {
    const std::filesystem::path p(cfg.reference.path);
    if (p.is_relative()) cfg.reference.path = (std::filesystem::path(path).parent_path() / p).string();
  }
  return cfg;
}

void validate(const RunConfig& cfg) {
  RunConfig copy = cfg;
  validate_located(copy, Located{"<config>", {}});
}

}  // namespace flowstab
