#pragma once

#include "flowstab/control_basis.hpp"
#include "flowstab/field_ops.hpp"
#include "flowstab/riccati.hpp"
#include "flowstab/simulators.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>

namespace flowstab {

namespace fs = std::filesystem;

/// Matrix CSV: "# rows cols" then comma-separated rows with %.17g values.
void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const fs::path& path);

std::uint64_t fnv1a64(const std::string& text);
std::string hex64(std::uint64_t h);

/// Writes text atomically enough for a single-process CLI (truncate + write).
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

/// Gain cache: index.csv (sample, t), R.csv with one row per sample holding
/// the upper triangle row by row, and meta.json with the config hash.
void save_gain(const fs::path& dir, const RiccatiGain& gain, const std::string& config_hash);
/// Throws InputError when the directory is missing or the hash differs.
RiccatiGain load_gain(const fs::path& dir, const std::string& config_hash);

void save_control_basis(const fs::path& dir, const ControlBasis& basis, const std::string& config_hash);
void save_stokes(const fs::path& dir, const StokesBasis& stokes, const std::string& config_hash);
StokesBasis load_stokes(const fs::path& dir, const std::string& config_hash);

/// run.json (metadata plus `summary`), timeseries.csv and, when requested,
/// snapshots/NNNNNN.csv of the interior face values.
void write_run(const fs::path& dir, const SimRun& run, const std::string& summary_json,
               bool write_snapshots = true);

/// Reads the config hash stored in a meta.json or run.json; empty if absent.
std::string stored_hash(const fs::path& json_file);

}  // namespace flowstab
