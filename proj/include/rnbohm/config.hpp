#pragma once

#include "rnbohm/bohm.hpp"
#include "rnbohm/states.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rnbohm {

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  int schema_version = kSchemaVersion;
  GeometryParams geometry;
  GridSpec grid{12, 6.0, 2, 2};
  int n_max = 2;
  std::string profile = "constant";
  double dt = 0.001;
  double horizon = 0.08;
  int snapshot_stride = 1;
  SolverOptions solver;
  PacketSpec state;
  ProcessOptions process;
  int n_traj = 2000;
  int n_checkpoints = 4;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::vector<std::string> experiments;
  // a priori statistical thresholds
  double p_min = 0.01;
  double tv_max = 0.05;
  double sigma_max = 3.0;

  // Throws ConfigError with the offending field name.
  void validate() const;
};

// Missing keys take the defaults above; unknown keys are rejected.
RunConfig config_from_json_text(const std::string& text);
RunConfig parse_config(const std::string& path);

// Normalized JSON: every field present, keys sorted, 17 significant digits.
std::string config_to_json(const RunConfig& cfg, bool include_out_dir = true);

// SHA-256 (hex) of the normalized content without the output directory.
std::string config_digest(const RunConfig& cfg);

std::string sha256_hex(const std::string& bytes);

}  // namespace rnbohm
