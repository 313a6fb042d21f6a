#pragma once

#include "rnbohm/fock.hpp"
#include "rnbohm/geometry.hpp"
#include "rnbohm/grid.hpp"

#include <string>
#include <vector>

namespace rnbohm {

inline constexpr int kCheckpointVersion = 1;

// 17 significant digits.
std::string fmt_double(double x);

// Writes "# config_digest=<digest>" when digest is nonempty, then the header
// row and the data rows, comma separated. Creates parent directories.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows, const std::string& digest = {});

void write_text(const std::string& path, const std::string& text);

struct Checkpoint {
  GeometryParams geometry;
  GridSpec grid;
  std::string convention;
  FockState state;
};

// Layout: 8-byte magic "RNBCKPT\0", little-endian uint64 metadata length,
// metadata JSON, then every sector as little-endian (re, im) double pairs.
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

std::string checkpoint_bytes(const Checkpoint& ck);
Checkpoint checkpoint_from_bytes(const std::string& bytes);

}  // namespace rnbohm
