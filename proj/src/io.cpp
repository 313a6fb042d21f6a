#include "rnbohm/io.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace rnbohm {

using nlohmann::json;

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

constexpr char kMagic[8] = {'R', 'N', 'B', 'C', 'K', 'P', 'T', '\0'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

void put_f64(std::string& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

double get_f64(const std::string& in, std::size_t pos) {
  return std::bit_cast<double>(get_u64(in, pos));
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows, const std::string& digest) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_csv: cannot open " + path);
  if (!digest.empty()) out << "# config_digest=" << digest << "\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  if (!out) throw Error("write_csv: write failed for " + path);
}

void write_text(const std::string& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_text: cannot open " + path);
  out << text;
  if (!out) throw Error("write_text: write failed for " + path);
}

std::string checkpoint_bytes(const Checkpoint& ck) {
  json meta;
  meta["format_version"] = kCheckpointVersion;
  meta["geometry"] = {{"M", ck.geometry.M}, {"e", ck.geometry.e}, {"hbar", ck.geometry.hbar},
                      {"m", ck.geometry.m}};
  meta["grid"] = {{"K", ck.grid.K}, {"R_max", ck.grid.R_max}, {"n_theta", ck.grid.n_theta},
                  {"n_phi", ck.grid.n_phi}};
  meta["convention"] = ck.convention;
  meta["n_max"] = ck.state.n_max;
  meta["time"] = ck.state.time;
  std::vector<std::uint64_t> sizes;
  for (const auto& s : ck.state.sectors) sizes.push_back(s.size());
  meta["sector_sizes"] = sizes;
  const std::string m = meta.dump();

  std::string out(kMagic, kMagic + 8);
  put_u64(out, m.size());
  out += m;
  for (const auto& s : ck.state.sectors)
    for (const cplx& z : s) {
      put_f64(out, z.real());
      put_f64(out, z.imag());
    }
  return out;
}

Checkpoint checkpoint_from_bytes(const std::string& in) {
  if (in.size() < 16 || std::memcmp(in.data(), kMagic, 8) != 0)
    throw Error("checkpoint: bad magic");
  const std::uint64_t mlen = get_u64(in, 8);
  if (16 + mlen > in.size()) throw Error("checkpoint: truncated metadata");
  json meta;
  try {
    meta = json::parse(in.substr(16, mlen));
  } catch (const json::parse_error& e) {
    throw Error(std::string("checkpoint: bad metadata: ") + e.what());
  }
  if (meta.value("format_version", -1) != kCheckpointVersion)
    throw Error("checkpoint: unsupported format version");
  Checkpoint ck;
  const auto& g = meta.at("geometry");
  ck.geometry = {g.at("M").get<double>(), g.at("e").get<double>(), g.at("hbar").get<double>(),
                 g.at("m").get<double>()};
  const auto& gr = meta.at("grid");
  ck.grid = {gr.at("K").get<int>(), gr.at("R_max").get<double>(), gr.at("n_theta").get<int>(),
             gr.at("n_phi").get<int>()};
  ck.convention = meta.at("convention").get<std::string>();
  ck.state.n_max = meta.at("n_max").get<int>();
  ck.state.time = meta.at("time").get<double>();
  const auto sizes = meta.at("sector_sizes").get<std::vector<std::uint64_t>>();
  std::size_t pos = 16 + mlen, need = 0;
  for (auto s : sizes) need += 16 * s;
  if (pos + need != in.size()) throw Error("checkpoint: payload size mismatch");
  for (auto s : sizes) {
    std::vector<cplx> v(s);
    for (auto& z : v) {
      z = {get_f64(in, pos), get_f64(in, pos + 8)};
      pos += 16;
    }
    ck.state.sectors.push_back(std::move(v));
  }
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  write_text(path, checkpoint_bytes(ck));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("checkpoint: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_bytes(ss.str());
}

}  // namespace rnbohm
