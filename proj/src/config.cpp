#include "rnbohm/config.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rnbohm {

using nlohmann::json;

namespace {

// Reads obj[key] into out if present and removes it from the pending key set.
template <typename T>
void take(const json& obj, const std::string& section, const char* key, T& out,
          std::set<std::string>& seen) {
  seen.insert(key);
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(section + "." + key + ": " + e.what());
  }
}

void reject_unknown(const json& obj, const std::string& section,
                    const std::set<std::string>& seen) {
  for (const auto& [k, v] : obj.items())
    if (!seen.count(k)) throw ConfigError("unknown key " + section + "." + k);
}

const json& section_of(const json& root, const char* name, const json& empty) {
  if (!root.contains(name)) return empty;
  const json& s = root.at(name);
  if (!s.is_object()) throw ConfigError(std::string(name) + ": expected an object");
  return s;
}

}  // namespace

void RunConfig::validate() const {
  if (schema_version != kSchemaVersion)
    throw ConfigError("schema_version: unsupported value " + std::to_string(schema_version));
  if (!(std::abs(geometry.e) > geometry.M))
    throw ConfigError(
        "geometry.e: the super-extremal case requires |e| > M (no horizon, timelike r = 0)");
  geometry.validate();
  grid.validate();
  if (n_max < 1) throw ConfigError("n_max: must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("dt: must be positive");
  if (!(horizon > 0.0)) throw ConfigError("horizon: must be positive");
  if (snapshot_stride < 1) throw ConfigError("snapshot_stride: must be >= 1");
  if (!(solver.tol > 0.0)) throw ConfigError("solver.tol: must be positive");
  if (solver.max_iter < 1) throw ConfigError("solver.max_iter: must be >= 1");
  if (profile != "constant" && profile != "rotated" && profile != "twisted")
    throw ConfigError("profile: expected constant, rotated or twisted");
  if (n_traj < 1) throw ConfigError("n_traj: must be >= 1");
  if (n_checkpoints < 1) throw ConfigError("n_checkpoints: must be >= 1");
  if (!seed) throw ConfigError("seed: required for reproducibility");
  if (!(p_min > 0.0 && p_min < 1.0)) throw ConfigError("p_min: must lie in (0, 1)");
  if (!(tv_max > 0.0)) throw ConfigError("tv_max: must be positive");
  if (!(sigma_max > 0.0)) throw ConfigError("sigma_max: must be positive");
  if (!(state.width > 0.0)) throw ConfigError("state.width: must be positive");
  if (state.dress_width < 0.0) throw ConfigError("state.dress_width: must be >= 0");
  if (!(process.rk_tol > 0.0)) throw ConfigError("process.rk_tol: must be positive");
  if (!(process.bound_safety >= 1.0)) throw ConfigError("process.bound_safety: must be >= 1");
}

RunConfig config_from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  const json empty = json::object();
  RunConfig c;
  std::set<std::string> seen;

  take(root, "", "schema_version", c.schema_version, seen);
  take(root, "", "n_max", c.n_max, seen);
  take(root, "", "profile", c.profile, seen);
  take(root, "", "dt", c.dt, seen);
  take(root, "", "horizon", c.horizon, seen);
  take(root, "", "snapshot_stride", c.snapshot_stride, seen);
  take(root, "", "n_traj", c.n_traj, seen);
  take(root, "", "n_checkpoints", c.n_checkpoints, seen);
  take(root, "", "out_dir", c.out_dir, seen);
  take(root, "", "experiments", c.experiments, seen);
  take(root, "", "p_min", c.p_min, seen);
  take(root, "", "tv_max", c.tv_max, seen);
  take(root, "", "sigma_max", c.sigma_max, seen);
  seen.insert("seed");
  if (root.contains("seed") && !root.at("seed").is_null()) {
    if (!root.at("seed").is_number_unsigned())
      throw ConfigError("seed: expected a non-negative integer");
    c.seed = root.at("seed").get<std::uint64_t>();
  }

  {
    std::set<std::string> s;
    const json& g = section_of(root, "geometry", empty);
    take(g, "geometry", "M", c.geometry.M, s);
    take(g, "geometry", "e", c.geometry.e, s);
    take(g, "geometry", "hbar", c.geometry.hbar, s);
    take(g, "geometry", "m", c.geometry.m, s);
    reject_unknown(g, "geometry", s);
    seen.insert("geometry");
  }
  {
    std::set<std::string> s;
    const json& g = section_of(root, "grid", empty);
    take(g, "grid", "K", c.grid.K, s);
    take(g, "grid", "R_max", c.grid.R_max, s);
    take(g, "grid", "n_theta", c.grid.n_theta, s);
    take(g, "grid", "n_phi", c.grid.n_phi, s);
    reject_unknown(g, "grid", s);
    seen.insert("grid");
  }
  {
    std::set<std::string> s;
    const json& g = section_of(root, "solver", empty);
    take(g, "solver", "tol", c.solver.tol, s);
    take(g, "solver", "max_iter", c.solver.max_iter, s);
    reject_unknown(g, "solver", s);
    seen.insert("solver");
  }
  {
    std::set<std::string> s;
    const json& g = section_of(root, "state", empty);
    take(g, "state", "psi0", c.state.psi0, s);
    take(g, "state", "w1", c.state.w1, s);
    take(g, "state", "w2", c.state.w2, s);
    take(g, "state", "r_center", c.state.r_center, s);
    take(g, "state", "width", c.state.width, s);
    take(g, "state", "incoming", c.state.incoming, s);
    take(g, "state", "outgoing", c.state.outgoing, s);
    take(g, "state", "theta_tilt", c.state.theta_tilt, s);
    take(g, "state", "dress_width", c.state.dress_width, s);
    reject_unknown(g, "state", s);
    seen.insert("state");
  }
  {
    std::set<std::string> s;
    const json& g = section_of(root, "process", empty);
    take(g, "process", "r_hit", c.process.r_hit, s);
    take(g, "process", "r_birth", c.process.r_birth, s);
    take(g, "process", "rk_tol", c.process.rk_tol, s);
    take(g, "process", "h_min", c.process.h_min, s);
    take(g, "process", "bound_safety", c.process.bound_safety, s);
    take(g, "process", "min_density", c.process.min_density, s);
    take(g, "process", "max_retries", c.process.max_retries, s);
    reject_unknown(g, "process", s);
    seen.insert("process");
  }
  reject_unknown(root, "", seen);
  c.validate();
  return c;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json(const RunConfig& c, bool include_out_dir) {
  json j;  // nlohmann::json objects keep keys sorted
  j["schema_version"] = c.schema_version;
  j["geometry"] = {{"M", c.geometry.M}, {"e", c.geometry.e}, {"hbar", c.geometry.hbar},
                   {"m", c.geometry.m}};
  j["grid"] = {{"K", c.grid.K}, {"R_max", c.grid.R_max}, {"n_theta", c.grid.n_theta},
               {"n_phi", c.grid.n_phi}};
  j["n_max"] = c.n_max;
  j["profile"] = c.profile;
  j["dt"] = c.dt;
  j["horizon"] = c.horizon;
  j["snapshot_stride"] = c.snapshot_stride;
  j["solver"] = {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}};
  j["state"] = {{"psi0", c.state.psi0},         {"w1", c.state.w1},
                {"w2", c.state.w2},             {"r_center", c.state.r_center},
                {"width", c.state.width},       {"incoming", c.state.incoming},
                {"outgoing", c.state.outgoing}, {"theta_tilt", c.state.theta_tilt},
                {"dress_width", c.state.dress_width}};
  j["process"] = {{"r_hit", c.process.r_hit},
                  {"r_birth", c.process.r_birth},
                  {"rk_tol", c.process.rk_tol},
                  {"h_min", c.process.h_min},
                  {"bound_safety", c.process.bound_safety},
                  {"min_density", c.process.min_density},
                  {"max_retries", c.process.max_retries}};
  j["n_traj"] = c.n_traj;
  j["n_checkpoints"] = c.n_checkpoints;
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["experiments"] = c.experiments;
  j["p_min"] = c.p_min;
  j["tv_max"] = c.tv_max;
  j["sigma_max"] = c.sigma_max;
  if (include_out_dir) j["out_dir"] = c.out_dir;
  return j.dump(2);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string config_digest(const RunConfig& cfg) { return sha256_hex(config_to_json(cfg, false)); }

}  // namespace rnbohm
