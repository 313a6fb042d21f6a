#include <doctest.h>

#include "rnbohm/config.hpp"
#include "rnbohm/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rnbohm;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rnbohm_unit_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config: defaults and round trip") {
  const RunConfig a = config_from_json_text(R"({"seed": 5})");
  CHECK(a.seed.value() == 5);
  CHECK(a.grid.K == 12);
  const RunConfig b = config_from_json_text(config_to_json(a));
  CHECK(config_to_json(a) == config_to_json(b));
  CHECK(config_digest(a) == config_digest(b));
}

TEST_CASE("config: digest ignores the output directory only") {
  RunConfig a = config_from_json_text(R"({"seed": 5})");
  RunConfig b = a;
  b.out_dir = "elsewhere";
  CHECK(config_digest(a) == config_digest(b));
  b.dt = 0.002;
  CHECK(config_digest(a) != config_digest(b));
  CHECK(config_digest(a).size() == 64);
}

TEST_CASE("config: validation names the field") {
  auto msg = [](const std::string& text) {
    try {
      config_from_json_text(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(msg(R"({"seed": 1, "geometry": {"M": 2.0, "e": 1.0}})").find("super-extremal") !=
        std::string::npos);
  CHECK(msg(R"({"seed": 1, "dt": -1})").find("dt") != std::string::npos);
  CHECK(msg(R"({"seed": 1, "grid": {"K": 1}})").find("K") != std::string::npos);
  CHECK(msg(R"({"seed": 1, "bogus": 3})").find("bogus") != std::string::npos);
  CHECK(msg(R"({"dt": 0.001})").find("seed") != std::string::npos);
  CHECK(msg("{not json").find("JSON") != std::string::npos);
}

TEST_CASE("sha256 of a known string") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("csv output is deterministic") {
  const fs::path dir = scratch("csv");
  const std::vector<std::string> header{"a", "b"};
  const std::vector<std::vector<std::string>> rows{{fmt_double(0.1), fmt_double(1.0 / 3.0)},
                                                   {fmt_double(-2.5e-300), "x"}};
  write_csv((dir / "one.csv").string(), header, rows, "abc");
  write_csv((dir / "two.csv").string(), header, rows, "abc");
  const std::string s = slurp(dir / "one.csv");
  CHECK(s == slurp(dir / "two.csv"));
  CHECK(s.rfind("# config_digest=abc\na,b\n", 0) == 0);
  CHECK(std::stod(fmt_double(1.0 / 3.0)) == 1.0 / 3.0);
  fs::remove_all(dir);
}

TEST_CASE("checkpoint round trip is byte identical") {
  const Geometry geo(GeometryParams{});
  const GridSpec gs{3, 1.5, 2, 2};
  const SpatialGrid grid(gs, geo);
  Checkpoint ck{GeometryParams{}, gs, "constant", make_zero_state(grid, 2)};
  ck.state.time = 0.125;
  Rng rng = make_rng(3, 0);
  std::normal_distribution<double> nd;
  for (auto& v : ck.state.sectors)
    for (auto& z : v) z = {nd(rng), nd(rng)};
  const fs::path dir = scratch("ckpt");
  save_checkpoint((dir / "a.bin").string(), ck);
  const Checkpoint back = load_checkpoint((dir / "a.bin").string());
  CHECK(back.state.time == ck.state.time);
  CHECK(back.convention == "constant");
  CHECK(back.grid.K == 3);
  REQUIRE(back.state.sectors.size() == ck.state.sectors.size());
  for (std::size_t n = 0; n < ck.state.sectors.size(); ++n) CHECK(back.state.sectors[n] == ck.state.sectors[n]);
  save_checkpoint((dir / "b.bin").string(), back);
  CHECK(slurp(dir / "a.bin") == slurp(dir / "b.bin"));
  CHECK(slurp(dir / "a.bin").substr(0, 7) == "RNBCKPT");
  std::string bytes = checkpoint_bytes(ck);
  bytes[0] = 'X';
  CHECK_THROWS(checkpoint_from_bytes(bytes));
  CHECK_THROWS(checkpoint_from_bytes(checkpoint_bytes(ck).substr(0, 40)));
  fs::remove_all(dir);
}
