// rnbohm: command-line driver for the simulator and the verification suites.

#include "rnbohm/experiments.hpp"
#include "rnbohm/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <iostream>

using namespace rnbohm;

namespace {

constexpr const char* kOutEnv = "RNBOHM_OUT";

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
};

RunConfig load(const Globals& g) {
  RunConfig cfg;
  if (!g.config_path.empty()) {
    // the seed may come from the command line, so validate after overriding
    std::ifstream in(g.config_path);
    if (!in) throw ConfigError("config: cannot open " + g.config_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    auto j = nlohmann::json::parse(ss.str(), nullptr, false);
    if (j.is_discarded()) throw ConfigError("config: malformed JSON in " + g.config_path);
    if (g.seed) j["seed"] = *g.seed;
    cfg = config_from_json_text(j.dump());
  } else {
    cfg.seed = g.seed;
    cfg.validate();
  }
  if (!g.out.empty()) cfg.out_dir = g.out;
  else if (const char* env = std::getenv(kOutEnv); env && g.config_path.empty()) cfg.out_dir = env;
  return cfg;
}

std::string run_dir(const RunConfig& cfg, const std::string& sub) { return cfg.out_dir + "/" + sub; }

void write_config(const RunConfig& cfg, const std::string& dir) {
  write_text(dir + "/config.json", config_to_json(cfg) + "\n");
  write_text(dir + "/digest.txt", config_digest(cfg) + "\n");
}

int finish(const ExperimentReport& rep, const RunConfig& cfg, const std::string& dir) {
  write_config(cfg, dir);
  write_report(rep, dir);
  for (const auto& m : rep.rows)
    std::cout << (m.pass ? "PASS " : "FAIL ") << rep.id << "." << m.name << " = "
              << fmt_double(m.value) << " (" << m.relation << " " << fmt_double(m.tolerance)
              << ")\n";
  std::cout << rep.id << ": " << (rep.passed() ? "passed" : "FAILED") << " in " << rep.runtime
            << " s\n";
  return rep.passed() ? 0 : 1;
}

int cmd_evolve(const RunConfig& cfg) {
  const std::string dir = run_dir(cfg, "evolve");
  const std::string digest = config_digest(cfg);
  Model m(cfg);
  const auto& H = *m.H;
  CVec x = packet_state(H, cfg.state);
  CrankNicolson cn(H, cfg.dt, cfg.solver);
  const int n_steps = std::max(1, static_cast<int>(std::lround(cfg.horizon / cfg.dt)));
  const double n0 = H.norm2(x);

  std::vector<std::string> audit_header{"step", "t", "sector", "mass", "from_below", "from_above",
                                        "creation_in", "annihilation_out", "boundary_flux",
                                        "residual"};
  std::vector<std::vector<std::string>> audit, masses, density;
  double worst = 0.0, drift = 0.0;
  auto snapshot = [&](int step, const CVec& v) {
    const FockState st = H.to_state(v, step * cfg.dt);
    std::vector<std::string> row{std::to_string(step), fmt_double(st.time)};
    for (int n = 0; n <= cfg.n_max; ++n) row.push_back(fmt_double(sector_mass(m.grid, st, n)));
    masses.push_back(std::move(row));
    // radial marginal of each sector, one particle coordinate
    for (int n = 1; n <= cfg.n_max; ++n) {
      std::vector<double> rad(m.grid.K(), 0.0);
      const std::size_t dim = spin_dim(n), ns = m.grid.n_sites();
      std::vector<std::size_t> s(n);
      const auto& a = st.sectors[n];
      for (std::size_t t = 0; t < a.size() / dim; ++t) {
        double l = 0.0;
        for (std::size_t c = 0; c < dim; ++c) l += std::norm(a[t * dim + c]);
        if (l == 0.0) continue;
        unpack_tuple(t, n, ns, s);
        rad[m.grid.radial_index(s[0])] += tuple_weight(m.grid, s) * l;
      }
      for (int i = 0; i < m.grid.K(); ++i)
        density.push_back({std::to_string(step), fmt_double(st.time), std::to_string(n),
                           fmt_double(m.grid.r(i)), fmt_double(rad[i])});
    }
    Checkpoint ck{cfg.geometry, cfg.grid, cfg.profile, st};
    save_checkpoint(dir + "/checkpoints/step_" + std::to_string(step) + ".bin", ck);
  };
  snapshot(0, x);
  for (int s = 1; s <= n_steps; ++s) {
    CVec y = x;
    cn.step(y);
    for (const auto& b : balance_audit(H, x, y, cfg.dt)) {
      worst = std::max(worst, b.residual);
      audit.push_back({std::to_string(s), fmt_double(s * cfg.dt), std::to_string(b.sector),
                       fmt_double(b.mass_after), fmt_double(b.from_below), fmt_double(b.from_above),
                       fmt_double(b.creation_in), fmt_double(b.annihilation_out),
                       fmt_double(b.boundary_flux), fmt_double(b.residual)});
    }
    drift = std::max(drift, std::abs(H.norm2(y) - n0) / n0);
    x = std::move(y);
    if (s % cfg.snapshot_stride == 0 || s == n_steps) snapshot(s, x);
  }
  write_config(cfg, dir);
  write_csv(dir + "/audit.csv", audit_header, audit, digest);
  std::vector<std::string> mh{"step", "t"};
  for (int n = 0; n <= cfg.n_max; ++n) mh.push_back("mass_" + std::to_string(n));
  write_csv(dir + "/sector_masses.csv", mh, masses, digest);
  write_csv(dir + "/radial_density.csv", {"step", "t", "sector", "r", "mass"}, density, digest);
  const bool ok = worst <= 1e-8 && drift <= 1e-8;
  std::cout << "evolve: " << n_steps << " steps, max balance residual " << fmt_double(worst)
            << ", max norm drift " << fmt_double(drift) << (ok ? "" : " (FAILED)") << "\n";
  return ok ? 0 : 1;
}

int cmd_trajectories(const RunConfig& cfg) {
  const std::string dir = run_dir(cfg, "trajectories");
  const std::string digest = config_digest(cfg);
  Model m(cfg);
  const int n_steps = std::max(1, static_cast<int>(std::lround(cfg.horizon / cfg.dt)));
  const Timeline tl = compute_timeline(*m.H, packet_state(*m.H, cfg.state), cfg.dt, n_steps,
                                       cfg.snapshot_stride, cfg.solver);
  const Field f(tl, m.grid, m.geo);
  const MarkovProcess proc(f, cfg.process);
  const ConfigurationSampler init(m.grid, tl.snaps.front());
  std::vector<int> cps;
  const int last = static_cast<int>(tl.snaps.size()) - 1;
  for (int k = 0; k <= cfg.n_checkpoints; ++k) cps.push_back(k * last / cfg.n_checkpoints);
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  const auto res = run_ensemble(proc, init, cfg.n_traj, *cfg.seed, cps);

  std::vector<std::vector<std::string>> ev, pos;
  for (std::size_t i = 0; i < res.size(); ++i) {
    for (const auto& e : res[i].events) {
      const char* kind = e.kind == EventKind::creation       ? "creation"
                         : e.kind == EventKind::annihilation ? "annihilation"
                                                             : "absorption";
      ev.push_back({std::to_string(i), fmt_double(e.t), kind, fmt_double(e.theta),
                    fmt_double(e.phi), std::to_string(e.cell), std::to_string(e.sector_before),
                    std::to_string(e.sector_after), fmt_double(e.flux)});
    }
    for (std::size_t c = 0; c < res[i].checkpoints.size(); ++c) {
      const auto& q = res[i].checkpoints[c];
      for (std::size_t k = 0; k < q.points.size(); ++k)
        pos.push_back({std::to_string(i), fmt_double(tl.snaps[cps[c]].time),
                       std::to_string(q.sector()), std::to_string(k), fmt_double(q.points[k].r),
                       fmt_double(q.points[k].theta), fmt_double(q.points[k].phi)});
      if (q.points.empty())
        pos.push_back({std::to_string(i), fmt_double(tl.snaps[cps[c]].time), "0", "", "", "", ""});
    }
  }
  write_config(cfg, dir);
  write_csv(dir + "/events.csv",
            {"trajectory", "t", "kind", "theta", "phi", "cell", "sector_before", "sector_after",
             "flux"},
            ev, digest);
  write_csv(dir + "/positions.csv",
            {"trajectory", "t", "sector", "particle", "r", "theta", "phi"}, pos, digest);
  std::cout << "trajectories: " << res.size() << " runs, " << ev.size() << " events\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bohmian particle creation at the super-extremal Reissner-Nordstrom singularity"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--out", g.out, std::string("output root (default: config out_dir, or $") + kOutEnv + ")");
  app.add_option("--threads", g.threads, "worker threads for ensembles")->check(CLI::PositiveNumber);

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"evolve", "wave-function timeline, sector masses and checkpoints"},
      {"trajectories", "Markov ensemble and event log"},
      {"audit", "conservation suite"},
      {"equivariance", "ensemble law vs |psi|^2, jump locations, one-sidedness"},
      {"bell-compare", "boundary creation rate vs Bell rate"},
      {"reversibility", "forward creations vs time-reversed annihilations"},
      {"geodesics", "radial null geodesics"},
      {"foliation", "divergence of the T lower bound near r = 0"},
  };
  for (const auto& s : subs) app.add_subcommand(s.name, s.help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
#ifdef _OPENMP
  if (g.threads > 0) omp_set_num_threads(g.threads);
#endif

  try {
    const RunConfig cfg = load(g);
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "evolve") return cmd_evolve(cfg);
    if (name == "trajectories") return cmd_trajectories(cfg);
    if (name == "audit") return finish(run_conservation_suite(cfg), cfg, run_dir(cfg, name));
    if (name == "equivariance") return finish(run_equivariance(cfg), cfg, run_dir(cfg, name));
    if (name == "bell-compare") return finish(run_bell_comparison(cfg), cfg, run_dir(cfg, name));
    if (name == "reversibility") return finish(run_reversibility(cfg), cfg, run_dir(cfg, name));
    if (name == "geodesics") return finish(run_geodesics(cfg), cfg, run_dir(cfg, name));
    if (name == "foliation") return finish(run_foliation(cfg), cfg, run_dir(cfg, name));
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
