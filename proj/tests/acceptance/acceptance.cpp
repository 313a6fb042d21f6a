// Acceptance run: one PASS/FAIL line per criterion, reports written under the
// output directory (first argument, default "acceptance_out").
//
// Grids are desk scale (K = 12 radial nodes, 2 x 2 angular nodes, N_max = 2);
// sector 2 on the larger grids does not fit in memory on one machine.

#include "rnbohm/experiments.hpp"
#include "rnbohm/io.hpp"

#include <deque>
#include <functional>
#include <iostream>
#include <sstream>

using namespace rnbohm;

namespace {

constexpr std::uint64_t kSeed = 20261018;

RunConfig base_config() {
  RunConfig cfg;
  cfg.seed = kSeed;
  cfg.validate();
  return cfg;
}

bool starts_with(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

struct Verdict {
  bool pass = true;
  int rows = 0;
  std::ostringstream detail;
};

void add_rows(Verdict& v, const ExperimentReport& rep,
              const std::function<bool(const std::string&)>& select) {
  for (const auto& m : rep.rows) {
    if (!select(m.name)) continue;
    ++v.rows;
    v.pass = v.pass && m.pass;
    v.detail << (v.rows > 1 ? "; " : "") << rep.id << "." << m.name << "=" << fmt_double(m.value)
             << (m.pass ? "" : " (fails " + m.relation + " " + fmt_double(m.tolerance) + ")");
  }
}

std::function<bool(const std::string&)> prefixes(std::vector<std::string> ps) {
  return [ps](const std::string& name) {
    for (const auto& p : ps)
      if (starts_with(name, p)) return true;
    return false;
  };
}

bool not_control(const std::string& name) { return !starts_with(name, "negative_control."); }

}  // namespace

int main(int argc, char** argv) {
  const std::string out = argc > 1 ? argv[1] : "acceptance_out";
  std::deque<ExperimentReport> reports;  // references into it stay valid
  auto run = [&](ExperimentReport rep) -> const ExperimentReport& {
    write_report(rep, out + "/" + rep.id);
    std::cerr << rep.id << ": " << rep.runtime << " s\n";
    reports.push_back(std::move(rep));
    return reports.back();
  };

  const RunConfig cfg = base_config();
  const auto& audit = run(run_conservation_suite(cfg));

  RunConfig eq = cfg;
  eq.horizon = 0.04;
  eq.n_traj = 10000;
  const auto& equiv = run(run_equivariance(eq));

  const auto& geod = run(run_geodesics(cfg));
  const auto& fol = run(run_foliation(cfg));
  const auto& bell = run(run_bell_comparison(cfg));

  RunConfig rv = cfg;
  rv.horizon = 0.04;
  rv.n_traj = 10000;
  const auto& rev = run(run_reversibility(rv));

  struct Line {
    std::string name;
    Verdict v;
  };
  std::vector<Line> lines;
  auto line = [&](const std::string& name, const ExperimentReport& rep,
                  std::function<bool(const std::string&)> sel) {
    Line l{name, {}};
    add_rows(l.v, rep, sel);
    lines.push_back(std::move(l));
  };
  line("unitarity", audit, prefixes({"unitarity."}));
  line("flux_identity", audit, prefixes({"flux_identity."}));
  line("sector_balance", audit, prefixes({"balance."}));
  line("equivariance", equiv, prefixes({"tv.", "sectors.", "absorbed_trajectories"}));
  line("jump_location_law", equiv, prefixes({"jump_location."}));
  line("one_sidedness", equiv, prefixes({"one_sided."}));
  line("geodesics", geod, not_control);
  line("foliation_divergence", fol, not_control);
  line("bell_comparison", bell, not_control);
  line("reversibility", rev, not_control);
  Line controls{"negative_controls", {}};
  for (const auto& rep : reports) add_rows(controls.v, rep, prefixes({"negative_control."}));
  lines.push_back(std::move(controls));

  bool all = true;
  for (auto& l : lines) {
    const bool ok = l.v.pass && l.v.rows > 0;
    all = all && ok;
    std::cout << (ok ? "PASS " : "FAIL ") << l.name << ": " << l.v.detail.str() << "\n";
  }
  std::cout << (all ? "acceptance: all criteria passed" : "acceptance: FAILED") << "\n";
  return all ? 0 : 1;
}
