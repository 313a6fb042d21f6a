#pragma once

#include "rnbohm/config.hpp"

#include <memory>
#include <string>
#include <vector>

namespace rnbohm {

struct MetricRow {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  std::string relation;  // "<=", ">=", "==", "in" (tolerance is the half-width about 1)
  bool pass = false;
};

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct ExperimentReport {
  std::string id;
  std::string digest;
  std::uint64_t seed = 0;
  double runtime = 0.0;  // seconds
  std::vector<MetricRow> rows;
  std::vector<Table> tables;

  bool passed() const;
  // Adds a row; a negative control passes when its target test fails.
  MetricRow& check(const std::string& name, double value, const std::string& relation,
                   double tolerance);
  MetricRow& control(const std::string& name, double value, const std::string& relation,
                     double tolerance);
  std::string to_json() const;
};

// Writes <dir>/<id>.json and one <dir>/<id>_<table>.csv per table.
void write_report(const ExperimentReport& rep, const std::string& dir);

// Everything derived from a RunConfig that the suites share.
struct Model {
  Geometry geo;
  SpatialGrid grid;
  BoundaryProfile profile;
  std::unique_ptr<DiscreteHamiltonian> H;

  Model(const RunConfig& cfg, AssembleOptions opt = {});
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
};

struct ConservationOptions {
  int n_steps = 1000;
  int n_pairs = 100;
};
ExperimentReport run_conservation_suite(const RunConfig& cfg, ConservationOptions opt = {});

// Equivariance, jump-location law and one-sidedness from one ensemble run.
ExperimentReport run_equivariance(const RunConfig& cfg);

ExperimentReport run_bell_comparison(const RunConfig& cfg);

ExperimentReport run_reversibility(const RunConfig& cfg);

ExperimentReport run_geodesics(const RunConfig& cfg);

struct FoliationRow {
  double r1 = 0.0;
  double t = 0.0;      // coordinate time on the outgoing null geodesic from (t0, 0)
  double bound = 0.0;  // sqrt(lambda(r1)) * t
};
// T lower bound at each r1 (t0 > 0). With use_sqrt false the proper-time
// factor is replaced by lambda itself (negative control).
std::vector<FoliationRow> T_lower_bound(const Geometry& geo, double t0,
                                        const std::vector<double>& r1s, bool use_sqrt = true);

// Least-squares slope of log(bound) against log(r1).
double loglog_slope(const std::vector<FoliationRow>& rows);

ExperimentReport run_foliation(const RunConfig& cfg);

}  // namespace rnbohm
