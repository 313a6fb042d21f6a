#pragma once

#include <optional>
#include <vector>

#include "rnbohm/currents.hpp"

namespace rnbohm {

// Precomputed wave-function snapshots at t0 + n * dt (full arrays, boundary
// values included).
struct Timeline {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<FockState> snaps;

  double t_end() const { return t0 + dt * static_cast<double>(snaps.size() - 1); }
};

// Evolves x0 with Crank-Nicolson and stores every `stride`-th state.
Timeline compute_timeline(const DiscreteHamiltonian& H, const CVec& x0, double dt, int n_steps,
                          int stride, SolverOptions opt = {});

// Snapshots Theta psi_{T-s}, Theta = (U (x) ... (x) U) K with U = alpha1 alpha3:
// same density, reversed currents.
Timeline time_reversed(const Timeline& tl);
FockState apply_time_reversal(const FockState& st);

// Multilinear (space) and linear (time) interpolation of the timeline.
class Field {
 public:
  Field(const Timeline& tl, const SpatialGrid& grid, const Geometry& geo);

  const SpatialGrid& grid() const { return *grid_; }
  const Geometry& geometry() const { return *geo_; }
  const Timeline& timeline() const { return *tl_; }
  int n_max() const { return tl_->snaps.front().n_max; }

  // psi_N at the N points (N = pts.size()).
  std::vector<cplx> psi(double t, std::span<const Point> pts) const;
  // psi_N(q, (0, omega_a)) with N = q.size() + 1 and the boundary slot last.
  std::vector<cplx> boundary_psi(double t, std::span<const Point> q, std::size_t a) const;

 private:
  struct Corner {
    std::size_t site;
    double w;
  };
  void corners(const Point& p, std::vector<Corner>& out) const;
  std::vector<cplx> gather(double t, std::span<const std::vector<Corner>> cs, int n) const;

  const Timeline* tl_;
  const SpatialGrid* grid_;
  const Geometry* geo_;
};

struct ProcessOptions {
  double r_hit = -1.0;        // default: 0.1 dr
  double r_birth = -1.0;      // default: 0.2 dr
  double rk_tol = 1e-6;       // per-substep error tolerance (step doubling)
  double h_min = 1e-12;
  double bound_safety = 1.5;  // thinning bound factor
  double min_density = 1e-14;
  int max_retries = 50;
};

enum class EventKind { creation, annihilation, absorption };

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::creation;
  double theta = 0.0, phi = 0.0;
  std::size_t cell = 0;                 // angular cell of omega
  int sector_before = 0, sector_after = 0;
  double flux = 0.0;                    // psi^+ alpha1 psi at (q u omega) when the event fired
  std::vector<double> cell_probs;       // creation: law of the angular cell
};

struct ProcessState {
  Configuration q;
  double t = 0.0;
  std::uint64_t stream = 0;
};

struct MarkovResult {
  std::vector<Event> events;
  std::vector<Configuration> checkpoints;  // configuration at each requested snapshot index
  bool absorbed = false;
  int bound_retries = 0;
  int truncation_hits = 0;                 // creation suppressed at N_max
};

class MarkovProcess {
 public:
  MarkovProcess(const Field& f, ProcessOptions opt = {});

  const ProcessOptions& options() const { return opt_; }

  // Advances the configuration from t to t1 by adaptive RK4 (no jumps).
  // Returns false if the velocity became undefined.
  bool guide(Configuration& q, double t, double t1) const;

  struct Hit {
    std::size_t particle;
    double t;
    std::size_t cell;
    double flux;
  };
  // Particle below r_hit whose r = 0 flux is not outward.
  std::optional<Hit> detect_annihilation(const Configuration& q, double t) const;
  double hit_delay(const Configuration& q, std::size_t k, double t) const;

  // Creation rate density per unit solid angle at angular node a, and the
  // per-cell totals Omega_a sigma_a.
  double creation_rate(const Configuration& q, double t, std::size_t a) const;
  std::vector<double> cell_rates(const Configuration& q, double t) const;

  // Thinning on [t, t1] for a frozen configuration; nullopt if no event.
  std::optional<std::pair<double, std::size_t>> sample_creation(const Configuration& q, double t,
                                                                double t1, Rng& rng) const;

  // Runs from q0 at the timeline start to the end; checkpoints are snapshot indices.
  MarkovResult run(Configuration q0, Rng& rng, std::span<const int> checkpoints = {}) const;

 private:
  std::vector<std::array<double, 3>> vel(const Configuration& q, double t) const;
  bool rk4(const Configuration& q, double t, double h, Configuration& out) const;
  bool substep(Configuration& q, double& t, double t1, double& h) const;

  const Field* f_;
  ProcessOptions opt_;
};

// Removes all particles with r <= 0 (at the singularity).
Configuration deterministic_jump(const Configuration& q);

void reflect_chart(Point& p);

// Bell rate for the jump q' -> (q', omega_a) across the r = 0 boundary, using
// the assembled H_I kernel <q'|H_I|(q', a)> = hi_coefficient * Omega_a (phi+ - phi-)(a)^*.
// q' is an interior site tuple; returns the rate per unit time (not per solid angle).
double bell_rate(const DiscreteHamiltonian& H, const FockState& st,
                 std::span<const std::size_t> q_from, std::size_t a);

// Ensemble of independent runs; trajectory i uses make_rng(seed, i).
std::vector<MarkovResult> run_ensemble(const MarkovProcess& proc, const ConfigurationSampler& init,
                                       std::size_t n_traj, std::uint64_t seed,
                                       std::span<const int> checkpoints = {});

}  // namespace rnbohm
