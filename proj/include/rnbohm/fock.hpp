#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rnbohm/grid.hpp"
#include "rnbohm/spinor.hpp"

namespace rnbohm {

using Rng = std::mt19937_64;

// Sector N holds a spinor-valued function on grid^N, stored as
// [s_1 ... s_N][c_1 ... c_N] (site tuple major, packed spin index minor).
// Sector 0 is a single complex number.
struct FockState {
  int n_max = 0;
  double time = 0.0;
  std::vector<std::vector<cplx>> sectors;
};

std::size_t ipow(std::size_t base, int n);
std::size_t sector_size(const SpatialGrid& grid, int n);
FockState make_zero_state(const SpatialGrid& grid, int n_max);

// Weight of one entry of sector N at a site tuple: prod wt(s_k) / N!.
double tuple_weight(const SpatialGrid& grid, std::span<const std::size_t> sites);
void unpack_tuple(std::size_t t, int n, std::size_t n_sites, std::span<std::size_t> out);
std::size_t pack_tuple(std::span<const std::size_t> sites, std::size_t n_sites);

// Integral of psi* alpha~t psi over the sector (coordinate volume, unordered
// configurations).
double sector_mass(const SpatialGrid& grid, const FockState& st, int n);
double total_mass(const SpatialGrid& grid, const FockState& st);

struct Point {
  double r = 0.0;
  double theta = 0.5 * kPi;
  double phi = 0.0;
};

struct Configuration {
  std::vector<Point> points;
  int sector() const { return static_cast<int>(points.size()); }
};

// psi_N(q, (0, omega_a)) with the singularity slot last; q lists N-1 sites.
std::vector<cplx> boundary_trace(const SpatialGrid& grid, const FockState& st,
                                 std::span<const std::size_t> q, std::size_t a);

struct BoundaryDecomposition {
  std::vector<cplx> Psi_plus, Psi_minus;      // rank N-1 spinor arrays
  std::vector<cplx> c_plus_chi, c_minus_chi;  // Psi_pm / 4 pi
  double residual = 0.0;                      // distance to W (x) spin space
};

// Projections of the boundary trace of sector q.size()+1 onto phi_+ and phi_-.
// Throws BoundaryConditionViolation when the trace leaves W by more than `tol`.
BoundaryDecomposition decompose_boundary(const SpatialGrid& grid, const BoundaryProfile& prof,
                                         const FockState& st, std::span<const std::size_t> q,
                                         double tol = 1e-8);

struct BoundaryResidual {
  int sector = 0;
  double boun1 = 0.0;  // trace minus its W projection
  double boun2 = 0.0;  // psi_{N-1} minus (Psi_+ + Psi_-) / (4 pi sqrt(8 pi))
};

// One row per sector N >= 1. Boundary configurations q range over interior
// sites; quadrature-weighted RMS over omega, summed in quadrature over q.
std::vector<BoundaryResidual> check_boundary_conditions(const SpatialGrid& grid,
                                                        const BoundaryProfile& prof,
                                                        const FockState& st);

// Draws a configuration with law j~t: sector by mass, then a grid cell by
// weighted |psi|^2, then a uniform point inside each cell.
Configuration sample_configuration(const SpatialGrid& grid, const FockState& st, Rng& rng);

// Reusable form of sample_configuration for many draws from one snapshot.
class ConfigurationSampler {
 public:
  ConfigurationSampler(const SpatialGrid& grid, const FockState& st);
  Configuration draw(Rng& rng) const;
  const std::vector<double>& sector_masses() const { return masses_; }

 private:
  const SpatialGrid* grid_;
  int n_max_;
  std::vector<double> masses_;
  std::vector<std::vector<double>> cum_;  // per sector, cumulative tuple mass
};

Point sample_in_cell(const SpatialGrid& grid, std::size_t site, Rng& rng);

// Rng stream for (master seed, stream id).
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace rnbohm
