#pragma once

#include <array>
#include <span>
#include <vector>

#include "rnbohm/hamiltonian.hpp"

namespace rnbohm {

// psi^+ (mat acting on slot k) psi for an N-particle spinor (k 0-based).
double slot_bilinear(std::span<const cplx> psi, int n, int k, const Mat4& mat);

// Guidance velocity (dr/dt, dtheta/dt, dphi/dt) of every particle for the
// spinor `psi` at positions `pts` (all r > 0). Throws Error if psi^+ psi
// times prod 1/lambda falls below `min_density`.
std::vector<std::array<double, 3>> velocity_from_spinor(const Geometry& geo,
                                                        std::span<const cplx> psi,
                                                        std::span<const Point> pts,
                                                        double min_density = 1e-14);

// j~t at a grid configuration (site tuple, all interior).
double density(const SpatialGrid& grid, const Geometry& geo, const FockState& st,
               std::span<const std::size_t> sites);

// Velocity at a grid configuration (site tuple, all interior).
std::vector<std::array<double, 3>> velocity(const SpatialGrid& grid, const Geometry& geo,
                                            const FockState& st,
                                            std::span<const std::size_t> sites);

// j~r(q u omega_a) = prod_{x in q} lambda^{-1} * psi^+ (1 (x) alpha1) psi at the
// boundary trace; positive means away from the singularity.
double singularity_flux(const SpatialGrid& grid, const Geometry& geo, const FockState& st,
                        std::span<const std::size_t> q, std::size_t a);

// Quadrature over the angular nodes of singularity_flux.
double angular_flux(const SpatialGrid& grid, const Geometry& geo, const FockState& st,
                    std::span<const std::size_t> q);

// Right-hand side of the flux identity: 4 pi prod lambda^{-1} |chi|^2 (|c+|^2 - |c-|^2)
// given c+ chi and c- chi.
double flux_identity_rhs(const SpatialGrid& grid, const Geometry& geo,
                         std::span<const std::size_t> q, std::span<const cplx> c_plus_chi,
                         std::span<const cplx> c_minus_chi);

struct SectorBalance {
  int sector = 0;
  double mass_before = 0.0;
  double mass_after = 0.0;
  double d_mass = 0.0;
  double from_below = 0.0;      // net transfer from sector N-1 (creation minus annihilation)
  double from_above = 0.0;      // net transfer from sector N+1
  double creation_in = 0.0;     // positive part of the transfer from N-1
  double annihilation_out = 0.0;// negative part of the transfer from N-1, as a positive number
  double boundary_flux = 0.0;   // dt * integral of j~r over r = 0 configurations (diagnostic)
  double residual = 0.0;        // |d_mass - from_below - from_above|
};

// Discrete continuity audit for one Crank-Nicolson step x -> x_next of length dt.
// Sector masses are x^+ G x restricted to the coordinates of each sector;
// transfers are 4 tau Im(y_N^+ M_{N,N'} y_{N'}) at the midpoint y.
std::vector<SectorBalance> balance_audit(const DiscreteHamiltonian& H, const CVec& x,
                                         const CVec& x_next, double dt);

}  // namespace rnbohm
