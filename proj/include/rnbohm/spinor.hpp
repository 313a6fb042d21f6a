#pragma once

#include <span>
#include <string>
#include <vector>

#include "rnbohm/types.hpp"

namespace rnbohm {

// Standard (Dirac) representation.
struct DiracMatrices {
  Mat4 alpha1;
  Mat4 alpha2;
  Mat4 alpha3;
  Mat4 beta;
};

const DiracMatrices& dirac_matrices();

// Pair of spinor fields on the singularity sphere, one in each eigenspace of
// alpha1. Values are stored per angular node (theta-major, phi-minor).
struct BoundaryProfile {
  std::string convention;
  std::vector<Spinor> plus;
  std::vector<Spinor> minus;

  const Spinor& phi_plus(std::size_t node) const { return plus[node]; }
  const Spinor& phi_minus(std::size_t node) const { return minus[node]; }
  std::size_t size() const { return plus.size(); }
};

/// Builds the boundary profile on `n_angular` nodes.
///
/// Conventions:
///   "constant"  phi+ = (1,0,0,1)/sqrt2, phi- = (1,0,0,-1)/sqrt2 at every node.
///   "rotated"   the other basis vector of each eigenspace,
///               phi+ = (0,1,1,0)/sqrt2, phi- = (0,1,-1,0)/sqrt2.
///   "twisted"   constant profile times a node-dependent phase exp(i*phi_k)
///               (needs the phi coordinates of the nodes).
BoundaryProfile make_boundary_profile(const std::string& convention, std::size_t n_angular,
                                      std::span<const double> node_phi = {});

// Multi-particle spinor index helpers. A rank-N spin index is packed
// row-major: c = c_1 * 4^(N-1) + ... + c_N.
inline std::size_t spin_dim(int n) {
  std::size_t d = 1;
  for (int i = 0; i < n; ++i) d *= 4;
  return d;
}

/// Applies `m` to spin factor `k` (1-based) of an N-particle spinor array laid
/// out as [site block][spin index]; `block` is the number of site tuples.
std::vector<cplx> apply_on_factor(const Mat4& m, int k, int n_particles,
                                  std::span<const cplx> psi);

/// Antisymmetrizer for N-particle spinor-valued grid functions stored as
/// [s_1, ..., s_N][c_1 ... c_N] with `n_sites` sites per particle.
std::vector<cplx> antisymmetrize(std::span<const cplx> psi, int n_particles,
                                 std::size_t n_sites);

}  // namespace rnbohm
