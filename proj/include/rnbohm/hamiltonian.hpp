#pragma once

#include <memory>
#include <vector>

#include <Eigen/Sparse>

#include "rnbohm/fock.hpp"

namespace rnbohm {

using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

struct AssembleOptions {
  bool coupling = true;          // false: psi_N = 0 at r = 0, sectors decouple
  bool symmetrize = true;        // false: keep the raw angular differences (test fixture)
  bool check_hermitian = true;
  double hermitian_tol = 1e-10;
  double hi_sign = -1.0;         // H_I = hi_sign * i hbar sqrt(2 pi) int (phi+ - phi-)^* psi
};

// Discrete generator. The free coordinates x hold psi_0, the interior values
// of every sector and one spinor b_N(q') = (c+ - c-) chi per boundary
// configuration. The embedding E fills the r = 0 entries of sector N from
// a = sqrt(8 pi) psi_{N-1}(q') and b_N(q'), so both boundary conditions hold
// for every x. With Wt the weighted inner product on full arrays and F the
// energy form,
//   G = E^+ Wt E,   M = E^+ F E + C,
// where C carries H_I. Evolution is i hbar G x' = M x.
class DiscreteHamiltonian {
 public:
  DiscreteHamiltonian(const Geometry& geo, const SpatialGrid& grid, const BoundaryProfile& prof,
                      int n_max, AssembleOptions opt = {});

  const Geometry& geometry() const { return *geo_; }
  const SpatialGrid& grid() const { return *grid_; }
  const BoundaryProfile& profile() const { return prof_; }
  const AssembleOptions& options() const { return opt_; }
  int n_max() const { return n_max_; }
  double hbar() const { return geo_->params().hbar; }

  std::size_t n_dof() const { return dof_offset_.back(); }
  std::size_t sector_begin(int n) const { return dof_offset_[n]; }
  std::size_t sector_end(int n) const { return dof_offset_[n + 1]; }
  std::size_t b_begin(int n) const { return b_offset_[n]; }
  std::size_t n_full() const { return full_offset_.back(); }
  std::size_t full_begin(int n) const { return full_offset_[n]; }

  const SpMat& G() const { return G_; }
  const SpMat& M() const { return M_; }
  const SpMat& E() const { return E_; }
  const SpMat& F() const { return F_; }
  const std::vector<double>& Wt() const { return wt_; }
  const Eigen::VectorXd& G_diag() const { return g_diag_; }

  // max |M - M^+| / max |M| before the final symmetric cleanup.
  double hermiticity_residual() const { return herm_residual_; }

  // Coefficient of H_I: H_I psi(q') = coeff * sum_a Omega_a (phi+ - phi-)(a)^* psi(q', a).
  cplx hi_coefficient() const;

  CVec to_dof(const FockState& st) const;
  FockState to_state(const CVec& x, double time = 0.0) const;
  // Distance between a state and the embedding of its coordinates.
  double constraint_residual(const FockState& st) const;

  CVec apply_dof(const CVec& x) const;  // G^{-1} M x
  // H psi for a state that satisfies the boundary conditions.
  FockState apply(const FockState& st, double tol = 1e-8) const;

  double norm2(const CVec& x) const;         // x^+ G x
  double sector_norm2(const CVec& x, int n) const;

  // Sector index of a coordinate.
  int sector_of(std::size_t dof) const;

 private:
  void build_embedding();
  void build_form();
  void build_coupling(std::vector<Eigen::Triplet<cplx>>& trip) const;

  const Geometry* geo_;
  const SpatialGrid* grid_;
  BoundaryProfile prof_;
  int n_max_;
  AssembleOptions opt_;

  std::vector<std::size_t> dof_offset_, b_offset_, full_offset_;
  std::vector<double> wt_;
  SpMat E_, F_, G_, M_;
  Eigen::VectorXd g_diag_;
  double herm_residual_ = 0.0;
};

struct SolverOptions {
  double tol = 1e-12;
  int max_iter = 1000;
};

struct StepReport {
  int iterations = 0;
  double residual = 0.0;          // relative residual of the linear solve
  double projection_change = 0.0; // size of the boundary-condition re-projection
};

// Crank-Nicolson: (G + i tau M) x' = (G - i tau M) x, tau = dt / (2 hbar).
class CrankNicolson {
 public:
  CrankNicolson(const DiscreteHamiltonian& H, double dt, SolverOptions opt = {});
  StepReport step(CVec& x);
  double dt() const { return dt_; }

 private:
  struct Impl;
  const DiscreteHamiltonian* H_;
  double dt_;
  SolverOptions opt_;
  std::shared_ptr<Impl> impl_;
};

// Single step on a FockState (assembles a one-off solver).
FockState step(const DiscreteHamiltonian& H, const FockState& st, double dt,
               SolverOptions opt = {}, StepReport* report = nullptr);

// Normalized Wt-adjoint defect of H on a pair of coordinate vectors.
double hermiticity_defect(const DiscreteHamiltonian& H, const CVec& phi, const CVec& psi);

// Random coordinate vector (uniform complex entries), antisymmetric once embedded.
CVec random_dof(const DiscreteHamiltonian& H, Rng& rng);

}  // namespace rnbohm
