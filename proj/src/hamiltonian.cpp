#include "rnbohm/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>

namespace rnbohm {

namespace {

using Trip = Eigen::Triplet<cplx>;

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

double max_abs(const SpMat& A) {
  double m = 0.0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

// One-particle radial neighbours with the summation-by-parts stencil:
// interior rows (-1/2, +1/2), row 0 (-1/2 on itself, +1/2 to node 1), and the
// wall value at r_K dropped.
std::vector<std::pair<int, double>> radial_stencil(int i, int K) {
  std::vector<std::pair<int, double>> st;
  if (i == 0) {
    st.emplace_back(0, -0.5);
  } else {
    st.emplace_back(i - 1, -0.5);
  }
  if (i + 1 < K) st.emplace_back(i + 1, 0.5);
  return st;
}

}  // namespace

DiscreteHamiltonian::DiscreteHamiltonian(const Geometry& geo, const SpatialGrid& grid,
                                         const BoundaryProfile& prof, int n_max,
                                         AssembleOptions opt)
    : geo_(&geo), grid_(&grid), prof_(prof), n_max_(n_max), opt_(opt) {
  if (n_max_ < 1) throw ConfigError("N_max must be at least 1");
  if (prof_.size() != grid.n_angular())
    throw ConfigError("boundary profile does not match the angular grid");

  const std::size_t n_int = grid.n_interior_sites();
  dof_offset_.assign(n_max_ + 2, 0);
  b_offset_.assign(n_max_ + 1, 0);
  full_offset_.assign(n_max_ + 2, 0);
  dof_offset_[1] = 1;
  b_offset_[0] = 1;
  full_offset_[1] = 1;
  for (int n = 1; n <= n_max_; ++n) {
    const std::size_t interior = ipow(n_int, n) * spin_dim(n);
    const std::size_t bsize = opt_.coupling ? ipow(n_int, n - 1) * spin_dim(n - 1) : 0;
    b_offset_[n] = dof_offset_[n] + interior;
    dof_offset_[n + 1] = b_offset_[n] + bsize;
    full_offset_[n + 1] = full_offset_[n] + sector_size(grid, n);
  }

  build_embedding();
  build_form();

  std::vector<Trip> trip;
  build_coupling(trip);
  SpMat C(n_dof(), n_dof());
  C.setFromTriplets(trip.begin(), trip.end());

  SpMat EF = SpMat(E_.adjoint()) * F_;
  M_ = EF * E_;
  M_ += C;
  M_.prune(cplx{0.0, 0.0});

  const SpMat Madj = M_.adjoint();
  const SpMat D = M_ - Madj;
  const double scale = std::max(max_abs(M_), 1e-300);
  herm_residual_ = max_abs(D) / scale;
  if (opt_.check_hermitian && herm_residual_ > opt_.hermitian_tol) {
    std::ostringstream os;
    os << "assembly: generator is not Hermitian (relative residual " << herm_residual_ << ")";
    throw Error(os.str());
  }
  // E^+ F E + C is Hermitian exactly when the boundary term of the radial form
  // is compensated by the coupling. The generator keeps the Hermitian part of
  // E^+ F E and the full coupling C + C^+, so sector transfer equals the r = 0 flux.
  M_ += 0.5 * (C + SpMat(C.adjoint()));
  if (opt_.symmetrize) M_ = 0.5 * (M_ + SpMat(M_.adjoint()));

  SpMat W(n_full(), n_full());
  W.reserve(Eigen::VectorXi::Constant(static_cast<int>(n_full()), 1));
  for (std::size_t r = 0; r < n_full(); ++r) W.insert(r, r) = wt_[r];
  G_ = SpMat(E_.adjoint()) * W * E_;
  g_diag_ = Eigen::VectorXd::Zero(n_dof());
  double off = 0.0;
  for (int k = 0; k < G_.outerSize(); ++k)
    for (SpMat::InnerIterator it(G_, k); it; ++it) {
      if (it.row() == it.col())
        g_diag_(it.row()) = it.value().real();
      else
        off = std::max(off, std::abs(it.value()));
    }
  if (off > 1e-12 * g_diag_.maxCoeff())
    throw Error("assembly: weight operator is not diagonal for this boundary profile");
  if (g_diag_.minCoeff() <= 0.0) throw Error("assembly: weight operator is not positive");
}

cplx DiscreteHamiltonian::hi_coefficient() const {
  return opt_.hi_sign * kI * hbar() * std::sqrt(2.0 * kPi);
}

int DiscreteHamiltonian::sector_of(std::size_t dof) const {
  for (int n = 0; n <= n_max_; ++n)
    if (dof < dof_offset_[n + 1]) return n;
  throw std::out_of_range("sector_of: coordinate index out of range");
}

void DiscreteHamiltonian::build_embedding() {
  const auto& grid = *grid_;
  const std::size_t A = grid.n_angular(), ns = grid.n_sites(), n_int = grid.n_interior_sites();
  const double s8pi = std::sqrt(8.0 * kPi);
  std::vector<Trip> trip;
  trip.emplace_back(0, 0, 1.0);
  wt_.assign(n_full(), 0.0);
  wt_[0] = 1.0;

  for (int n = 1; n <= n_max_; ++n) {
    const std::size_t dim = spin_dim(n), low = spin_dim(n - 1);
    const std::size_t nt = ipow(ns, n);
    std::vector<std::size_t> sites(n), q(n - 1);
    for (std::size_t t = 0; t < nt; ++t) {
      unpack_tuple(t, n, ns, sites);
      const double w = tuple_weight(grid, sites);
      const std::size_t row0 = full_offset_[n] + t * dim;
      for (std::size_t c = 0; c < dim; ++c) wt_[row0 + c] = w;

      int n_bnd = 0, slot = -1;
      for (int k = 0; k < n; ++k)
        if (grid.radial_index(sites[k]) == 0) {
          ++n_bnd;
          slot = k;
        }
      if (n_bnd == 0) {
        std::size_t it = 0;
        for (int k = 0; k < n; ++k) it = it * n_int + (sites[k] - A);
        const std::size_t col0 = dof_offset_[n] + it * dim;
        for (std::size_t c = 0; c < dim; ++c) trip.emplace_back(row0 + c, col0 + c, 1.0);
        continue;
      }
      if (n_bnd > 1 || !opt_.coupling) continue;

      // one slot at r = 0: move it last, sign (-1)^(n-1-slot)
      const double sign = ((n - 1 - slot) % 2 == 0) ? 1.0 : -1.0;
      const std::size_t a = grid.angular_index(sites[slot]);
      const Spinor sum = prof_.plus[a] + prof_.minus[a];
      const Spinor dif = prof_.plus[a] - prof_.minus[a];
      std::size_t iq = 0;
      for (int k = 0, m = 0; k < n; ++k)
        if (k != slot) {
          q[m++] = sites[k];
          iq = iq * n_int + (sites[k] - A);
        }
      const std::size_t stride = spin_dim(n - 1 - slot);
      for (std::size_t c = 0; c < dim; ++c) {
        const std::size_t ck = (c / stride) % 4;
        const std::size_t hi = c / (stride * 4), lo = c % stride;
        const std::size_t cprime = hi * stride + lo;
        const std::size_t col_a = (n == 1 ? 0 : dof_offset_[n - 1] + iq * low) + cprime;
        const std::size_t col_b = b_offset_[n] + iq * low + cprime;
        trip.emplace_back(row0 + c, col_a, sign * 0.5 * s8pi * sum(ck));
        trip.emplace_back(row0 + c, col_b, sign * 0.5 * dif(ck));
      }
    }
  }
  E_.resize(n_full(), n_dof());
  E_.setFromTriplets(trip.begin(), trip.end());
  E_.prune(cplx{0.0, 0.0});
}

void DiscreteHamiltonian::build_form() {
  const auto& grid = *grid_;
  const auto& geo = *geo_;
  const auto& dm = dirac_matrices();
  const std::size_t A = grid.n_angular(), ns = grid.n_sites();
  const int K = grid.K(), np = grid.n_phi(), nth = grid.n_theta();
  const double hbar = geo.params().hbar, mass = geo.params().m;
  const cplx mih = -kI * hbar;

  std::vector<Trip> tr, ta;
  for (int n = 1; n <= n_max_; ++n) {
    const std::size_t dim = spin_dim(n), nt = ipow(ns, n);
    const double nfact = factorial(n);
    std::vector<std::size_t> sites(n), moved(n);
    for (std::size_t t = 0; t < nt; ++t) {
      unpack_tuple(t, n, ns, sites);
      const std::size_t row0 = full_offset_[n] + t * dim;
      const double wtuple = tuple_weight(grid, sites);
      for (int k = 0; k < n; ++k) {
        double w_other = 1.0 / nfact;
        for (int l = 0; l < n; ++l)
          if (l != k) w_other *= grid.wt(sites[l]);
        const int i = grid.radial_index(sites[k]);
        const std::size_t a = grid.angular_index(sites[k]);
        const int j = static_cast<int>(a) / np, kp = static_cast<int>(a) % np;
        const double Om = grid.omega(a);
        const std::size_t stride = spin_dim(n - 1 - k);

        auto emit = [&](std::vector<Trip>& out, std::size_t new_site, const Mat4& mat, cplx coef) {
          moved = sites;
          moved[k] = new_site;
          const std::size_t col0 = full_offset_[n] + pack_tuple(moved, ns) * dim;
          for (std::size_t c = 0; c < dim; ++c) {
            const std::size_t ck = (c / stride) % 4;
            const std::size_t base = c - ck * stride;
            for (std::size_t d = 0; d < 4; ++d) {
              const cplx v = mat(ck, d);
              if (v == cplx{}) continue;
              out.emplace_back(row0 + c, col0 + base + d * stride, coef * v);
            }
          }
        };

        for (auto [ii, q] : radial_stencil(i, K))
          emit(tr, grid.site(ii, a), dm.alpha1, mih * q * Om * w_other);

        const double r = grid.r(i), h = grid.h_rad(i);
        const double ct = geo.c_theta(r);
        for (int jj = 0; jj < nth; ++jj) {
          const double d = grid.d_theta()(j, jj);
          if (d == 0.0) continue;
          emit(ta, grid.site(i, static_cast<std::size_t>(jj) * np + kp), dm.alpha2,
               mih * h * ct * Om * d * w_other);
        }
        const double cp = geo.c_phi(r, grid.theta(j));
        for (int kk = 0; kk < np; ++kk) {
          const double d = grid.d_phi()(kp, kk);
          if (d == 0.0) continue;
          emit(ta, grid.site(i, static_cast<std::size_t>(j) * np + kk), dm.alpha3,
               mih * h * cp * Om * d * w_other);
        }
        if (mass != 0.0) emit(tr, sites[k], dm.beta, cplx{mass * wtuple, 0.0});
      }
    }
  }
  (void)A;
  F_.resize(n_full(), n_full());
  F_.setFromTriplets(tr.begin(), tr.end());
  SpMat Fa(n_full(), n_full());
  Fa.setFromTriplets(ta.begin(), ta.end());
  if (opt_.symmetrize) {
    const SpMat Fadj = Fa.adjoint();
    F_ += 0.5 * (Fa + Fadj);
  } else {
    F_ += Fa;
  }
  F_.prune(cplx{0.0, 0.0});
}

void DiscreteHamiltonian::build_coupling(std::vector<Trip>& trip) const {
  if (!opt_.coupling) return;
  const auto& grid = *grid_;
  const std::size_t A = grid.n_angular(), n_int = grid.n_interior_sites();
  const cplx coef = hi_coefficient();
  cplx kb{}, ka{};
  for (std::size_t a = 0; a < A; ++a) {
    const Spinor dif = prof_.plus[a] - prof_.minus[a];
    const Spinor sum = prof_.plus[a] + prof_.minus[a];
    kb += grid.omega(a) * 0.5 * dif.dot(dif);
    ka += grid.omega(a) * 0.5 * std::sqrt(8.0 * kPi) * dif.dot(sum);
  }
  for (int n = 1; n <= n_max_; ++n) {
    const std::size_t low = spin_dim(n - 1), nq = ipow(n_int, n - 1);
    std::vector<std::size_t> q(n - 1);
    for (std::size_t iq = 0; iq < nq; ++iq) {
      unpack_tuple(iq, n - 1, n_int, q);
      for (auto& s : q) s += A;
      const double W = tuple_weight(grid, q);
      for (std::size_t c = 0; c < low; ++c) {
        const std::size_t row = (n == 1 ? 0 : dof_offset_[n - 1] + iq * low) + c;
        trip.emplace_back(row, b_offset_[n] + iq * low + c, coef * W * kb);
        if (std::abs(ka) > 1e-14) trip.emplace_back(row, row, coef * W * ka);
      }
    }
  }
}

CVec DiscreteHamiltonian::to_dof(const FockState& st) const {
  if (st.n_max != n_max_) throw std::invalid_argument("to_dof: sector count mismatch");
  const auto& grid = *grid_;
  const std::size_t A = grid.n_angular(), ns = grid.n_sites(), n_int = grid.n_interior_sites();
  CVec x = CVec::Zero(n_dof());
  x(0) = st.sectors[0][0];
  for (int n = 1; n <= n_max_; ++n) {
    const std::size_t dim = spin_dim(n), low = spin_dim(n - 1);
    const std::size_t ni = ipow(n_int, n);
    std::vector<std::size_t> s(n);
    for (std::size_t it = 0; it < ni; ++it) {
      unpack_tuple(it, n, n_int, s);
      for (auto& v : s) v += A;
      const std::size_t src = pack_tuple(s, ns) * dim;
      for (std::size_t c = 0; c < dim; ++c) x(dof_offset_[n] + it * dim + c) = st.sectors[n][src + c];
    }
    if (!opt_.coupling) continue;
    double norm_dif = 0.0;
    for (std::size_t a = 0; a < A; ++a)
      norm_dif += grid.omega(a) * 0.5 * (prof_.plus[a] - prof_.minus[a]).squaredNorm();
    const std::size_t nq = ipow(n_int, n - 1);
    std::vector<std::size_t> q(n - 1);
    for (std::size_t iq = 0; iq < nq; ++iq) {
      unpack_tuple(iq, n - 1, n_int, q);
      for (auto& v : q) v += A;
      for (std::size_t a = 0; a < A; ++a) {
        const auto tr = boundary_trace(grid, st, q, a);
        const Spinor dif = prof_.plus[a] - prof_.minus[a];
        for (std::size_t c = 0; c < low; ++c) {
          cplx acc{};
          for (int d = 0; d < 4; ++d) acc += std::conj(dif(d)) * tr[c * 4 + d];
          x(b_offset_[n] + iq * low + c) += grid.omega(a) * acc / norm_dif;
        }
      }
    }
  }
  return x;
}

FockState DiscreteHamiltonian::to_state(const CVec& x, double time) const {
  const CVec full = E_ * x;
  FockState st;
  st.n_max = n_max_;
  st.time = time;
  st.sectors.resize(n_max_ + 1);
  for (int n = 0; n <= n_max_; ++n)
    st.sectors[n].assign(full.data() + full_offset_[n], full.data() + full_offset_[n + 1]);
  return st;
}

double DiscreteHamiltonian::constraint_residual(const FockState& st) const {
  const FockState back = to_state(to_dof(st), st.time);
  double r = 0.0;
  for (int n = 0; n <= n_max_; ++n)
    for (std::size_t k = 0; k < st.sectors[n].size(); ++k)
      r += std::norm(st.sectors[n][k] - back.sectors[n][k]);
  return std::sqrt(r);
}

CVec DiscreteHamiltonian::apply_dof(const CVec& x) const {
  CVec y = M_ * x;
  for (Eigen::Index k = 0; k < y.size(); ++k) y(k) /= g_diag_(k);
  return y;
}

FockState DiscreteHamiltonian::apply(const FockState& st, double tol) const {
  const double res = constraint_residual(st);
  if (res > tol) throw BoundaryConditionViolation("apply: state violates the boundary conditions", res);
  return to_state(apply_dof(to_dof(st)), st.time);
}

double DiscreteHamiltonian::norm2(const CVec& x) const {
  double s = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) s += g_diag_(k) * std::norm(x(k));
  return s;
}

double DiscreteHamiltonian::sector_norm2(const CVec& x, int n) const {
  double s = 0.0;
  for (std::size_t k = dof_offset_[n]; k < dof_offset_[n + 1]; ++k) s += g_diag_(k) * std::norm(x(k));
  return s;
}

struct CrankNicolson::Impl {
  Eigen::SparseMatrix<cplx> Aplus;
  SpMat Aminus;
  Eigen::BiCGSTAB<Eigen::SparseMatrix<cplx>, Eigen::IncompleteLUT<cplx>> solver;
};

CrankNicolson::CrankNicolson(const DiscreteHamiltonian& H, double dt, SolverOptions opt)
    : H_(&H), dt_(dt), opt_(opt), impl_(std::make_shared<Impl>()) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  const cplx itau = kI * (dt / (2.0 * H.hbar()));
  impl_->Aplus = H.G() + itau * H.M();
  impl_->Aminus = H.G() - itau * H.M();
  impl_->Aplus.makeCompressed();
  impl_->solver.setTolerance(opt_.tol);
  impl_->solver.setMaxIterations(opt_.max_iter);
  impl_->solver.preconditioner().setDroptol(1e-2);
  impl_->solver.preconditioner().setFillfactor(2);
  impl_->solver.compute(impl_->Aplus);
  if (impl_->solver.info() != Eigen::Success) throw Error("Crank-Nicolson: preconditioner setup failed");
}

StepReport CrankNicolson::step(CVec& x) {
  const CVec rhs = impl_->Aminus * x;
  CVec xn = impl_->solver.solveWithGuess(rhs, x);
  StepReport rep;
  rep.iterations = static_cast<int>(impl_->solver.iterations());
  const double bn = rhs.norm();
  rep.residual = bn > 0.0 ? (impl_->Aplus * xn - rhs).norm() / bn : 0.0;
  if (impl_->solver.info() != Eigen::Success && rep.residual > 1e-10) {
    std::ostringstream os;
    os << "Crank-Nicolson: linear solve did not converge (relative residual " << rep.residual
       << " after " << rep.iterations << " iterations)";
    throw Error(os.str());
  }
  // The coordinates parametrise the constrained subspace, so re-projecting is
  // the identity up to rounding.
  rep.projection_change = 0.0;
  x = std::move(xn);
  return rep;
}

FockState step(const DiscreteHamiltonian& H, const FockState& st, double dt, SolverOptions opt,
               StepReport* report) {
  CrankNicolson cn(H, dt, opt);
  CVec x = H.to_dof(st);
  StepReport rep = cn.step(x);
  FockState out = H.to_state(x, st.time + dt);
  rep.projection_change = H.constraint_residual(out);
  if (report) *report = rep;
  return out;
}

double hermiticity_defect(const DiscreteHamiltonian& H, const CVec& phi, const CVec& psi) {
  const CVec Hphi = H.apply_dof(phi), Hpsi = H.apply_dof(psi);
  const Eigen::VectorXd& g = H.G_diag();
  cplx l{}, r{};
  for (Eigen::Index k = 0; k < phi.size(); ++k) {
    l += std::conj(Hphi(k)) * g(k) * psi(k);
    r += std::conj(phi(k)) * g(k) * Hpsi(k);
  }
  const double scale = std::sqrt(H.norm2(Hphi) * H.norm2(psi)) + std::sqrt(H.norm2(phi) * H.norm2(Hpsi));
  return scale > 0.0 ? std::abs(l - r) / scale : 0.0;
}

CVec random_dof(const DiscreteHamiltonian& H, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  CVec x(H.n_dof());
  for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = cplx{nd(rng), nd(rng)};
  FockState st = H.to_state(x);
  for (int n = 2; n <= H.n_max(); ++n)
    st.sectors[n] = antisymmetrize(st.sectors[n], n, H.grid().n_sites());
  return H.to_dof(st);
}

}  // namespace rnbohm
