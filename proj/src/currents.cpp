#include "rnbohm/currents.hpp"

#include <cmath>

namespace rnbohm {

double slot_bilinear(std::span<const cplx> psi, int n, int k, const Mat4& mat) {
  const std::size_t dim = spin_dim(n), stride = spin_dim(n - 1 - k);
  cplx acc{};
  for (std::size_t c = 0; c < dim; ++c) {
    const std::size_t ck = (c / stride) % 4;
    const std::size_t base = c - ck * stride;
    cplx row{};
    for (std::size_t d = 0; d < 4; ++d) {
      const cplx m = mat(ck, d);
      if (m != cplx{}) row += m * psi[base + d * stride];
    }
    acc += std::conj(psi[c]) * row;
  }
  return acc.real();
}

std::vector<std::array<double, 3>> velocity_from_spinor(const Geometry& geo,
                                                        std::span<const cplx> psi,
                                                        std::span<const Point> pts,
                                                        double min_density) {
  const int n = static_cast<int>(pts.size());
  const auto& dm = dirac_matrices();
  double norm = 0.0;
  for (const cplx& z : psi) norm += std::norm(z);
  double il = 1.0;
  for (const auto& p : pts) il *= geo.inv_lambda(p.r);
  if (!(norm * il >= min_density)) throw Error("velocity undefined: density below threshold");
  std::vector<std::array<double, 3>> v(n);
  for (int k = 0; k < n; ++k) {
    const double r = pts[k].r;
    const double lam = geo.lambda(r).value;
    const double ct = geo.c_theta(r);  // 1 / (sqrt(lambda) r)
    v[k][0] = lam * slot_bilinear(psi, n, k, dm.alpha1) / norm;
    v[k][1] = lam * ct * slot_bilinear(psi, n, k, dm.alpha2) / norm;
    v[k][2] = lam * ct / std::sin(pts[k].theta) * slot_bilinear(psi, n, k, dm.alpha3) / norm;
  }
  return v;
}

namespace {

std::span<const cplx> values_at(const SpatialGrid& grid, const FockState& st,
                                std::span<const std::size_t> sites) {
  const int n = static_cast<int>(sites.size());
  const std::size_t dim = spin_dim(n);
  const std::size_t off = pack_tuple(sites, grid.n_sites()) * dim;
  return {st.sectors.at(n).data() + off, dim};
}

double inv_lambda_product(const SpatialGrid& grid, const Geometry& geo,
                          std::span<const std::size_t> sites) {
  double il = 1.0;
  for (std::size_t s : sites) il *= geo.inv_lambda(grid.r(grid.radial_index(s)));
  return il;
}

}  // namespace

double density(const SpatialGrid& grid, const Geometry& geo, const FockState& st,
               std::span<const std::size_t> sites) {
  double norm = 0.0;
  for (const cplx& z : values_at(grid, st, sites)) norm += std::norm(z);
  return inv_lambda_product(grid, geo, sites) * norm;
}

std::vector<std::array<double, 3>> velocity(const SpatialGrid& grid, const Geometry& geo,
                                            const FockState& st,
                                            std::span<const std::size_t> sites) {
  std::vector<Point> pts;
  for (std::size_t s : sites) {
    if (grid.radial_index(s) == 0) throw std::invalid_argument("velocity: configuration must be interior");
    pts.push_back({grid.r(grid.radial_index(s)), grid.node_theta(grid.angular_index(s)),
                   grid.node_phi(grid.angular_index(s))});
  }
  return velocity_from_spinor(geo, values_at(grid, st, sites), pts);
}

double singularity_flux(const SpatialGrid& grid, const Geometry& geo, const FockState& st,
                        std::span<const std::size_t> q, std::size_t a) {
  const auto tr = boundary_trace(grid, st, q, a);
  const int n = static_cast<int>(q.size()) + 1;
  return inv_lambda_product(grid, geo, q) * slot_bilinear(tr, n, n - 1, dirac_matrices().alpha1);
}

double angular_flux(const SpatialGrid& grid, const Geometry& geo, const FockState& st,
                    std::span<const std::size_t> q) {
  double s = 0.0;
  for (std::size_t a = 0; a < grid.n_angular(); ++a)
    s += grid.omega(a) * singularity_flux(grid, geo, st, q, a);
  return s;
}

double flux_identity_rhs(const SpatialGrid& grid, const Geometry& geo,
                         std::span<const std::size_t> q, std::span<const cplx> c_plus_chi,
                         std::span<const cplx> c_minus_chi) {
  double p = 0.0, m = 0.0;
  for (const cplx& z : c_plus_chi) p += std::norm(z);
  for (const cplx& z : c_minus_chi) m += std::norm(z);
  return 4.0 * kPi * inv_lambda_product(grid, geo, q) * (p - m);
}

std::vector<SectorBalance> balance_audit(const DiscreteHamiltonian& H, const CVec& x,
                                         const CVec& x_next, double dt) {
  const int nmax = H.n_max();
  const double tau = dt / (2.0 * H.hbar());
  const CVec y = 0.5 * (x + x_next);
  const SpMat& M = H.M();
  const auto& grid = H.grid();
  const std::size_t A = grid.n_angular(), n_int = grid.n_interior_sites();

  std::vector<SectorBalance> rows(nmax + 1);
  // transfer[N][N'] into N from N'; per-column split of the N <- N-1 block
  std::vector<std::vector<double>> transfer(nmax + 1, std::vector<double>(nmax + 1, 0.0));
  std::vector<std::vector<double>> col_in(nmax + 1);
  for (int n = 1; n <= nmax; ++n) col_in[n].assign(H.sector_end(n - 1) - H.sector_begin(n - 1), 0.0);

  for (int r = 0; r < M.outerSize(); ++r) {
    const int nr = H.sector_of(static_cast<std::size_t>(r));
    for (SpMat::InnerIterator it(M, r); it; ++it) {
      const std::size_t c = static_cast<std::size_t>(it.col());
      const int nc = H.sector_of(c);
      if (nc == nr) continue;
      const double v = 4.0 * tau * std::imag(std::conj(y(r)) * it.value() * y(c));
      transfer[nr][nc] += v;
      if (nc == nr - 1) col_in[nr][c - H.sector_begin(nc)] += v;
    }
  }

  for (int n = 0; n <= nmax; ++n) {
    auto& row = rows[n];
    row.sector = n;
    row.mass_before = H.sector_norm2(x, n);
    row.mass_after = H.sector_norm2(x_next, n);
    row.d_mass = row.mass_after - row.mass_before;
    if (n >= 1) {
      row.from_below = transfer[n][n - 1];
      // group the columns by the configuration q' of sector n-1
      const std::size_t low = spin_dim(n - 1);
      const std::size_t groups = col_in[n].size() / low;
      for (std::size_t g = 0; g < groups; ++g) {
        double v = 0.0;
        for (std::size_t c = 0; c < low; ++c) v += col_in[n][g * low + c];
        if (v > 0.0) row.creation_in += v;
        else row.annihilation_out -= v;
      }
    }
    if (n < nmax) row.from_above = transfer[n][n + 1];
    row.residual = std::abs(row.d_mass - row.from_below - row.from_above);
  }

  // r = 0 flux diagnostic at the midpoint
  const FockState mid = H.to_state(y);
  for (int n = 1; n <= nmax && H.options().coupling; ++n) {
    const std::size_t nq = ipow(n_int, n - 1);
    std::vector<std::size_t> q(n - 1);
    double phi = 0.0;
    for (std::size_t iq = 0; iq < nq; ++iq) {
      unpack_tuple(iq, n - 1, n_int, q);
      for (auto& s : q) s += A;
      double wq = 1.0;
      for (std::size_t k = 0; k < q.size(); ++k)
        wq *= grid.w_rad(grid.radial_index(q[k])) * grid.omega(grid.angular_index(q[k])) / (k + 1.0);
      // w_rad already carries 1/lambda, so use the bare bilinear
      for (std::size_t a = 0; a < A; ++a) {
        const auto tr = boundary_trace(grid, mid, q, a);
        phi += wq * grid.omega(a) * slot_bilinear(tr, n, n - 1, dirac_matrices().alpha1);
      }
    }
    rows[n].boundary_flux = dt * phi;
  }
  return rows;
}

}  // namespace rnbohm
