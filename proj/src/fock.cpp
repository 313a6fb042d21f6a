#include "rnbohm/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rnbohm {

std::size_t ipow(std::size_t base, int n) {
  std::size_t v = 1;
  for (int i = 0; i < n; ++i) v *= base;
  return v;
}

std::size_t sector_size(const SpatialGrid& grid, int n) {
  return ipow(grid.n_sites(), n) * spin_dim(n);
}

FockState make_zero_state(const SpatialGrid& grid, int n_max) {
  FockState st;
  st.n_max = n_max;
  st.sectors.resize(n_max + 1);
  for (int n = 0; n <= n_max; ++n) st.sectors[n].assign(sector_size(grid, n), cplx{});
  return st;
}

double tuple_weight(const SpatialGrid& grid, std::span<const std::size_t> sites) {
  double w = 1.0;
  for (std::size_t k = 0; k < sites.size(); ++k) w *= grid.wt(sites[k]) / static_cast<double>(k + 1);
  return w;
}

void unpack_tuple(std::size_t t, int n, std::size_t n_sites, std::span<std::size_t> out) {
  for (int k = n - 1; k >= 0; --k) {
    out[k] = t % n_sites;
    t /= n_sites;
  }
}

std::size_t pack_tuple(std::span<const std::size_t> sites, std::size_t n_sites) {
  std::size_t t = 0;
  for (std::size_t s : sites) t = t * n_sites + s;
  return t;
}

double sector_mass(const SpatialGrid& grid, const FockState& st, int n) {
  const auto& v = st.sectors.at(n);
  if (n == 0) return std::norm(v[0]);
  const std::size_t dim = spin_dim(n), ns = grid.n_sites();
  const std::size_t nt = v.size() / dim;
  std::vector<std::size_t> sites(n);
  double sum = 0.0;
  for (std::size_t t = 0; t < nt; ++t) {
    double local = 0.0;
    for (std::size_t c = 0; c < dim; ++c) local += std::norm(v[t * dim + c]);
    if (local == 0.0) continue;
    unpack_tuple(t, n, ns, sites);
    sum += tuple_weight(grid, sites) * local;
  }
  return sum;
}

double total_mass(const SpatialGrid& grid, const FockState& st) {
  double s = 0.0;
  for (int n = 0; n <= st.n_max; ++n) s += sector_mass(grid, st, n);
  return s;
}

std::vector<cplx> boundary_trace(const SpatialGrid& grid, const FockState& st,
                                 std::span<const std::size_t> q, std::size_t a) {
  const int n = static_cast<int>(q.size()) + 1;
  if (n > st.n_max) throw std::out_of_range("boundary_trace: no sector above the configuration");
  for (std::size_t s : q)
    if (grid.is_boundary(grid.radial_index(s)))
      throw std::invalid_argument("boundary_trace: configuration must be interior");
  std::vector<std::size_t> sites(q.begin(), q.end());
  sites.push_back(grid.site(0, a));
  const std::size_t dim = spin_dim(n);
  const std::size_t base = pack_tuple(sites, grid.n_sites()) * dim;
  const auto& v = st.sectors[n];
  return {v.begin() + static_cast<std::ptrdiff_t>(base),
          v.begin() + static_cast<std::ptrdiff_t>(base + dim)};
}

namespace {

struct Projection {
  std::vector<cplx> plus, minus;
  double res2 = 0.0;
};

// Psi_pm = sum_a Omega_a phi_pm(a)^* f(a), residual of f against its W projection.
Projection project(const SpatialGrid& grid, const BoundaryProfile& prof, const FockState& st,
                   std::span<const std::size_t> q) {
  const int n = static_cast<int>(q.size()) + 1;
  const std::size_t lower = spin_dim(n - 1);
  Projection p;
  p.plus.assign(lower, cplx{});
  p.minus.assign(lower, cplx{});
  std::vector<std::vector<cplx>> traces(grid.n_angular());
  for (std::size_t a = 0; a < grid.n_angular(); ++a) {
    traces[a] = boundary_trace(grid, st, q, a);
    const double w = grid.omega(a);
    for (std::size_t c = 0; c < lower; ++c)
      for (int d = 0; d < 4; ++d) {
        const cplx f = traces[a][c * 4 + d];
        p.plus[c] += w * std::conj(prof.plus[a](d)) * f;
        p.minus[c] += w * std::conj(prof.minus[a](d)) * f;
      }
  }
  const double inv4pi = 1.0 / (4.0 * kPi);
  for (std::size_t a = 0; a < grid.n_angular(); ++a) {
    const double w = grid.omega(a);
    for (std::size_t c = 0; c < lower; ++c)
      for (int d = 0; d < 4; ++d) {
        const cplx proj = (prof.plus[a](d) * p.plus[c] + prof.minus[a](d) * p.minus[c]) * inv4pi;
        p.res2 += w * std::norm(traces[a][c * 4 + d] - proj);
      }
  }
  return p;
}

}  // namespace

BoundaryDecomposition decompose_boundary(const SpatialGrid& grid, const BoundaryProfile& prof,
                                         const FockState& st, std::span<const std::size_t> q,
                                         double tol) {
  Projection p = project(grid, prof, st, q);
  BoundaryDecomposition d;
  d.residual = std::sqrt(p.res2);
  if (d.residual > tol)
    throw BoundaryConditionViolation("boundary trace is not in W (x) spin space", d.residual);
  d.c_plus_chi = p.plus;
  d.c_minus_chi = p.minus;
  for (auto& z : d.c_plus_chi) z /= 4.0 * kPi;
  for (auto& z : d.c_minus_chi) z /= 4.0 * kPi;
  d.Psi_plus = std::move(p.plus);
  d.Psi_minus = std::move(p.minus);
  return d;
}

std::vector<BoundaryResidual> check_boundary_conditions(const SpatialGrid& grid,
                                                        const BoundaryProfile& prof,
                                                        const FockState& st) {
  std::vector<BoundaryResidual> out;
  const std::size_t ns = grid.n_sites();
  const double k2 = 1.0 / (4.0 * kPi * std::sqrt(8.0 * kPi));
  for (int n = 1; n <= st.n_max; ++n) {
    BoundaryResidual row;
    row.sector = n;
    double r1 = 0.0, r2 = 0.0;
    const std::size_t lower = spin_dim(n - 1);
    const std::size_t nq = ipow(ns, n - 1);
    std::vector<std::size_t> q(n - 1);
    for (std::size_t t = 0; t < nq; ++t) {
      unpack_tuple(t, n - 1, ns, q);
      if (std::any_of(q.begin(), q.end(), [&](std::size_t s) { return grid.radial_index(s) == 0; }))
        continue;
      Projection p = project(grid, prof, st, q);
      r1 += p.res2;
      for (std::size_t c = 0; c < lower; ++c) {
        const cplx lhs = st.sectors[n - 1][t * lower + c];
        r2 += std::norm(lhs - k2 * (p.plus[c] + p.minus[c]));
      }
    }
    row.boun1 = std::sqrt(r1);
    row.boun2 = std::sqrt(r2);
    out.push_back(row);
  }
  return out;
}

Point sample_in_cell(const SpatialGrid& grid, std::size_t site, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int i = grid.radial_index(site);
  const std::size_t a = grid.angular_index(site);
  const int j = static_cast<int>(a) / grid.n_phi();
  const int k = static_cast<int>(a) % grid.n_phi();
  Point p;
  const double lo = grid.cell_r_lo(i), hi = grid.cell_r_hi(i);
  // 1 - u lies in (0, 1], which keeps r > 0 in the boundary cell
  p.r = hi - (1.0 - u(rng)) * (hi - lo);
  if (p.r <= 0.0) p.r = 0.5 * hi;
  const double c = grid.cell_cos_lo(j) + u(rng) * (grid.cell_cos_hi(j) - grid.cell_cos_lo(j));
  p.theta = std::acos(std::clamp(c, -1.0, 1.0));
  p.theta = std::clamp(p.theta, 1e-12, kPi - 1e-12);
  p.phi = 2.0 * kPi * (k + u(rng)) / grid.n_phi();
  return p;
}

ConfigurationSampler::ConfigurationSampler(const SpatialGrid& grid, const FockState& st)
    : grid_(&grid), n_max_(st.n_max), masses_(st.n_max + 1), cum_(st.n_max + 1) {
  const std::size_t ns = grid.n_sites();
  for (int n = 0; n <= n_max_; ++n) {
    if (n == 0) {
      masses_[0] = std::norm(st.sectors[0][0]);
      continue;
    }
    const std::size_t dim = spin_dim(n);
    const auto& v = st.sectors[n];
    const std::size_t nt = v.size() / dim;
    auto& cum = cum_[n];
    cum.resize(nt);
    std::vector<std::size_t> sites(n);
    double acc = 0.0;
    for (std::size_t t = 0; t < nt; ++t) {
      double local = 0.0;
      for (std::size_t c = 0; c < dim; ++c) local += std::norm(v[t * dim + c]);
      if (local > 0.0) {
        unpack_tuple(t, n, ns, sites);
        acc += tuple_weight(grid, sites) * local;
      }
      cum[t] = acc;
    }
    masses_[n] = acc;
  }
  const double total = std::accumulate(masses_.begin(), masses_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-6)
    throw Error("sample_configuration: state is not normalized (mass " + std::to_string(total) + ")");
}

Configuration ConfigurationSampler::draw(Rng& rng) const {
  std::discrete_distribution<int> pick_sector(masses_.begin(), masses_.end());
  const int n = pick_sector(rng);
  Configuration q;
  if (n == 0) return q;
  const auto& cum = cum_[n];
  std::uniform_real_distribution<double> u(0.0, cum.back());
  const double x = u(rng);
  std::size_t t = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), x) - cum.begin());
  t = std::min(t, cum.size() - 1);
  std::vector<std::size_t> sites(n);
  unpack_tuple(t, n, grid_->n_sites(), sites);
  for (std::size_t s : sites) q.points.push_back(sample_in_cell(*grid_, s, rng));
  return q;
}

Configuration sample_configuration(const SpatialGrid& grid, const FockState& st, Rng& rng) {
  return ConfigurationSampler(grid, st).draw(rng);
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

}  // namespace rnbohm
