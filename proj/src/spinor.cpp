#include "rnbohm/spinor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rnbohm {

const DiracMatrices& dirac_matrices() {
  static const DiracMatrices m = [] {
    DiracMatrices d;
    const cplx o{1.0, 0.0};
    const cplx z{0.0, 0.0};
    // alpha^k = [[0, sigma_k], [sigma_k, 0]], beta = diag(1, 1, -1, -1)
    d.alpha1 << z, z, z, o,
                z, z, o, z,
                z, o, z, z,
                o, z, z, z;
    d.alpha2 << z, z, z, -kI,
                z, z, kI, z,
                z, -kI, z, z,
                kI, z, z, z;
    d.alpha3 << z, z, o, z,
                z, z, z, -o,
                o, z, z, z,
                z, -o, z, z;
    d.beta = Mat4::Zero();
    d.beta.diagonal() << o, o, -o, -o;
    return d;
  }();
  return m;
}

BoundaryProfile make_boundary_profile(const std::string& convention, std::size_t n_angular,
                                      std::span<const double> node_phi) {
  const double s = 1.0 / std::sqrt(2.0);
  Spinor plus, minus;
  if (convention == "constant" || convention == "twisted") {
    plus << s, 0, 0, s;
    minus << s, 0, 0, -s;
  } else if (convention == "rotated") {
    plus << 0, s, s, 0;
    minus << 0, s, -s, 0;
  } else {
    throw ConfigError("unknown boundary profile convention '" + convention + "'");
  }

  BoundaryProfile p;
  p.convention = convention;
  p.plus.assign(n_angular, plus);
  p.minus.assign(n_angular, minus);
  if (convention == "twisted") {
    if (node_phi.size() != n_angular)
      throw ConfigError("twisted profile needs one phi coordinate per angular node");
    for (std::size_t k = 0; k < n_angular; ++k) {
      const cplx phase = std::exp(kI * node_phi[k]);
      p.plus[k] *= phase;
      p.minus[k] *= phase;
    }
  }
  return p;
}

std::vector<cplx> apply_on_factor(const Mat4& m, int k, int n_particles,
                                  std::span<const cplx> psi) {
  if (k < 1 || k > n_particles)
    throw std::out_of_range("apply_on_factor: particle index out of range");
  const std::size_t dim = spin_dim(n_particles);
  if (psi.size() % dim != 0)
    throw std::invalid_argument("apply_on_factor: array size is not a multiple of 4^N");

  // stride of factor k inside the packed spin index
  const std::size_t stride = spin_dim(n_particles - k);
  std::vector<cplx> out(psi.size(), cplx{});
  for (std::size_t base = 0; base < psi.size(); base += dim) {
    for (std::size_t c = 0; c < dim; ++c) {
      const std::size_t ck = (c / stride) % 4;
      const std::size_t c0 = c - ck * stride;
      cplx acc{};
      for (std::size_t j = 0; j < 4; ++j) acc += m(ck, j) * psi[base + c0 + j * stride];
      out[base + c] = acc;
    }
  }
  return out;
}

namespace {

int parity(const std::vector<int>& perm) {
  int sign = 1;
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (seen[i]) continue;
    std::size_t len = 0;
    for (std::size_t j = i; !seen[j]; j = static_cast<std::size_t>(perm[j])) {
      seen[j] = true;
      ++len;
    }
    if (len % 2 == 0) sign = -sign;
  }
  return sign;
}

}  // namespace

std::vector<cplx> antisymmetrize(std::span<const cplx> psi, int n_particles,
                                 std::size_t n_sites) {
  if (n_particles <= 1) return {psi.begin(), psi.end()};
  const auto n = static_cast<std::size_t>(n_particles);
  const std::size_t dim = spin_dim(n_particles);
  std::size_t n_tuples = 1;
  for (std::size_t i = 0; i < n; ++i) n_tuples *= n_sites;
  if (psi.size() != n_tuples * dim)
    throw std::invalid_argument("antisymmetrize: array size does not match grid");

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> perms;
  std::vector<int> signs;
  do {
    perms.push_back(perm);
    signs.push_back(parity(perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double inv = 1.0 / static_cast<double>(perms.size());

  std::vector<cplx> out(psi.size(), cplx{});
  std::vector<std::size_t> s(n), c(n);
  for (std::size_t t = 0; t < n_tuples; ++t) {
    for (std::size_t i = 0, rem = t; i < n; ++i) {
      s[n - 1 - i] = rem % n_sites;
      rem /= n_sites;
    }
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t i = 0, rem = a; i < n; ++i) {
        c[n - 1 - i] = rem % 4;
        rem /= 4;
      }
      cplx acc{};
      for (std::size_t p = 0; p < perms.size(); ++p) {
        std::size_t tp = 0, ap = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const auto j = static_cast<std::size_t>(perms[p][i]);
          tp = tp * n_sites + s[j];
          ap = ap * 4 + c[j];
        }
        acc += static_cast<double>(signs[p]) * psi[tp * dim + ap];
      }
      out[t * dim + a] = acc * inv;
    }
  }
  return out;
}

}  // namespace rnbohm
