#include "rnbohm/states.hpp"

#include <cmath>

namespace rnbohm {

namespace {

// Continues the r = 0 trace of sector n, which the boundary condition fixes to
// sqrt(8 pi) (phi+ + phi-)/2 psi_{n-1} when b = 0, into the interior with a
// Gaussian profile g(r), g(0) = 1.
void add_dressing(const DiscreteHamiltonian& H, double width, FockState& st, int n) {
  const auto& g = H.grid();
  const auto& prof = H.profile();
  const std::size_t ns = g.n_sites(), dim = spin_dim(n), low = spin_dim(n - 1);
  const double root = std::sqrt(8.0 * kPi);
  std::vector<cplx> d(st.sectors[n].size(), cplx{});
  std::vector<std::size_t> sites(n);
  for (std::size_t t = 0; t < ipow(ns, n); ++t) {
    unpack_tuple(t, n, ns, sites);
    const std::size_t last = sites[n - 1];
    const int i = g.radial_index(last);
    if (i == 0) continue;
    const double r = g.r(i), gr = std::exp(-(r / width) * (r / width));
    const std::size_t a = g.angular_index(last);
    const Spinor sp = 0.5 * (prof.phi_plus(a) + prof.phi_minus(a));
    const std::size_t tq = t / ns;  // tuple of the first n - 1 slots
    for (std::size_t c = 0; c < dim; ++c)
      d[t * dim + c] = root * gr * sp(c % 4) * st.sectors[n - 1][tq * low + c / 4];
  }
  if (n >= 2) d = antisymmetrize(d, n, ns);
  const double mult = static_cast<double>(n);
  for (std::size_t k = 0; k < d.size(); ++k) st.sectors[n][k] += (n >= 2 ? mult : 1.0) * d[k];
}

}  // namespace

CVec packet_state(const DiscreteHamiltonian& H, const PacketSpec& spec) {
  const auto& g = H.grid();
  const std::size_t ns = g.n_sites();
  const double s = 1.0 / std::sqrt(2.0);
  Spinor plus, minus;
  plus << s, 0, 0, s;
  minus << s, 0, 0, -s;
  const Spinor chi = (spec.incoming * minus + spec.outgoing * plus).normalized();

  auto one = [&](std::size_t site, double rc) {
    const int i = g.radial_index(site);
    if (i == 0) return Spinor(Spinor::Zero());
    const double r = g.r(i), z = (r - rc) / spec.width;
    const double ang = 1.0 + spec.theta_tilt * std::cos(g.node_theta(g.angular_index(site)));
    return Spinor(std::exp(-0.5 * z * z) * ang * chi);
  };

  FockState st = make_zero_state(g, H.n_max());
  st.sectors[0][0] = spec.psi0;
  for (int n = 1; n <= H.n_max(); ++n) {
    const double amp = n == 1 ? spec.w1 : spec.w2;
    const std::size_t dim = spin_dim(n), nt = ipow(ns, n);
    std::vector<std::size_t> sites(n);
    auto& v = st.sectors[n];
    for (std::size_t t = 0; t < nt; ++t) {
      unpack_tuple(t, n, ns, sites);
      std::vector<Spinor> f(n);
      bool zero = false;
      for (int k = 0; k < n; ++k) {
        f[k] = one(sites[k], spec.r_center + 1.2 * spec.width * k);
        if (f[k].isZero(0.0)) zero = true;
      }
      if (zero) continue;
      for (std::size_t c = 0; c < dim; ++c) {
        cplx val = amp;
        for (int k = 0; k < n; ++k) val *= f[k]((c / spin_dim(n - 1 - k)) % 4);
        v[t * dim + c] = val;
      }
    }
    if (n >= 2) v = antisymmetrize(v, n, ns);
    if (spec.dress_width > 0.0) add_dressing(H, spec.dress_width, st, n);
  }
  CVec x = H.to_dof(st);
  // boundary spinors start at zero (equal c+ and c-)
  for (int n = 1; n <= H.n_max(); ++n)
    for (std::size_t k = H.b_begin(n); k < H.sector_end(n); ++k) x(k) = 0.0;
  const double nrm = H.norm2(x);
  if (!(nrm > 0.0)) throw Error("packet_state: zero state");
  return x / std::sqrt(nrm);
}

}  // namespace rnbohm
