#include <doctest.h>

#include "rnbohm/fock.hpp"
#include "rnbohm/stats.hpp"

#include <cmath>
#include <map>

using namespace rnbohm;

namespace {

struct Fixture {
  Geometry geo{GeometryParams{}};
  SpatialGrid grid{GridSpec{4, 2.0, 2, 3}, geo};
  BoundaryProfile prof = make_boundary_profile("constant", grid.n_angular());
};

// Sector 1 trace phi_+ c_p + phi_- c_m at every angular node, psi_0 = psi0.
FockState product_state(const Fixture& f, cplx c_p, cplx c_m, cplx psi0) {
  FockState st = make_zero_state(f.grid, 1);
  st.sectors[0][0] = psi0;
  for (std::size_t a = 0; a < f.grid.n_angular(); ++a) {
    const Spinor v = c_p * f.prof.phi_plus(a) + c_m * f.prof.phi_minus(a);
    for (int c = 0; c < 4; ++c) st.sectors[1][f.grid.site(0, a) * 4 + c] = v(c);
  }
  return st;
}

}  // namespace

TEST_CASE("tuple packing round trip") {
  std::vector<std::size_t> s{3, 0, 7}, out(3);
  const std::size_t t = pack_tuple(s, 11);
  unpack_tuple(t, 3, 11, out);
  CHECK(out == s);
}

TEST_CASE("boundary trace of a product state") {
  Fixture f;
  const FockState st = product_state(f, 1.0, 0.0, 0.0);
  for (std::size_t a = 0; a < f.grid.n_angular(); ++a) {
    const auto tr = boundary_trace(f.grid, st, {}, a);
    for (int c = 0; c < 4; ++c) CHECK(std::abs(tr[c] - f.prof.phi_plus(a)(c)) < 1e-15);
  }
  const FockState zero = make_zero_state(f.grid, 1);
  for (const auto& z : boundary_trace(f.grid, zero, {}, 0)) CHECK(z == cplx{});
  std::vector<std::size_t> q{f.grid.site(0, 0)};
  FockState two = make_zero_state(f.grid, 2);
  CHECK_THROWS(boundary_trace(f.grid, two, q, 0));
  CHECK_THROWS(boundary_trace(f.grid, st, std::vector<std::size_t>{f.grid.site(1, 0)}, 0));
}

TEST_CASE("trace of an antisymmetrized state is antisymmetric in the spectators") {
  Fixture f;
  FockState st = make_zero_state(f.grid, 3);
  Rng rng = make_rng(5, 0);
  std::normal_distribution<double> nd;
  for (auto& z : st.sectors[3]) z = {nd(rng), nd(rng)};
  st.sectors[3] = antisymmetrize(st.sectors[3], 3, f.grid.n_sites());
  const std::size_t s1 = f.grid.site(1, 2), s2 = f.grid.site(3, 4);
  for (std::size_t a = 0; a < f.grid.n_angular(); ++a) {
    const std::vector<std::size_t> q12{s1, s2}, q21{s2, s1};
    const auto t12 = boundary_trace(f.grid, st, q12, a);
    const auto t21 = boundary_trace(f.grid, st, q21, a);
    // swap the two spectator spin factors of t21
    for (int c1 = 0; c1 < 4; ++c1)
      for (int c2 = 0; c2 < 4; ++c2)
        for (int c3 = 0; c3 < 4; ++c3)
          CHECK(std::abs(t12[(c1 * 4 + c2) * 4 + c3] + t21[(c2 * 4 + c1) * 4 + c3]) < 1e-12);
  }
}

TEST_CASE("decompose_boundary") {
  Fixture f;
  SUBCASE("pure phi_+") {
    const auto d = decompose_boundary(f.grid, f.prof, product_state(f, 1.0, 0.0, 0.0), {});
    CHECK(std::abs(d.Psi_plus[0] - 4.0 * kPi) < 1e-12);
    CHECK(std::abs(d.Psi_minus[0]) < 1e-12);
    CHECK(std::abs(d.c_plus_chi[0] - 1.0) < 1e-14);
    CHECK(d.residual < 1e-14);
  }
  SUBCASE("phi_+ + phi_-") {
    const auto d = decompose_boundary(f.grid, f.prof, product_state(f, 1.0, 1.0, 0.0), {});
    CHECK(std::abs(d.Psi_plus[0] - 4.0 * kPi) < 1e-12);
    CHECK(std::abs(d.Psi_minus[0] - 4.0 * kPi) < 1e-12);
  }
  SUBCASE("component outside W") {
    FockState st = product_state(f, 1.0, 0.0, 0.0);
    st.sectors[1][f.grid.site(0, 1) * 4 + 1] += 0.5;
    CHECK_THROWS_AS(decompose_boundary(f.grid, f.prof, st, {}), BoundaryConditionViolation);
  }
  SUBCASE("linearity and reconstruction") {
    const cplx cp{0.3, -1.2}, cm{0.7, 0.4};
    const FockState st = product_state(f, cp, cm, 0.0);
    const auto d = decompose_boundary(f.grid, f.prof, st, {});
    CHECK(std::abs(d.c_plus_chi[0] - cp) < 1e-13);
    CHECK(std::abs(d.c_minus_chi[0] - cm) < 1e-13);
    for (std::size_t a = 0; a < f.grid.n_angular(); ++a) {
      const auto tr = boundary_trace(f.grid, st, {}, a);
      const Spinor rec = (d.Psi_plus[0] * f.prof.phi_plus(a) + d.Psi_minus[0] * f.prof.phi_minus(a)) /
                         (4.0 * kPi);
      for (int c = 0; c < 4; ++c) CHECK(std::abs(tr[c] - rec(c)) < 1e-12);
    }
  }
}

TEST_CASE("boundary condition residuals") {
  Fixture f;
  const FockState ok = product_state(f, 1.0, 0.0, 1.0 / std::sqrt(8.0 * kPi));
  const auto r = check_boundary_conditions(f.grid, f.prof, ok);
  REQUIRE(r.size() == 1);
  CHECK(r[0].boun1 < 1e-14);
  CHECK(r[0].boun2 < 1e-14);

  FockState bad = make_zero_state(f.grid, 2);
  Rng rng = make_rng(2, 0);
  std::normal_distribution<double> nd;
  for (int n = 0; n <= 2; ++n)
    for (auto& z : bad.sectors[n]) z = {nd(rng), nd(rng)};
  for (const auto& row : check_boundary_conditions(f.grid, f.prof, bad)) {
    CHECK(row.boun1 > 1e-3);
    CHECK(row.boun2 > 1e-3);
  }
}

TEST_CASE("sampler: point mass") {
  Fixture f;
  FockState st = make_zero_state(f.grid, 1);
  const std::size_t s = f.grid.site(2, 3);
  st.sectors[1][s * 4] = 1.0 / std::sqrt(f.grid.wt(s));
  const ConfigurationSampler sampler(f.grid, st);
  Rng rng = make_rng(1, 0);
  for (int i = 0; i < 200; ++i) {
    const auto q = sampler.draw(rng);
    REQUIRE(q.sector() == 1);
    CHECK(f.grid.radial_cell(q.points[0].r) == 2);
    CHECK(f.grid.angular_cell(q.points[0].theta, q.points[0].phi) == 3);
  }
}

TEST_CASE("sampler: equal sectors and uniform law") {
  Fixture f;
  FockState st = make_zero_state(f.grid, 1);
  st.sectors[0][0] = std::sqrt(0.5);
  // density proportional to the cell weight: uniform over sites
  const std::size_t ns = f.grid.n_sites();
  for (std::size_t s = 0; s < ns; ++s) st.sectors[1][s * 4 + 2] = std::sqrt(0.5 / ns / f.grid.wt(s));
  const ConfigurationSampler sampler(f.grid, st);
  Rng rng = make_rng(1, 0);
  const int n = 100000;
  std::vector<double> counts(ns, 0.0);
  int ones = 0;
  for (int i = 0; i < n; ++i) {
    const auto q = sampler.draw(rng);
    if (q.sector() == 0) continue;
    ++ones;
    const auto& p = q.points[0];
    counts[f.grid.site(f.grid.radial_cell(p.r), f.grid.angular_cell(p.theta, p.phi))] += 1.0;
  }
  CHECK(std::abs(binomial_z(ones, n, 0.5)) < 3.0);
  const std::vector<double> probs(ns, 1.0 / ns);
  CHECK(chi_square_gof(counts, probs).p_value > 0.01);
}

TEST_CASE("sampler rejects unnormalized states") {
  Fixture f;
  FockState st = make_zero_state(f.grid, 1);
  st.sectors[0][0] = 2.0;
  CHECK_THROWS_AS(ConfigurationSampler(f.grid, st), Error);
}

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a = make_rng(42, 3), b = make_rng(42, 3), c = make_rng(42, 4);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
}
