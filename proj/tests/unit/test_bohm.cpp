#include <doctest.h>

#include "rnbohm/bohm.hpp"
#include "rnbohm/stats.hpp"

#include <cmath>

using namespace rnbohm;

namespace {

struct Fixture {
  Geometry geo{GeometryParams{1.0, 2.0, 1.0, 0.0}};
  SpatialGrid grid{GridSpec{8, 4.0, 2, 2}, geo};
  BoundaryProfile prof = make_boundary_profile("constant", grid.n_angular());
};

// Timeline whose sector 1 equals `s1(a)` at every radial node (angular node a)
// and whose vacuum amplitude is psi0, frozen in time.
template <typename S1>
Timeline frozen(const Fixture& f, cplx psi0, S1 s1, double dt = 1e-3, int n = 11) {
  FockState st = make_zero_state(f.grid, 1);
  st.sectors[0][0] = psi0;
  for (int i = 0; i < f.grid.K(); ++i)
    for (std::size_t a = 0; a < f.grid.n_angular(); ++a) {
      const Spinor v = s1(a);
      for (int c = 0; c < 4; ++c) st.sectors[1][f.grid.site(i, a) * 4 + c] = v(c);
    }
  Timeline tl;
  tl.dt = dt;
  for (int k = 0; k < n; ++k) {
    st.time = k * dt;
    tl.snaps.push_back(st);
  }
  return tl;
}

Spinor e1() {
  Spinor s = Spinor::Zero();
  s(0) = 1.0;
  return s;
}

Configuration one(double r, double theta = 1.0, double phi = 0.5) {
  Configuration q;
  q.points.push_back({r, theta, phi});
  return q;
}

}  // namespace

TEST_CASE("deterministic jump") {
  Configuration q;
  q.points = {{1.0, 1.0, 1.0}, {0.0, 2.0, 2.0}};
  const auto a = deterministic_jump(q);
  REQUIRE(a.sector() == 1);
  CHECK(a.points[0].r == 1.0);
  CHECK(deterministic_jump(one(0.0)).sector() == 0);
  CHECK(deterministic_jump(one(0.5)).sector() == 1);
}

TEST_CASE("chart reflection") {
  Point p{1.0, -0.2, 0.5};
  reflect_chart(p);
  CHECK(p.theta == doctest::Approx(0.2));
  CHECK(p.phi == doctest::Approx(0.5 + kPi));
  Point q{1.0, kPi + 0.1, 6.0};
  reflect_chart(q);
  CHECK(q.theta == doctest::Approx(kPi - 0.1));
  CHECK(q.phi == doctest::Approx(6.0 + kPi - 2.0 * kPi));
}

TEST_CASE("zero current leaves the configuration in place") {
  Fixture f;
  const Timeline tl = frozen(f, 0.0, [](std::size_t) { return e1(); });
  const Field fld(tl, f.grid, f.geo);
  const MarkovProcess proc(fld);
  Configuration q = one(1.3);
  REQUIRE(proc.guide(q, 0.0, 0.01));
  CHECK(q.points[0].r == doctest::Approx(1.3).epsilon(1e-14));
  CHECK(q.points[0].theta == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("phi_- guidance follows the incoming null geodesic") {
  Fixture f;
  const Timeline tl = frozen(f, 0.0, [&](std::size_t a) { return f.prof.phi_minus(a); }, 0.01, 21);
  const Field fld(tl, f.grid, f.geo);
  const MarkovProcess proc(fld);
  const double r0 = 2.0, T = 0.15;
  Configuration q = one(r0);
  REQUIRE(proc.guide(q, 0.0, T));
  // incoming: inv_lambda_integral(r0) - inv_lambda_integral(r) = T
  const double elapsed = f.geo.inv_lambda_integral(r0) - f.geo.inv_lambda_integral(q.points[0].r);
  CHECK(std::abs(elapsed - T) < 1e-4);
}

TEST_CASE("guidance step halving") {
  Fixture f;
  const Timeline tl = frozen(f, 0.0, [&](std::size_t a) {
    Spinor s = 0.8 * f.prof.phi_minus(a) + 0.3 * kI * f.prof.phi_plus(a);
    s(1) += 0.2;
    return s;
  }, 0.01, 21);
  const Field fld(tl, f.grid, f.geo);
  ProcessOptions tight;
  tight.rk_tol = 1e-12;
  const MarkovProcess coarse(fld), fine(fld, tight);
  Configuration a = one(2.5, 1.2, 0.3), b = a;
  REQUIRE(coarse.guide(a, 0.0, 0.1));
  REQUIRE(fine.guide(b, 0.0, 0.1));
  CHECK(std::abs(a.points[0].r - b.points[0].r) < 1e-5);
  CHECK(std::abs(a.points[0].theta - b.points[0].theta) < 1e-5);
}

TEST_CASE("annihilation detection") {
  Fixture f;
  SUBCASE("outgoing current: no hit") {
    const Timeline tl = frozen(f, 1.0, [&](std::size_t a) { return f.prof.phi_plus(a); });
    const Field fld(tl, f.grid, f.geo);
    const MarkovProcess proc(fld);
    CHECK_FALSE(proc.detect_annihilation(one(0.5 * proc.options().r_hit), 0.0).has_value());
  }
  SUBCASE("inward current below r_hit: hit") {
    const Timeline tl = frozen(f, 1.0, [&](std::size_t a) { return f.prof.phi_minus(a); });
    const Field fld(tl, f.grid, f.geo);
    const MarkovProcess proc(fld);
    CHECK(proc.detect_annihilation(one(0.5 * proc.options().r_hit), 0.0).has_value());
    // exactly at r_hit the hit is declared
    CHECK(proc.detect_annihilation(one(proc.options().r_hit), 0.0).has_value());
    CHECK_FALSE(proc.detect_annihilation(one(2.0 * proc.options().r_hit), 0.0).has_value());
  }
}

TEST_CASE("radial infall from r = 0.1 reaches the singularity after r^3 / (3 e^2)") {
  Fixture f;
  const Timeline tl =
      frozen(f, 0.0, [&](std::size_t a) { return f.prof.phi_minus(a); }, 2e-5, 11);
  const Field fld(tl, f.grid, f.geo);
  ProcessOptions opt;
  opt.r_hit = 1e-3;
  const MarkovProcess proc(fld, opt);
  Rng rng = make_rng(1, 0);
  const auto res = proc.run(one(0.1), rng);
  REQUIRE(res.events.size() >= 1);
  CHECK(res.events[0].kind == EventKind::annihilation);
  CHECK(res.events[0].t == doctest::Approx(1e-3 / 12.0).epsilon(0.05));
}

TEST_CASE("creation rate of a product boundary state") {
  Fixture f;
  const cplx chi{0.3, 0.4};
  const Timeline tl = frozen(f, 1.0, [&](std::size_t a) { return Spinor(chi * f.prof.phi_plus(a)); });
  const Field fld(tl, f.grid, f.geo);
  const MarkovProcess proc(fld);
  const Configuration empty;
  for (std::size_t a = 0; a < f.grid.n_angular(); ++a)
    CHECK(proc.creation_rate(empty, 0.0, a) == doctest::Approx(std::norm(chi)));
  double total = 0.0;
  for (double r : proc.cell_rates(empty, 0.0)) total += r;
  CHECK(total == doctest::Approx(4.0 * kPi * std::norm(chi)));

  const Timeline in = frozen(f, 1.0, [&](std::size_t a) { return Spinor(chi * f.prof.phi_minus(a)); });
  const Field fin(in, f.grid, f.geo);
  CHECK(MarkovProcess(fin).creation_rate(empty, 0.0, 1) == 0.0);
  // sector N_max cannot create
  CHECK(proc.creation_rate(one(1.0), 0.0, 0) == 0.0);
}

TEST_CASE("creation times are exponential for a constant rate") {
  Fixture f;
  const Timeline tl = frozen(f, 1.0, [&](std::size_t a) { return f.prof.phi_plus(a); }, 1.0, 2);
  const Field fld(tl, f.grid, f.geo);
  const MarkovProcess proc(fld);
  const double rate = 4.0 * kPi;
  Rng rng = make_rng(31, 0);
  std::vector<double> times;
  const Configuration empty;
  for (int i = 0; i < 10000; ++i) {
    const auto ev = proc.sample_creation(empty, 0.0, 1.0, rng);
    REQUIRE(ev.has_value());
    times.push_back(ev->first);
  }
  const auto ks = ks_one_sample(times, [&](double t) { return 1.0 - std::exp(-rate * t); });
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("creation location follows the rate density") {
  Fixture f;
  SUBCASE("zero rate: no event") {
    const Timeline tl = frozen(f, 1.0, [&](std::size_t a) { return f.prof.phi_minus(a); });
    const Field fld(tl, f.grid, f.geo);
    Rng rng = make_rng(32, 0);
    CHECK_FALSE(MarkovProcess(fld).sample_creation(Configuration{}, 0.0, 0.01, rng).has_value());
  }
  SUBCASE("single outward cell") {
    const std::size_t hot = 2;
    const Timeline tl = frozen(f, 1.0, [&](std::size_t a) {
      return a == hot ? f.prof.phi_plus(a) : f.prof.phi_minus(a);
    });
    const Field fld(tl, f.grid, f.geo);
    const MarkovProcess proc(fld);
    Rng rng = make_rng(33, 0);
    for (int i = 0; i < 200; ++i) {
      const auto ev = proc.sample_creation(Configuration{}, 0.0, 0.01, rng);
      if (ev) CHECK(ev->second == hot);
    }
  }
}

TEST_CASE("Bell rate") {
  const Geometry geo(GeometryParams{1.0, 2.0, 1.0, 0.0});
  const SpatialGrid grid(GridSpec{4, 2.0, 2, 2}, geo);
  const auto prof = make_boundary_profile("constant", grid.n_angular());
  Rng rng = make_rng(34, 0);
  SUBCASE("no coupling") {
    AssembleOptions opt;
    opt.hi_sign = 0.0;
    opt.check_hermitian = false;
    const DiscreteHamiltonian H(geo, grid, prof, 1, opt);
    const FockState st = H.to_state(random_dof(H, rng));
    for (std::size_t a = 0; a < grid.n_angular(); ++a) CHECK(bell_rate(H, st, {}, a) == 0.0);
  }
  SUBCASE("global phase") {
    const DiscreteHamiltonian H(geo, grid, prof, 1);
    FockState st = H.to_state(random_dof(H, rng));
    std::vector<double> r0;
    for (std::size_t a = 0; a < grid.n_angular(); ++a) r0.push_back(bell_rate(H, st, {}, a));
    for (auto& v : st.sectors)
      for (auto& z : v) z *= std::polar(1.0, 2.1);
    for (std::size_t a = 0; a < grid.n_angular(); ++a)
      CHECK(bell_rate(H, st, {}, a) == doctest::Approx(r0[a]).epsilon(1e-12));
  }
}

TEST_CASE("ensembles are reproducible from the seed") {
  Fixture f;
  const Timeline tl = frozen(f, 0.6, [&](std::size_t a) {
    return Spinor(0.5 * f.prof.phi_plus(a) + 0.4 * f.prof.phi_minus(a));
  });
  const Field fld(tl, f.grid, f.geo);
  const MarkovProcess proc(fld);
  FockState st = tl.snaps.front();
  const double m = total_mass(f.grid, st);
  for (auto& v : st.sectors)
    for (auto& z : v) z /= std::sqrt(m);
  const ConfigurationSampler init(f.grid, st);
  const std::vector<int> cps{0, 10};
  const auto a = run_ensemble(proc, init, 50, 7, cps);
  const auto b = run_ensemble(proc, init, 50, 7, cps);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].events.size() == b[i].events.size());
    for (std::size_t k = 0; k < a[i].events.size(); ++k) CHECK(a[i].events[k].t == b[i].events[k].t);
    REQUIRE(a[i].checkpoints.size() == b[i].checkpoints.size());
    for (std::size_t c = 0; c < a[i].checkpoints.size(); ++c)
      for (std::size_t k = 0; k < a[i].checkpoints[c].points.size(); ++k)
        CHECK(a[i].checkpoints[c].points[k].r == b[i].checkpoints[c].points[k].r);
  }
}
