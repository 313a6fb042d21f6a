#include <doctest.h>

#include "rnbohm/hamiltonian.hpp"
#include "rnbohm/states.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace rnbohm;

namespace {

struct Small {
  Geometry geo;
  SpatialGrid grid;
  BoundaryProfile prof;
  DiscreteHamiltonian H;

  Small(int K, int n_max, AssembleOptions opt = {}, double mass = 0.0)
      : geo(GeometryParams{1.0, 2.0, 1.0, mass}),
        grid(GridSpec{K, 2.0, 2, 2}, geo),
        prof(make_boundary_profile("constant", grid.n_angular())),
        H(geo, grid, prof, n_max, opt) {}
};

}  // namespace

TEST_CASE("decoupled single sector is Hermitian") {
  AssembleOptions opt;
  opt.coupling = false;
  Small s(5, 1, opt);
  Rng rng = make_rng(3, 0);
  for (int i = 0; i < 20; ++i) {
    const CVec a = random_dof(s.H, rng), b = random_dof(s.H, rng);
    CHECK(hermiticity_defect(s.H, a, b) < 1e-12);
  }
}

TEST_CASE("coupled operator is Hermitian on random constrained pairs") {
  for (double mass : {0.0, 0.7}) {
    Small s(4, 2, {}, mass);
    CHECK(s.H.hermiticity_residual() < 1e-12);
    Rng rng = make_rng(4, 0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const CVec a = random_dof(s.H, rng), b = random_dof(s.H, rng);
      worst = std::max(worst, hermiticity_defect(s.H, a, b));
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("apply matches a dense oracle on a tiny grid") {
  Small s(3, 1);
  const Eigen::MatrixXcd G(s.H.G()), M(s.H.M());
  const Eigen::MatrixXcd E(s.H.E()), F(s.H.F());
  // G is the embedded weight form
  Eigen::VectorXcd wt(s.H.n_full());
  for (std::size_t k = 0; k < s.H.n_full(); ++k) wt(k) = s.H.Wt()[k];
  CHECK((G - E.adjoint() * wt.asDiagonal() * E).norm() < 1e-12 * G.norm());
  CHECK((M - M.adjoint()).norm() < 1e-12 * M.norm());
  Rng rng = make_rng(8, 0);
  const CVec x = random_dof(s.H, rng);
  const CVec want = G.partialPivLu().solve(M * x);
  CHECK((s.H.apply_dof(x) - want).norm() < 1e-12 * want.norm());
  CHECK(s.H.apply_dof(CVec::Zero(x.size())).norm() == 0.0);
}

TEST_CASE("constrained states satisfy both boundary conditions") {
  Small s(4, 2);
  Rng rng = make_rng(9, 0);
  const FockState st = s.H.to_state(random_dof(s.H, rng));
  for (const auto& row : check_boundary_conditions(s.grid, s.prof, st)) {
    CHECK(row.boun1 < 1e-10);
    CHECK(row.boun2 < 1e-10);
  }
  CHECK(s.H.constraint_residual(st) < 1e-12);
  const FockState zero = make_zero_state(s.grid, 2);
  for (const auto& v : s.H.apply(zero).sectors)
    for (const auto& z : v) CHECK(z == cplx{});
}

TEST_CASE("apply rejects states that violate the boundary conditions") {
  Small s(4, 1);
  FockState st = make_zero_state(s.grid, 1);
  st.sectors[1][s.grid.site(0, 0) * 4 + 1] = 1.0;
  CHECK_THROWS_AS(s.H.apply(st), BoundaryConditionViolation);
}

TEST_CASE("H_I on product boundary data") {
  Small s(4, 1);
  // H_I psi = coeff * sum_a Omega_a (phi+ - phi-)^* psi(a)
  auto hi = [&](cplx cp, cplx cm) {
    cplx acc{};
    for (std::size_t a = 0; a < s.grid.n_angular(); ++a) {
      const Spinor d = s.prof.phi_plus(a) - s.prof.phi_minus(a);
      const Spinor v = cp * s.prof.phi_plus(a) + cm * s.prof.phi_minus(a);
      acc += s.grid.omega(a) * d.dot(v);
    }
    return s.H.hi_coefficient() * acc;
  };
  CHECK(std::abs(hi(1.0, 1.0)) < 1e-14);
  // sign convention: the generator uses -i hbar sqrt(2 pi)
  const cplx want = -kI * std::sqrt(32.0 * kPi * kPi * kPi);
  CHECK(std::abs(hi(1.0, 0.0) - want) < 1e-12);
}

TEST_CASE("Crank-Nicolson preserves the norm") {
  Small s(4, 2);
  Rng rng = make_rng(10, 0);
  CVec x = random_dof(s.H, rng);
  x /= std::sqrt(s.H.norm2(x));
  CrankNicolson cn(s.H, 1e-3);
  for (int i = 0; i < 20; ++i) {
    const double before = s.H.norm2(x);
    const auto rep = cn.step(x);
    CHECK(rep.residual < 1e-10);
    CHECK(std::abs(s.H.norm2(x) - before) < 1e-10);
  }
}

TEST_CASE("decoupled evolution keeps every sector mass") {
  AssembleOptions opt;
  opt.coupling = false;
  Small s(4, 2, opt);
  Rng rng = make_rng(12, 0);
  CVec x = random_dof(s.H, rng);
  std::vector<double> m0;
  for (int n = 0; n <= 2; ++n) m0.push_back(s.H.sector_norm2(x, n));
  CrankNicolson cn(s.H, 1e-3);
  for (int i = 0; i < 10; ++i) cn.step(x);
  for (int n = 0; n <= 2; ++n) CHECK(std::abs(s.H.sector_norm2(x, n) - m0[n]) < 1e-10 * m0[n]);
}

TEST_CASE("Crank-Nicolson local error is third order") {
  Small s(6, 1);
  const CVec x0 = packet_state(s.H, PacketSpec{});
  SolverOptions so;
  so.tol = 1e-15;
  auto defect = [&](double dt) {
    CVec a = x0, b = x0;
    CrankNicolson full(s.H, dt, so), half(s.H, 0.5 * dt, so);
    full.step(a);
    half.step(b);
    half.step(b);
    return std::sqrt(s.H.norm2(a - b));
  };
  const double d1 = defect(2.5e-4), d2 = defect(1.25e-4);
  CHECK(d1 / d2 == doctest::Approx(8.0).epsilon(0.02));
}

TEST_CASE("packet state is normalized and continuous") {
  Small s(6, 2);
  const CVec x = packet_state(s.H, PacketSpec{});
  CHECK(s.H.norm2(x) == doctest::Approx(1.0));
  const FockState st = s.H.to_state(x);
  CHECK(total_mass(s.grid, st) == doctest::Approx(1.0).epsilon(1e-12));
  // sector 2 is antisymmetric
  const auto a = antisymmetrize(st.sectors[2], 2, s.grid.n_sites());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - st.sectors[2][i]));
  CHECK(d < 1e-12);
}
