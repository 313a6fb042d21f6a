#include <doctest.h>

#include "rnbohm/fock.hpp"
#include "rnbohm/spinor.hpp"

#include <Eigen/Eigenvalues>

#include <random>

using namespace rnbohm;

namespace {

std::vector<cplx> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<cplx> v(n);
  for (auto& z : v) z = {nd(rng), nd(rng)};
  return v;
}

double norm2(const std::vector<cplx>& v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return s;
}

}  // namespace

TEST_CASE("Clifford relations") {
  const auto& d = dirac_matrices();
  const Mat4 mats[4] = {d.alpha1, d.alpha2, d.alpha3, d.beta};
  for (int i = 0; i < 4; ++i) {
    CHECK((mats[i] - mats[i].adjoint()).norm() == 0.0);
    CHECK((mats[i] * mats[i] - Mat4::Identity()).norm() == 0.0);
    for (int j = i + 1; j < 4; ++j) CHECK((mats[i] * mats[j] + mats[j] * mats[i]).norm() == 0.0);
  }
}

TEST_CASE("alpha1 spectrum") {
  Eigen::SelfAdjointEigenSolver<Mat4> es(dirac_matrices().alpha1);
  const auto ev = es.eigenvalues();
  CHECK(ev(0) == doctest::Approx(-1.0));
  CHECK(ev(1) == doctest::Approx(-1.0));
  CHECK(ev(2) == doctest::Approx(1.0));
  CHECK(ev(3) == doctest::Approx(1.0));
}

TEST_CASE("boundary profiles are orthonormal alpha1 eigenvectors") {
  const auto& a1 = dirac_matrices().alpha1;
  const std::vector<double> phis{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  for (const char* conv : {"constant", "rotated", "twisted"}) {
    CAPTURE(conv);
    const auto p = make_boundary_profile(conv, phis.size(), phis);
    REQUIRE(p.size() == phis.size());
    for (std::size_t a = 0; a < p.size(); ++a) {
      CHECK((a1 * p.phi_plus(a) - p.phi_plus(a)).norm() < 1e-15);
      CHECK((a1 * p.phi_minus(a) + p.phi_minus(a)).norm() < 1e-15);
      CHECK(p.phi_plus(a).squaredNorm() == doctest::Approx(1.0));
      CHECK(p.phi_minus(a).squaredNorm() == doctest::Approx(1.0));
      CHECK(std::abs(p.phi_plus(a).dot(p.phi_minus(a))) < 1e-15);
    }
  }
  CHECK_THROWS(make_boundary_profile("nonsense", 4));
}

TEST_CASE("profile norm is 4 pi under the grid quadrature") {
  const Geometry geo(GeometryParams{});
  const SpatialGrid g(GridSpec{4, 2.0, 4, 6}, geo);
  const auto p = make_boundary_profile("constant", g.n_angular(), g.node_phis());
  double np = 0.0, nm = 0.0;
  for (std::size_t a = 0; a < g.n_angular(); ++a) {
    np += g.omega(a) * p.phi_plus(a).squaredNorm();
    nm += g.omega(a) * p.phi_minus(a).squaredNorm();
  }
  CHECK(np == doctest::Approx(4.0 * kPi).epsilon(1e-12));
  CHECK(nm == doctest::Approx(4.0 * kPi).epsilon(1e-12));
}

TEST_CASE("apply_on_factor") {
  const auto& d = dirac_matrices();
  const auto p = make_boundary_profile("constant", 1);
  std::vector<cplx> phi(p.phi_plus(0).data(), p.phi_plus(0).data() + 4);
  const auto out = apply_on_factor(d.alpha1, 1, 1, phi);
  for (int c = 0; c < 4; ++c) CHECK(std::abs(out[c] - phi[c]) < 1e-15);

  const auto psi = random_vec(3 * 16, 1);
  const auto id = apply_on_factor(Mat4::Identity(), 2, 2, psi);
  for (std::size_t i = 0; i < psi.size(); ++i) CHECK(id[i] == psi[i]);

  const auto a = apply_on_factor(d.alpha3, 2, 2, apply_on_factor(d.alpha2, 1, 2, psi));
  const auto b = apply_on_factor(d.alpha2, 1, 2, apply_on_factor(d.alpha3, 2, 2, psi));
  for (std::size_t i = 0; i < psi.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-14);

  CHECK_THROWS(apply_on_factor(d.alpha1, 3, 2, psi));
  CHECK_THROWS(apply_on_factor(d.alpha1, 0, 2, psi));
}

TEST_CASE("antisymmetrize is an orthogonal projector") {
  const std::size_t ns = 5;
  for (int n : {1, 2, 3}) {
    CAPTURE(n);
    const auto psi = random_vec(ipow(ns, n) * spin_dim(n), 7 + n);
    const auto a = antisymmetrize(psi, n, ns);
    const auto aa = antisymmetrize(a, n, ns);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - aa[i]));
    CHECK(diff < 1e-14);
    CHECK(norm2(a) <= norm2(psi) * (1 + 1e-14));
    // the residual is orthogonal to the image
    cplx ip = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ip += std::conj(a[i]) * (psi[i] - a[i]);
    CHECK(std::abs(ip) < 1e-10 * norm2(psi));
  }
}

TEST_CASE("antisymmetrize kills symmetric two-particle data") {
  const std::size_t ns = 4;
  const auto u = random_vec(ns * 4, 3);
  std::vector<cplx> sym(ns * ns * 16);
  for (std::size_t s1 = 0; s1 < ns; ++s1)
    for (std::size_t s2 = 0; s2 < ns; ++s2)
      for (int c1 = 0; c1 < 4; ++c1)
        for (int c2 = 0; c2 < 4; ++c2)
          sym[(s1 * ns + s2) * 16 + c1 * 4 + c2] = u[s1 * 4 + c1] * u[s2 * 4 + c2];
  const auto a = antisymmetrize(sym, 2, ns);
  CHECK(norm2(a) < 1e-28);
}
