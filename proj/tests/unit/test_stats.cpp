#include <doctest.h>

#include "rnbohm/fock.hpp"
#include "rnbohm/stats.hpp"

#include <cmath>

using namespace rnbohm;

TEST_CASE("normal tails") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("chi-square against tabulated values") {
  // statistic 3.84146 with one degree of freedom has p = 0.05
  const std::vector<double> counts{50.0 + std::sqrt(3.841458820694124 * 25.0), 0.0};
  std::vector<double> c{counts[0], 100.0 - counts[0]};
  const std::vector<double> p{0.5, 0.5};
  const auto r = chi_square_gof(c, p);
  CHECK(r.dof == 1);
  CHECK(r.statistic == doctest::Approx(3.841458820694124));
  CHECK(r.p_value == doctest::Approx(0.05).epsilon(1e-6));
  // events where the law has no mass
  const std::vector<double> c2{10, 5}, p2{1.0, 0.0};
  CHECK(chi_square_gof(c2, p2).p_value == 0.0);
}

TEST_CASE("Kolmogorov survival function") {
  CHECK(kolmogorov_sf(1.3580986393225507) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(kolmogorov_sf(0.0) == 1.0);
}

TEST_CASE("KS tests accept their own law and reject a shifted one") {
  Rng rng = make_rng(1, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a, b, c;
  for (int i = 0; i < 4000; ++i) {
    a.push_back(u(rng));
    b.push_back(u(rng));
    c.push_back(u(rng) + 0.1);
  }
  CHECK(ks_one_sample(a, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value > 0.01);
  CHECK(ks_two_sample(a, b).p_value > 0.01);
  CHECK(ks_two_sample(a, c).p_value < 1e-6);
}

TEST_CASE("binomial z scores") {
  CHECK(binomial_z(60, 100, 0.5) == doctest::Approx(2.0));
  // the exact version agrees with the normal one for large n p
  CHECK(binomial_equivalent_z(5300, 10000, 0.5) == doctest::Approx(6.0).epsilon(0.03));
  CHECK(binomial_equivalent_z(4700, 10000, 0.5) == doctest::Approx(-6.0).epsilon(0.03));
  CHECK(binomial_equivalent_z(50, 100, 0.5) == 0.0);
  // one event where n p = 0.05: two-sided p = 2 (1 - e^{-0.05})
  const double pv = 2.0 * (1.0 - std::exp(-0.05));
  CHECK(normal_two_sided_p(binomial_equivalent_z(1, 10000, 5e-6)) == doctest::Approx(pv).epsilon(1e-3));
  CHECK(binomial_z(1, 10000, 5e-6) > 4.0);
  CHECK(std::isinf(binomial_equivalent_z(1, 100, 0.0)));
  // extreme tails stay finite or signed infinite, never throw
  CHECK(binomial_equivalent_z(9000, 10000, 0.5) > 30.0);
  CHECK(binomial_equivalent_z(0, 10000, 0.5) < -30.0);
}

TEST_CASE("total variation and Poisson difference") {
  const std::vector<double> p{0.5, 0.5}, q{0.2, 0.8};
  CHECK(total_variation(p, q) == doctest::Approx(0.3));
  CHECK(poisson_difference_z(100, 100) == 0.0);
  CHECK(poisson_difference_z(120, 80) == doctest::Approx(40.0 / std::sqrt(200.0)));
}
