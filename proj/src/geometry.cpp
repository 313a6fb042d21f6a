#include "rnbohm/geometry.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rnbohm/spinor.hpp"

namespace rnbohm {

void GeometryParams::validate() const {
  if (!(M > 0.0))
    throw ConfigError("geometry.M must be positive");
  if (!(std::abs(e) > M))
    throw ConfigError("geometry: need |e| > M (super-extremal Reissner-Nordstrom); got M=" +
                      std::to_string(M) + ", e=" + std::to_string(e));
  if (!(hbar > 0.0)) throw ConfigError("geometry.hbar must be positive");
  if (!(m >= 0.0)) throw ConfigError("geometry.m must be non-negative");
}

Geometry::Geometry(GeometryParams p) : p_(p) {
  // M = 0 is allowed here for closed-form checks; the config layer enforces M > 0.
  if (!(p_.M >= 0.0) || !(std::abs(p_.e) > p_.M))
    throw ConfigError("geometry: need |e| > M >= 0");
  if (!(p_.hbar > 0.0)) throw ConfigError("geometry.hbar must be positive");
  if (!(p_.m >= 0.0)) throw ConfigError("geometry.m must be non-negative");
}

Geometry::LambdaValue Geometry::lambda(double r) const {
  if (r < 0.0) throw std::domain_error("lambda: r must be non-negative");
  if (r == 0.0) return {std::numeric_limits<double>::max(), true};
  return {(r * r - 2.0 * p_.M * r + p_.e * p_.e) / (r * r), false};
}

double Geometry::inv_lambda(double r) const {
  if (r < 0.0) throw std::domain_error("inv_lambda: r must be non-negative");
  return r * r / (r * r - 2.0 * p_.M * r + p_.e * p_.e);
}

double Geometry::inv_lambda_integral(double r) const {
  const double M = p_.M, e2 = p_.e * p_.e;
  const double k = std::sqrt(e2 - M * M);
  auto F = [&](double x) {
    return x + M * std::log(x * x - 2.0 * M * x + e2) +
           (2.0 * M * M - e2) / k * std::atan((x - M) / k);
  };
  return F(r) - F(0.0);
}

double Geometry::min_lambda() const { return 1.0 - p_.M * p_.M / (p_.e * p_.e); }

std::array<Mat4, 4> Geometry::alpha_tilde(double r, double theta) const {
  if (r < 0.0) throw std::domain_error("alpha_tilde: r must be non-negative");
  if (!(theta > 0.0 && theta < kPi)) throw std::domain_error("alpha_tilde: theta at a pole");
  const auto& d = dirac_matrices();
  const double il = inv_lambda(r);
  return {Mat4::Identity() * il, d.alpha1, d.alpha2 * c_theta(r), d.alpha3 * c_phi(r, theta)};
}

double Geometry::c_theta(double r) const {
  if (r == 0.0) return 1.0 / std::abs(p_.e);
  // 1/(sqrt(lambda) r) = 1/sqrt(r^2 - 2Mr + e^2)
  return 1.0 / std::sqrt(r * r - 2.0 * p_.M * r + p_.e * p_.e);
}

double Geometry::c_phi(double r, double theta) const {
  return c_theta(r) / std::sin(theta);
}

std::array<std::array<double, 4>, 2> Geometry::normal_vectors(double r) const {
  return {{{std::sqrt(inv_lambda(r)), 0.0, 0.0, 0.0}, {1.0, 0.0, 0.0, 0.0}}};
}

double Geometry::radial_null_geodesic(double t0, Direction dir, double r) const {
  if (r < 0.0) throw std::domain_error("radial_null_geodesic: r must be non-negative");
  if (r == 0.0) return t0;
  double err = 0.0;
  const double I = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [this](double x) { return inv_lambda(x); }, 0.0, r, 15, 1e-14, &err);
  if (err > 1e-10) {
    std::ostringstream os;
    os << "radial_null_geodesic: quadrature did not converge (error estimate " << err << ")";
    throw Error(os.str());
  }
  return dir == Direction::outgoing ? t0 + I : t0 - I;
}

double Geometry::static_proper_time(double r, double dt) const {
  if (!(r > 0.0)) throw std::domain_error("static_proper_time: r must be positive");
  if (dt < 0.0) throw std::domain_error("static_proper_time: dt must be non-negative");
  return std::sqrt(lambda(r).value) * dt;
}

double volume_factor(double r) {
  if (r < 0.0) throw std::domain_error("volume_factor: r must be non-negative");
  return r * r;
}

}  // namespace rnbohm
