#pragma once

#include <array>

#include "rnbohm/types.hpp"

namespace rnbohm {

// Background parameters in geometric units.
struct GeometryParams {
  double M = 1.0;
  double e = 2.0;
  double hbar = 1.0;
  double m = 0.0;  // Dirac mass

  // Throws ConfigError unless 0 < M < |e|, hbar > 0 and m >= 0.
  void validate() const;
};

class Geometry {
 public:
  explicit Geometry(GeometryParams p);

  const GeometryParams& params() const { return p_; }

  struct LambdaValue {
    double value;   // +inf never stored; see `infinite`
    bool infinite;  // true only at r = 0
  };

  // lambda(r) = 1 - 2M/r + e^2/r^2.
  LambdaValue lambda(double r) const;
  // 1/lambda = r^2 / (r^2 - 2Mr + e^2); finite everywhere, 0 at r = 0.
  double inv_lambda(double r) const;
  // Closed form of the integral of 1/lambda from 0 to r.
  double inv_lambda_integral(double r) const;

  double min_lambda() const;  // 1 - M^2/e^2, attained at r = e^2/M

  // Coordinate-basis matrices (t, r, theta, phi). At r = 0 the limits are used.
  std::array<Mat4, 4> alpha_tilde(double r, double theta) const;

  // Unit normal n and rescaled normal n~ of the t = const surfaces.
  std::array<std::array<double, 4>, 2> normal_vectors(double r) const;

  enum class Direction { outgoing, incoming };
  // t0 +- integral_0^r dr'/lambda by adaptive Gauss-Kronrod quadrature.
  double radial_null_geodesic(double t0, Direction dir, double r) const;

  // sqrt(lambda(r)) * dt along a curve at fixed (r, omega).
  double static_proper_time(double r, double dt) const;

  // Coefficients of d/dtheta and d/dphi in lambda^{-1} H; limits at r = 0.
  double c_theta(double r) const;
  double c_phi(double r, double theta) const;

 private:
  GeometryParams p_;
};

double volume_factor(double r);

}  // namespace rnbohm
