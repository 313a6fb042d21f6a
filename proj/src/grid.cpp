#include "rnbohm/grid.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace rnbohm {

void GridSpec::validate() const {
  if (K < 2) throw ConfigError("grid.K must be at least 2");
  if (!(R_max > 0.0)) throw ConfigError("grid.R_max must be positive");
  if (n_theta < 1) throw ConfigError("grid.n_theta must be positive");
  if (n_phi < 1) throw ConfigError("grid.n_phi must be positive");
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x.resize(n);
  w.resize(n);
  for (int k = 0; k < n; ++k) {
    x[k] = es.eigenvalues()(k);
    const double v = es.eigenvectors()(0, k);
    w[k] = 2.0 * v * v;
  }
}

double wrap_phi(double phi) {
  const double two_pi = 2.0 * kPi;
  phi = std::fmod(phi, two_pi);
  if (phi < 0.0) phi += two_pi;
  if (phi >= two_pi) phi = 0.0;
  return phi;
}

SpatialGrid::SpatialGrid(const GridSpec& spec, const Geometry& geo) : spec_(spec) {
  spec_.validate();
  dr_ = spec_.R_max / spec_.K;

  // theta ascending means cos(theta) descending.
  std::vector<double> x, w;
  gauss_legendre(spec_.n_theta, x, w);
  const int nt = spec_.n_theta, np = spec_.n_phi;
  theta_.resize(nt);
  std::vector<double> wt(nt);
  for (int j = 0; j < nt; ++j) {
    theta_[j] = std::acos(x[nt - 1 - j]);
    wt[j] = w[nt - 1 - j];
  }
  cos_edges_.resize(nt + 1);
  cos_edges_[0] = 1.0;
  for (int j = 0; j < nt; ++j) cos_edges_[j + 1] = cos_edges_[j] - wt[j];
  cos_edges_[nt] = -1.0;

  phi_.resize(np);
  for (int k = 0; k < np; ++k) phi_[k] = 2.0 * kPi * (k + 0.5) / np;

  omega_.resize(static_cast<std::size_t>(nt) * np);
  for (int j = 0; j < nt; ++j)
    for (int k = 0; k < np; ++k) omega_[j * np + k] = wt[j] * 2.0 * kPi / np;

  w_rad_.resize(spec_.K);
  for (int i = 0; i < spec_.K; ++i)
    w_rad_[i] = geo.inv_lambda_integral(cell_r_hi(i)) - geo.inv_lambda_integral(cell_r_lo(i));

  d_theta_ = Eigen::MatrixXd::Zero(nt, nt);
  if (nt > 1) {
    d_theta_(0, 0) = -1.0 / (theta_[1] - theta_[0]);
    d_theta_(0, 1) = 1.0 / (theta_[1] - theta_[0]);
    d_theta_(nt - 1, nt - 2) = -1.0 / (theta_[nt - 1] - theta_[nt - 2]);
    d_theta_(nt - 1, nt - 1) = 1.0 / (theta_[nt - 1] - theta_[nt - 2]);
    for (int j = 1; j + 1 < nt; ++j) {
      const double h = theta_[j + 1] - theta_[j - 1];
      d_theta_(j, j + 1) = 1.0 / h;
      d_theta_(j, j - 1) = -1.0 / h;
    }
  }
  d_phi_ = Eigen::MatrixXd::Zero(np, np);
  if (np > 2) {
    const double h = 2.0 * (2.0 * kPi / np);
    for (int k = 0; k < np; ++k) {
      d_phi_(k, (k + 1) % np) += 1.0 / h;
      d_phi_(k, (k + np - 1) % np) -= 1.0 / h;
    }
  }
}

std::vector<double> SpatialGrid::node_phis() const {
  std::vector<double> out(n_angular());
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = node_phi(a);
  return out;
}

double SpatialGrid::cell_r_lo(int i) const { return i == 0 ? 0.0 : (i - 0.5) * dr_; }
double SpatialGrid::cell_r_hi(int i) const { return (i + 0.5) * dr_; }

int SpatialGrid::radial_cell(double r) const {
  const int i = static_cast<int>(std::floor(r / dr_ + 0.5));
  return std::clamp(i, 0, spec_.K - 1);
}

std::size_t SpatialGrid::angular_cell(double theta, double phi) const {
  const double c = std::cos(theta);
  int j = 0;
  while (j + 1 < spec_.n_theta && c < cos_edges_[j + 1]) ++j;
  int k = static_cast<int>(std::floor(wrap_phi(phi) / (2.0 * kPi) * spec_.n_phi));
  k = std::clamp(k, 0, spec_.n_phi - 1);
  return static_cast<std::size_t>(j) * spec_.n_phi + k;
}

}  // namespace rnbohm
