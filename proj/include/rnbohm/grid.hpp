#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "rnbohm/geometry.hpp"

namespace rnbohm {

struct GridSpec {
  int K = 16;            // radial nodes r_0 = 0, ..., r_{K-1}; r_K = R_max is a wall
  double R_max = 8.0;
  int n_theta = 2;       // Gauss-Legendre nodes in cos(theta)
  int n_phi = 4;         // uniform nodes in phi

  void validate() const;
};

// Tensor grid on [0, R_max] x S^2. One-particle sites are numbered
// s = i * n_angular + a with angular node a = j * n_phi + k.
class SpatialGrid {
 public:
  SpatialGrid(const GridSpec& spec, const Geometry& geo);

  const GridSpec& spec() const { return spec_; }
  int K() const { return spec_.K; }
  double dr() const { return dr_; }
  double r(int i) const { return i * dr_; }
  bool is_boundary(int i) const { return i == 0; }

  std::size_t n_angular() const { return omega_.size(); }
  std::size_t n_sites() const { return static_cast<std::size_t>(spec_.K) * n_angular(); }
  std::size_t n_interior_sites() const { return n_sites() - n_angular(); }

  int n_theta() const { return spec_.n_theta; }
  int n_phi() const { return spec_.n_phi; }
  double theta(int j) const { return theta_[j]; }
  double phi(int k) const { return phi_[k]; }
  double omega(std::size_t a) const { return omega_[a]; }
  double node_theta(std::size_t a) const { return theta_[a / spec_.n_phi]; }
  double node_phi(std::size_t a) const { return phi_[a % spec_.n_phi]; }
  std::vector<double> node_phis() const;

  int radial_index(std::size_t s) const { return static_cast<int>(s / n_angular()); }
  std::size_t angular_index(std::size_t s) const { return s % n_angular(); }
  std::size_t site(int i, std::size_t a) const { return i * n_angular() + a; }

  // Radial cell weight: integral of 1/lambda over the node's cell.
  double w_rad(int i) const { return w_rad_[i]; }
  // Unweighted cell length (Delta r / 2 at r = 0, Delta r elsewhere).
  double h_rad(int i) const { return i == 0 ? 0.5 * dr_ : dr_; }
  // One-particle weight w_rad * Omega.
  double wt(std::size_t s) const { return w_rad_[radial_index(s)] * omega_[angular_index(s)]; }

  // Cells: radial cell i covers [r_i - dr/2, r_i + dr/2] clipped to [0, R_max - dr/2];
  // angular cell a is bounded by cumulative Gauss weights in cos(theta) and by
  // [2 pi k / n_phi, 2 pi (k+1) / n_phi) in phi.
  int radial_cell(double r) const;
  std::size_t angular_cell(double theta, double phi) const;
  double cell_r_lo(int i) const;
  double cell_r_hi(int i) const;
  double cell_cos_lo(int j) const { return cos_edges_[j]; }
  double cell_cos_hi(int j) const { return cos_edges_[j + 1]; }

  // Derivative matrices on the theta nodes (central inside, one-sided at the
  // ends) and on the periodic phi nodes.
  const Eigen::MatrixXd& d_theta() const { return d_theta_; }
  const Eigen::MatrixXd& d_phi() const { return d_phi_; }

 private:
  GridSpec spec_;
  double dr_;
  std::vector<double> theta_, phi_, omega_, w_rad_, cos_edges_;
  Eigen::MatrixXd d_theta_, d_phi_;
};

// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

double wrap_phi(double phi);

}  // namespace rnbohm
