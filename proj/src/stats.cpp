#include "rnbohm/stats.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rnbohm {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

ChiSquareResult chi_square_gof(std::span<const double> counts, std::span<const double> probs,
                               double min_expected) {
  if (counts.size() != probs.size()) throw std::invalid_argument("chi_square_gof: size mismatch");
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  const double ptot = std::accumulate(probs.begin(), probs.end(), 0.0);
  ChiSquareResult r;
  if (n <= 0.0 || ptot <= 0.0) return r;
  double pooled_o = 0.0, pooled_e = 0.0;
  int bins = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = n * probs[i] / ptot;
    if (e < min_expected) {
      pooled_o += counts[i];
      pooled_e += e;
      continue;
    }
    r.statistic += (counts[i] - e) * (counts[i] - e) / e;
    ++bins;
  }
  if (pooled_e > 0.0) {
    r.statistic += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
    ++bins;
  } else if (pooled_o > 0.0) {
    // events where the law puts no mass
    r.statistic = INFINITY;
    r.dof = std::max(bins - 1, 1);
    r.p_value = 0.0;
    return r;
  }
  r.dof = bins - 1;
  if (r.dof < 1) return r;
  boost::math::chi_squared dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  KsResult r;
  if (a.empty() || b.empty()) return r;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  r.statistic = d;
  const double ne = std::sqrt(na * nb / (na + nb));
  r.p_value = kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

double binomial_z(double successes, double n, double p) {
  const double var = n * p * (1.0 - p);
  if (var <= 0.0) return successes == n * p ? 0.0 : INFINITY;
  return (successes - n * p) / std::sqrt(var);
}

double binomial_equivalent_z(double successes, double n, double p) {
  if (n <= 0.0) return 0.0;
  if (p <= 0.0) return successes > 0.0 ? INFINITY : 0.0;
  if (p >= 1.0) return successes < n ? -INFINITY : 0.0;
  boost::math::binomial_distribution<double> dist(n, p);
  const double mean = n * p;
  double tail;
  if (successes >= mean)
    tail = successes > 0.0 ? boost::math::cdf(boost::math::complement(dist, successes - 1.0)) : 1.0;
  else
    tail = boost::math::cdf(dist, successes);
  const double pval = std::min(1.0, 2.0 * tail);
  if (pval >= 1.0) return 0.0;
  if (!(pval > 0.0)) return successes >= mean ? INFINITY : -INFINITY;
  const double z = boost::math::quantile(
      boost::math::complement(boost::math::normal_distribution<double>(), 0.5 * pval));
  return successes >= mean ? z : -z;
}

double poisson_difference_z(double a, double b) {
  if (a + b <= 0.0) return 0.0;
  return (a - b) / std::sqrt(a + b);
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace rnbohm
