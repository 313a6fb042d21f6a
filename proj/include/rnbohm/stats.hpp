#pragma once

#include <span>
#include <vector>

namespace rnbohm {

double normal_cdf(double z);

// Two-sided p-value of a standard normal statistic.
double normal_two_sided_p(double z);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

// Pearson goodness of fit of observed counts against expected probabilities.
// Bins with expected count below min_expected are pooled into one.
ChiSquareResult chi_square_gof(std::span<const double> counts, std::span<const double> probs,
                               double min_expected = 5.0);

// Survival function of the Kolmogorov distribution, P(K > x).
double kolmogorov_sf(double x);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample test against a continuous CDF.
template <typename Cdf>
KsResult ks_one_sample(std::vector<double> xs, Cdf cdf);

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// z-score of an observed count against a Bernoulli(p) law over n trials.
double binomial_z(double successes, double n, double p);

// Signed normal quantile equivalent of the exact two-sided binomial p-value;
// stays meaningful when n p is small.
double binomial_equivalent_z(double successes, double n, double p);

// z-score for the difference of two Poisson counts with equal exposure.
double poisson_difference_z(double a, double b);

double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace rnbohm

#include "rnbohm/stats_impl.hpp"
