#ifndef POLAR_STATS_HPP
#define POLAR_STATS_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace polar {

// Order-statistic quantile with linear interpolation between adjacent order
// statistics (the h = (n-1)p + 1 convention).
double empirical_quantile(std::vector<double> samples, double p);

// Sup-distance between the empirical CDF of `samples` and 1 - e^{-t}.
// Samples must be positive; normalization is the caller's business.
double ks_exp1_statistic(std::vector<double> samples);

// Asymptotic 5% critical value of the one-sample KS statistic.
inline double ks_critical_5pct(std::size_t n) { return 1.36 / std::sqrt(static_cast<double>(n)); }

// Upper regularized incomplete gamma Q(s, x); used for chi-square tails.
double gamma_q(double s, double x);

// Chi-square upper tail P(X2 > x) with k degrees of freedom.
double chi_square_tail(double x, int dof);

// Two-sample chi-square homogeneity test over categorical counts. Categories
// with small combined expectation are pooled. Returns the p-value.
double chi_square_two_sample_pvalue(const std::vector<std::uint64_t>& counts_a,
                                    const std::vector<std::uint64_t>& counts_b);

struct WilsonInterval {
  double estimate;
  double low;
  double high;
};

// Wilson score interval for a binomial proportion at z = 1.96.
WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials);

struct SampleSummary {
  std::uint64_t n = 0;
  double mean = 0.0;
  double variance = 0.0;
  std::map<double, double> quantiles;
  double ks_exp1 = 0.0;  // of samples normalized by their mean
  std::uint64_t censored = 0;
};

SampleSummary summarize(const std::vector<double>& samples, std::uint64_t censored);

}  // namespace polar

#endif  // POLAR_STATS_HPP
