#include "polar/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace polar {

double empirical_quantile(std::vector<double> samples, double p) {
  if (samples.empty()) throw std::invalid_argument("empty sample set");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must be in (0,1)");
  std::sort(samples.begin(), samples.end());
  const double h = (static_cast<double>(samples.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  const double frac = h - std::floor(h);
  return samples[lo] + frac * (samples[hi] - samples[lo]);
}

double ks_exp1_statistic(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("empty sample set");
  for (double x : samples)
    if (!(x > 0.0)) throw std::invalid_argument("samples must be positive");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = 1.0 - std::exp(-samples[i]);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
    d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
  }
  return d;
}

namespace {

// Regularized incomplete gamma, series and continued-fraction forms.
double gamma_p_series(double s, double x) {
  double term = 1.0 / s;
  double sum = term;
  for (int k = 1; k < 1000; ++k) {
    term *= x / (s + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

double gamma_q_cf(double s, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int k = 1; k < 1000; ++k) {
    const double an = -k * (k - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

}  // namespace

double gamma_q(double s, double x) {
  if (x < 0.0 || s <= 0.0) throw std::invalid_argument("gamma_q domain error");
  if (x == 0.0) return 1.0;
  if (x < s + 1.0) return 1.0 - gamma_p_series(s, x);
  return gamma_q_cf(s, x);
}

double chi_square_tail(double x, int dof) { return gamma_q(0.5 * dof, 0.5 * x); }

double chi_square_two_sample_pvalue(const std::vector<std::uint64_t>& counts_a,
                                    const std::vector<std::uint64_t>& counts_b) {
  if (counts_a.size() != counts_b.size())
    throw std::invalid_argument("category count mismatch");
  double na = 0.0, nb = 0.0;
  for (std::uint64_t c : counts_a) na += static_cast<double>(c);
  for (std::uint64_t c : counts_b) nb += static_cast<double>(c);
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("empty sample");

  // Pool categories with combined expected count below 5.
  std::vector<std::pair<double, double>> cells;
  double pool_a = 0.0, pool_b = 0.0;
  for (std::size_t i = 0; i < counts_a.size(); ++i) {
    const double a = static_cast<double>(counts_a[i]);
    const double b = static_cast<double>(counts_b[i]);
    if (a + b == 0.0) continue;
    if ((a + b) * std::min(na, nb) / (na + nb) < 5.0) {
      pool_a += a;
      pool_b += b;
    } else {
      cells.emplace_back(a, b);
    }
  }
  if (pool_a + pool_b > 0.0) cells.emplace_back(pool_a, pool_b);
  if (cells.size() < 2) return 1.0;

  double stat = 0.0;
  for (const auto& [a, b] : cells) {
    const double ea = (a + b) * na / (na + nb);
    const double eb = (a + b) * nb / (na + nb);
    stat += (a - ea) * (a - ea) / ea + (b - eb) * (b - eb) / eb;
  }
  return chi_square_tail(stat, static_cast<int>(cells.size()) - 1);
}

WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials) {
  if (trials == 0) throw std::invalid_argument("no trials");
  const double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  // Degenerate counts pin the matching endpoint exactly.
  const double low = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double high = successes == trials ? 1.0 : std::min(1.0, center + half);
  return {p, low, high};
}

SampleSummary summarize(const std::vector<double>& samples, std::uint64_t censored) {
  SampleSummary s;
  s.censored = censored;
  s.n = samples.size();
  if (samples.empty()) return s;
  double sum = 0.0;
  for (double x : samples) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  double ss = 0.0;
  for (double x : samples) ss += (x - s.mean) * (x - s.mean);
  s.variance = s.n > 1 ? ss / static_cast<double>(s.n - 1) : 0.0;
  for (double p : {0.05, 0.25, 0.5, 0.75, 1.0 - std::exp(-1.0), 0.95})
    s.quantiles[p] = empirical_quantile(samples, p);
  if (s.mean > 0.0) {
    std::vector<double> normalized;
    normalized.reserve(samples.size());
    for (double x : samples) normalized.push_back(x / s.mean);
    s.ks_exp1 = ks_exp1_statistic(normalized);
  }
  return s;
}

}  // namespace polar
