#include "dilute/stats.hpp"

#include <algorithm>
#include <cmath>

namespace dilute {

MeanCi mean_ci(std::span<const double> samples, double z) {
  MeanCi r;
  r.n = static_cast<long>(samples.size());
  if (r.n == 0) return r;
  double sum = 0.0;
  for (double v : samples) sum += v;
  r.mean = sum / static_cast<double>(r.n);
  if (r.n > 1) {
    double ss = 0.0;
    for (double v : samples) {
      const double d = v - r.mean;
      ss += d * d;
    }
    r.stddev = std::sqrt(ss / static_cast<double>(r.n - 1));
    r.ci_half = z * r.stddev / std::sqrt(static_cast<double>(r.n));
  }
  return r;
}

MeanCi frequency_ci(long hits, long trials, double z) {
  MeanCi r;
  r.n = trials;
  if (trials == 0) return r;
  const double p = static_cast<double>(hits) / static_cast<double>(trials);
  r.mean = p;
  r.stddev = std::sqrt(p * (1.0 - p));
  r.ci_half = z * r.stddev / std::sqrt(static_cast<double>(trials));
  return r;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  LineFit f;
  f.n = static_cast<long>(std::min(x.size(), y.size()));
  if (f.n < 2) return f;
  const double n = static_cast<double>(f.n);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (long i = 0; i < f.n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double vxx = sxx - sx * sx / n;
  const double vxy = sxy - sx * sy / n;
  const double vyy = syy - sy * sy / n;
  if (vxx <= 0.0) return f;
  f.slope = vxy / vxx;
  f.intercept = (sy - f.slope * sx) / n;
  f.r2 = vyy > 0.0 ? (vxy * vxy) / (vxx * vyy) : 1.0;
  if (f.n > 2) {
    const double ss_res = std::max(0.0, vyy - f.slope * vxy);
    f.slope_stderr = std::sqrt(ss_res / (n - 2.0) / vxx);
  }
  return f;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t m = a.size(), n = b.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < m && j < n) {
    const double v = std::min(a[i], b[j]);
    while (i < m && a[i] <= v) ++i;
    while (j < n && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / m - static_cast<double>(j) / n));
  }
  return d;
}

bool ks_reject_1pct(std::vector<double> a, std::vector<double> b) {
  const double m = static_cast<double>(a.size());
  const double n = static_cast<double>(b.size());
  const double d = ks_statistic(std::move(a), std::move(b));
  const double crit = 1.628 * std::sqrt((m + n) / (m * n));
  return d > crit;
}

double log_binomial_coeff(long n, long k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double binomial_cdf(long n, long k, double p) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  double sum = 0.0;
  for (long i = 0; i <= k; ++i) {
    const double lp = log_binomial_coeff(n, i) + i * std::log(p) + (n - i) * std::log1p(-p);
    sum += std::exp(lp);
  }
  return std::min(1.0, sum);
}

}  // namespace dilute
