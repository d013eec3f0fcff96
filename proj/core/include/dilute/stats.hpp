#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dilute {

struct MeanCi {
  double mean = 0.0;
  double ci_half = 0.0;  // z * stddev / sqrt(n)
  double stddev = 0.0;
  long n = 0;

  double lower() const { return mean - ci_half; }
  double upper() const { return mean + ci_half; }
  bool overlaps(const MeanCi& other) const {
    return lower() <= other.upper() && other.lower() <= upper();
  }
};

// Normal-approximation confidence interval across samples (default 95%).
MeanCi mean_ci(std::span<const double> samples, double z = 1.96);

// 95% upper confidence bound for a probability after n trials with zero hits.
inline double rule_of_three(long trials) { return trials > 0 ? 3.0 / static_cast<double>(trials) : 1.0; }

// Wilson-free frequency interval: phat +- z*sqrt(phat(1-phat)/n).
MeanCi frequency_ci(long hits, long trials, double z = 1.96);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_stderr = 0.0;
  long n = 0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Two-sample Kolmogorov-Smirnov statistic and a 1% significance decision
// (asymptotic critical value c(0.01) = 1.628).
double ks_statistic(std::vector<double> a, std::vector<double> b);
bool ks_reject_1pct(std::vector<double> a, std::vector<double> b);

// log of C(n,k) via lgamma
double log_binomial_coeff(long n, long k);

// P[Bin(n,p) <= k], exact up to floating-point summation.
double binomial_cdf(long n, long k, double p);

}  // namespace dilute
