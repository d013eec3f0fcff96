#include "dilute/scales.hpp"

#include <cmath>
#include <sstream>

#include "dilute/parallel.hpp"
#include "dilute/stats.hpp"

namespace dilute {

long odd_ceil(double x) {
  if (x < 1.0) throw ValidationError("odd ceiling is defined for x >= 1");
  const double snapped = std::abs(x - std::round(x)) <= 1e-9 * std::max(1.0, std::abs(x))
                             ? std::round(x)
                             : x;
  long k = static_cast<long>(std::ceil(snapped - 1e-12));
  if (k < 1) k = 1;
  if (k % 2 == 0) ++k;
  return k;
}

namespace {

void finish_plan(ScalePlan& p) {
  const long A = p.factor_A, B = p.factor_B, C = p.factor_C;
  p.L = (A * B - 1) / 2;
  p.K = (C - 1) / 2;
  p.L_prime = (A - 1) / 2;
  p.K_prime = (B * C - 1) / 2;
  p.N = (A * B * C - 1) / 2;
  p.block_cells = 1;
  for (int i = 0; i < p.dimension; ++i) p.block_cells *= A;
  p.separation_ok = p.K < p.K_prime && p.L_prime < p.L;
  p.degenerate = A <= 3 && B <= 3 && C <= 3;
  if (!p.separation_ok) p.warnings.push_back("scale separation failed: need K < K' and L' < L");
  if (p.degenerate) p.warnings.push_back("scales collapsed: every odd factor is at its minimum");
}

}  // namespace

ScalePlan build_scale_plan(double rho, double alpha, double alpha_prime, double gamma,
                           int dimension) {
  if (rho <= 0.0 || rho >= 1.0) throw ValidationError("scale plan needs rho in (0,1)");
  if (dimension < 1) throw ValidationError("dimension must be positive");
  if (!(alpha > alpha_prime)) throw ValidationError("exponent ordering violated: need alpha > alpha'");
  if (alpha_prime < 2.0) throw ValidationError("exponent ordering violated: need alpha' >= 2");
  if (gamma <= 0.0) throw ValidationError("gamma must be positive");

  ScalePlan p;
  p.rho = rho;
  p.alpha = alpha;
  p.alpha_prime = alpha_prime;
  p.gamma = gamma;
  p.dimension = dimension;
  p.epsilon = (alpha_prime - 2.0) / 8.0;

  const double xa = std::pow(rho, (alpha_prime - alpha) / 2.0);
  const double xb = std::pow(rho, -alpha_prime / 4.0);
  const double xc = std::pow(rho, -gamma);
  p.factor_A = odd_ceil(xa);
  p.factor_B = odd_ceil(xb);
  p.factor_C = odd_ceil(xc);

  std::ostringstream d;
  d << "A = [rho^((a'-a)/2)]_o = [" << xa << "]_o = " << p.factor_A;
  p.derivation.push_back(d.str());
  d.str("");
  d << "B = [rho^(-a'/4)]_o = [" << xb << "]_o = " << p.factor_B;
  p.derivation.push_back(d.str());
  d.str("");
  d << "C = [rho^(-gamma)]_o = [" << xc << "]_o = " << p.factor_C;
  p.derivation.push_back(d.str());

  p.decay_range_ok = alpha > alpha_prime * (dimension + 1.0) / dimension;
  p.threshold_ok = dimension * (alpha - alpha_prime) / 2.0 > 1.0;
  if (!p.decay_range_ok)
    p.warnings.push_back("alpha <= alpha'(d+1)/d: outside the proposition range (contrast run)");
  if (!p.threshold_ok)
    p.warnings.push_back("d(alpha-alpha')/2 <= 1: block count grows too slowly for decay");
  if (p.epsilon <= 0.0)
    p.warnings.push_back("alpha' = 2 gives epsilon = 0: no separation between the two thresholds");

  finish_plan(p);
  return p;
}

ScalePlan scale_plan_from_factors(long A, long B, long C, int dimension) {
  if (A < 1 || B < 1 || C < 1 || A % 2 == 0 || B % 2 == 0 || C % 2 == 0)
    throw ValidationError("factors must be positive odd integers");
  ScalePlan p;
  p.dimension = dimension;
  p.factor_A = A;
  p.factor_B = B;
  p.factor_C = C;
  finish_plan(p);
  return p;
}

Eigen::VectorXcd coarse_grain(const Eigen::VectorXcd& a, const ScalePlan& plan) {
  const long side = plan.side_N();
  const long block = plan.side_L_prime();
  const long blocks = plan.side_K_prime();
  const int d = plan.dimension;
  long n = 1;
  for (int i = 0; i < d; ++i) n *= side;
  if (a.size() != n) throw ValidationError("vector length must be (2N+1)^d");

  // mixed-radix decode of a cell rank into block index and within-block index
  Eigen::VectorXcd out(n);
  std::vector<long> strides(d);
  {
    long s = 1;
    for (int i = d - 1; i >= 0; --i) {
      strides[i] = s;
      s *= side;
    }
  }
  long block_total = 1;
  for (int i = 0; i < d; ++i) block_total *= blocks;
  const long cells_per_block = n / block_total;

  for (long bi = 0; bi < block_total; ++bi) {
    // block multi-index
    std::vector<long> bidx(d);
    long t = bi;
    for (int i = d - 1; i >= 0; --i) {
      bidx[i] = t % blocks;
      t /= blocks;
    }
    Complex mean(0.0, 0.0);
    for (long w = 0; w < cells_per_block; ++w) {
      long ww = w;
      long rank = 0;
      for (int i = d - 1; i >= 0; --i) {
        const long wi = ww % block;
        ww /= block;
        rank += (bidx[i] * block + wi) * strides[i];
      }
      mean += a(rank);
    }
    mean /= static_cast<double>(cells_per_block);
    for (long w = 0; w < cells_per_block; ++w) {
      long ww = w;
      long rank = 0;
      for (int i = d - 1; i >= 0; --i) {
        const long wi = ww % block;
        ww /= block;
        rank += (bidx[i] * block + wi) * strides[i];
      }
      out(rank) = mean;
    }
  }

  const double na = a.norm();
  const double no = out.norm();
  if (na > 0.0 && no > 0.0) out *= na / no;
  return out;
}

EventProbability mean_event_probability(const DisorderSpec& spec, long R, double threshold,
                                        EventSign sign, long samples, std::uint64_t seed,
                                        int threads) {
  if (R < 0 || samples < 1) throw ValidationError("need R >= 0 and at least one sample");
  std::vector<char> fired(samples, 0);
  parallel_for_index(samples, threads, [&](long i) {
    RngStream rng(mix_seed(seed, i));
    double sum = 0.0;
    for (long u = 0; u < R; ++u) sum += spec.draw(rng);
    const double mean = R > 0 ? sum / static_cast<double>(R) : 0.0;
    fired[i] = sign == EventSign::plus ? (mean <= threshold) : (mean >= threshold);
  });
  EventProbability out;
  out.trials = samples;
  for (char f : fired) out.hits += f;
  if (out.hits == 0) {
    out.upper_bound_only = true;
    out.estimate = rule_of_three(samples);
  } else {
    const MeanCi ci = frequency_ci(out.hits, out.trials);
    out.estimate = ci.mean;
    out.ci_half = ci.ci_half;
  }
  return out;
}

EventProbability block_mean_event_probability(const DisorderSpec& spec, const ScalePlan& plan,
                                              EventSign sign, double C, long samples,
                                              std::uint64_t seed, int threads) {
  if (C <= 0.0) throw ValidationError("event constant must be positive");
  const double rho = spec.rho();
  const double threshold = sign == EventSign::plus ? C * std::pow(rho, 1.0 + plan.epsilon)
                                                   : C * std::pow(rho, 1.0 - plan.epsilon);
  return mean_event_probability(spec, plan.block_cells, threshold, sign, samples, seed, threads);
}

ChernoffBound chernoff_bound(const DisorderSpec& spec, long R, double threshold, TailSide side) {
  ChernoffBound out;
  if (R == 0) {
    out.vacuous = true;
    return out;  // bound 1
  }
  const double rho_mean = spec.mean();
  const double wplus = spec.omega_plus();
  const bool feasible = side == TailSide::lower ? threshold < rho_mean : threshold > rho_mean;
  if (!feasible || threshold < 0.0 || (side == TailSide::upper && threshold > wplus)) {
    out.vacuous = true;
    return out;
  }

  const bool exact_mgf = spec.law() == DisorderSpec::Law::bernoulli;
  // log E[e^{+-t omega}], exact for Bernoulli, quadratic-remainder bound
  // otherwise (valid while t omega_+ < 1 for the upper side)
  auto log_mgf = [&](double t, bool positive_sign) -> double {
    if (exact_mgf) {
      const double rho = spec.rho();
      return std::log1p(rho * (std::exp(positive_sign ? t : -t) - 1.0));
    }
    if (positive_sign)
      return t * rho_mean + 0.5 * t * t * wplus * rho_mean * std::exp(t * wplus);
    return -t * rho_mean + 0.5 * t * t * wplus * rho_mean;
  };

  const double t_cap = exact_mgf ? 60.0 : 0.999999 / std::max(wplus, 1e-12);
  double best = 1.0, best_t = 0.0;
  for (int i = 1; i <= 400; ++i) {
    const double t = t_cap * std::pow(10.0, -6.0 * (400 - i) / 399.0);
    double log_bound;
    if (side == TailSide::lower)
      log_bound = static_cast<double>(R) * (log_mgf(t, false) + t * threshold);
    else
      log_bound = static_cast<double>(R) * (log_mgf(t, true) - t * threshold);
    const double b = std::exp(std::min(0.0, log_bound));
    if (b < best) {
      best = b;
      best_t = t;
    }
  }
  out.bound = best;
  out.best_t = best_t;
  return out;
}

UnionAccounting union_bound_accounting(const ScalePlan& plan, int minima_count,
                                       double worst_event_bound) {
  UnionAccounting out;
  long blocks = 1;
  for (int i = 0; i < plan.dimension; ++i) blocks *= plan.side_K_prime();
  // ordered pairs J <= J', two signs each, one event family per block
  out.event_count = static_cast<long>(minima_count) * (minima_count + 1) * blocks;
  out.product_bound = static_cast<double>(out.event_count) * worst_event_bound;
  return out;
}

}  // namespace dilute
