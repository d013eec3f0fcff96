#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dilute/disorder.hpp"
#include "dilute/floquet.hpp"
#include "dilute/lattice.hpp"

namespace dilute {

// Smallest odd integer >= x (x >= 1). Values within 1e-9 relative of an
// integer are snapped first so that powers like rho^{-gamma} = 10.0000000001
// do not jump a rung.
long odd_ceil(double x);

// The nested odd-factor tuple
//   2L+1  = A B,  2K+1  = C,  2L'+1 = A,  2K'+1 = B C,
// with A = [rho^{(a'-a)/2}]_o, B = [rho^{-a'/4}]_o, C = [rho^{-gamma}]_o, so
// 2N+1 = (2L+1)(2K+1) = (2L'+1)(2K'+1) holds exactly in integer arithmetic.
struct ScalePlan {
  double rho = 0.0, alpha = 0.0, alpha_prime = 0.0, gamma = 0.0;
  int dimension = 1;
  long factor_A = 1, factor_B = 1, factor_C = 1;
  long L = 0, K = 0, L_prime = 0, K_prime = 0, N = 0;  // half-sides
  double epsilon = 0.0;          // (alpha' - 2)/8
  long block_cells = 0;          // R = (2L'+1)^d
  bool separation_ok = true;     // K < K' and L' < L
  bool threshold_ok = true;      // d (alpha - alpha')/2 > 1
  bool decay_range_ok = true; // alpha > alpha'(d+1)/d, the strict admissible range
  bool degenerate = false;       // all factors collapsed to the minimum
  std::vector<std::string> derivation;
  std::vector<std::string> warnings;

  long side_N() const { return 2 * N + 1; }
  long side_L() const { return 2 * L + 1; }
  long side_K() const { return 2 * K + 1; }
  long side_L_prime() const { return 2 * L_prime + 1; }
  long side_K_prime() const { return 2 * K_prime + 1; }
};

// Requires alpha > alpha' and alpha' >= 2 (hard); the full range
// alpha > alpha'(d+1)/d and the separation inequalities are recorded as flags
// so contrast runs stay possible.
ScalePlan build_scale_plan(double rho, double alpha, double alpha_prime, double gamma,
                           int dimension);

// Direct construction from the three odd factors (testing and the block-mean
// tooling); validates oddness and fills the same derived fields.
ScalePlan scale_plan_from_factors(long A, long B, long C, int dimension);

// Block-average a over the cubes of side 2L'+1 tiling Z^d_{2N+1}, then
// rescale so the norm is preserved exactly. Cube-constant vectors are fixed
// points. For vectors with discrete Fourier support in C_{0,K} the error is
// O(K/K').
Eigen::VectorXcd coarse_grain(const Eigen::VectorXcd& a, const ScalePlan& plan);

enum class EventSign { plus, minus };

// Monte Carlo frequency of {mean of R i.i.d. draws <= threshold} (plus) or
// {mean >= threshold} (minus).
EventProbability mean_event_probability(const DisorderSpec& spec, long R, double threshold,
                                        EventSign sign, long samples, std::uint64_t seed,
                                        int threads = 0);

// The block-mean event of a scale plan:
//   +: mean over R = (2L'+1)^d draws <= C rho^{1+eps},  -: mean >= C rho^{1-eps}.
EventProbability block_mean_event_probability(const DisorderSpec& spec, const ScalePlan& plan,
                                              EventSign sign, double C, long samples,
                                              std::uint64_t seed, int threads = 0);

enum class TailSide { lower, upper };

struct ChernoffBound {
  double bound = 1.0;
  bool vacuous = false;   // infeasible threshold; returns 1
  double best_t = 0.0;
};

// inf over a t-grid of the exponential-moment bound on
// P[mean of R draws <= threshold] (lower) or >= threshold (upper).
// Bernoulli uses the exact moment generating function; other bounded laws use
// the guaranteed quadratic-remainder bound, valid for t omega_+ < 1.
ChernoffBound chernoff_bound(const DisorderSpec& spec, long R, double threshold, TailSide side);

struct UnionAccounting {
  long event_count = 0;     // block-mean events: signs x pairs x blocks
  double product_bound = 0.0;  // event_count * worst single-event bound
};

UnionAccounting union_bound_accounting(const ScalePlan& plan, int minima_count,
                                       double worst_event_bound);

}  // namespace dilute
