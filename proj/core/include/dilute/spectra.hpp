#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dilute/disorder.hpp"
#include "dilute/inertia.hpp"
#include "dilute/lattice.hpp"
#include "dilute/stats.hpp"

namespace dilute {

struct IdsPoint {
  double energy = 0.0;
  double estimate = 0.0;      // eigenvalue fraction, or the rule-of-three bound
  double ci_half = 0.0;
  bool upper_bound_only = false;  // zero observed counts; estimate is 3/(replicas*|box|)
  long total_count = 0;
};

struct IdsCurve {
  std::vector<IdsPoint> points;  // nondecreasing in energy
  Box box;
  long replicas = 0;
  std::uint64_t seed = 0;
  std::string law_name;
};

// Finite-volume estimate of the integrated density of states: average over
// replicas of (#eigenvalues <= E) / |box|, with a normal CI across replicas.
IdsCurve estimate_ids(const HoppingKernel& kernel, const DisorderSpec& spec, const Box& box,
                      std::vector<double> energies, long replicas, std::uint64_t seed,
                      int threads = 0, const CountOptions& opts = {});

// Free limit in d=1 for the nearest-neighbor kernel: (1/pi) arccos(1 - E/2).
double free_ids_1d(double energy);

struct TailPoint {
  double rho = 0.0;
  double energy = 0.0;   // rho^alpha
  int box_side = 0;
  long replicas = 0;
  long total_sites = 0;
  long hits = 0;         // eigenvalues observed at or below the energy
  double estimate = 0.0;
  double ci_half = 0.0;
  bool upper_bound_only = false;
};

struct TailFit {
  std::vector<TailPoint> points;
  double alpha = 0.0;
  bool alpha_below_threshold = false;  // alpha <= 2(d+1)/d: contrast-run territory
  // regression of ln(-ln N) on ln(1/rho) over positive-count points
  double fitted_exponent = 0.0;
  double r2 = 0.0;
  long regression_points = 0;
  bool decay_superlinear = false;  // slope of -ln N vs ln(1/rho) increases over the grid
};

// Box side for the tail scan: ceil(rho^{-alpha/2}) * 4, rounded odd, so the
// lowest free box mode sits below rho^alpha.
int lifschitz_box_side(double rho, double alpha);

// Estimates N(rho^alpha) for each rho with the law produced by `law_for_rho`.
// Cells with zero observed counts report the rule-of-three upper bound and are
// excluded from the double-log regression. alpha below 2(d+1)/d only warns.
TailFit lifschitz_scan(const HoppingKernel& kernel,
                       const std::function<DisorderSpec(double)>& law_for_rho,
                       const std::vector<double>& rho_grid, double alpha, long replicas,
                       std::uint64_t seed, int threads = 0, int box_side_override = 0);

}  // namespace dilute
