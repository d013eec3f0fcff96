#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dilute/inertia.hpp"
#include "dilute/lattice.hpp"
#include "dilute/spectra.hpp"
#include "dilute/stats.hpp"

namespace dilute {

// Compactly supported single-site bump with the two-sided box certificate
// u_- 1_{|x| <= tau_-} <= u <= u_+ 1_{|x| <= tau_+}, 0 < tau_- < tau_+,
// 0 < u_- < u_+.
class SingleSitePotential {
 public:
  // flat top u_+ on [0, tau_-], linear ramp to 0 at tau_+
  static SingleSitePotential flat_top(double u_plus = 1.0, double tau_minus = 0.35,
                                      double tau_plus = 0.5);
  // tabulated radial profile (linear interpolation); bounds are certified on
  // the table at construction
  static SingleSitePotential tabulated(std::vector<double> radii, std::vector<double> values,
                                       double u_minus, double u_plus, double tau_minus,
                                       double tau_plus);

  double operator()(double r) const;  // radial evaluation, r >= 0
  double u_minus() const { return u_minus_; }
  double u_plus() const { return u_plus_; }
  double tau_minus() const { return tau_minus_; }
  double tau_plus() const { return tau_plus_; }

 private:
  std::vector<double> radii_, values_;
  double u_minus_ = 0.5, u_plus_ = 1.0, tau_minus_ = 0.35, tau_plus_ = 0.5;
};

// Axis-aligned box in R^d given by half-lengths; volume prod(2 len_i).
struct BoxR {
  std::array<double, 2> half_length{1.0, 1.0};
  int dimension = 1;
  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dimension; ++i) v *= 2.0 * half_length[i];
    return v;
  }
};

struct PointCloud {
  std::vector<std::array<double, 2>> points;
  double intensity = 0.0;
  std::uint64_t seed = 0;
};

// count ~ Poisson(intensity * |box|), locations uniform; deterministic per seed.
PointCloud sample_poisson_cloud(double intensity, const BoxR& box, std::uint64_t seed);

// Independent 1/2-thinning into two clouds (both Poisson with half the
// intensity, independent of each other).
std::pair<PointCloud, PointCloud> thin_cloud(const PointCloud& cloud, std::uint64_t seed);

enum class ContinuumDisorder { bernoulli_lattice, poisson };

struct ContinuumModel {
  int dimension = 1;
  ContinuumDisorder disorder = ContinuumDisorder::poisson;
  double varrho = 0.1;              // Bernoulli probability or Poisson intensity
  SingleSitePotential site = SingleSitePotential::flat_top();
  double mesh = 0.1;                // grid spacing
  BoxR box;
  int period_q = 3;                 // odd integer > 1
  std::function<double(std::array<double, 2>)> periodic_background;  // optional V_per

  void validate() const;
};

// A realization of the random potential: either Bernoulli weights on the
// integer lattice points inside the box, or a Poisson cloud.
struct ContinuumRealization {
  std::vector<std::array<double, 2>> centers;
  std::vector<double> weights;  // 1 for Poisson points
};

ContinuumRealization sample_continuum_realization(const ContinuumModel& model, std::uint64_t seed);

// (2d+1)-point finite-difference Dirichlet Laplacian scaled by mesh^{-2} plus
// the diagonal sample of V_per + sum w_j u(x - x_j). With bloch_theta set, the
// Laplacian wraps around with the phase twist e^{i theta . span} instead of
// Dirichlet walls.
FiniteOperator assemble_continuum(const ContinuumModel& model, const ContinuumRealization& real,
                                  std::optional<std::array<double, 2>> bloch_theta = std::nullopt,
                                  const Capacity& cap = {});

IdsCurve continuum_ids(const ContinuumModel& model, std::vector<double> energies, long replicas,
                       std::uint64_t seed, int threads = 0);

// N(varrho^alpha) over a varrho grid; box lengths scale like varrho^{-alpha/2}
// so the lowest free mode sits below the probe energy.
TailFit continuum_lifschitz_scan(const ContinuumModel& base, const std::vector<double>& varrho_grid,
                                 double alpha, long replicas, std::uint64_t seed, int threads = 0);

}  // namespace dilute
