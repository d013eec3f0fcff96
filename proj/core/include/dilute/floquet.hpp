#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dilute/disorder.hpp"
#include "dilute/lattice.hpp"
#include "dilute/stats.hpp"

namespace dilute {

// One quasi-momentum fiber of the (2N+1)-periodized operator.
//
// momentum basis: diagonal kinetic part h(theta + 2 pi k/(2N+1)) plus the
//   dense potential block W_{kk'} = (2N+1)^{-d} sum_l omega_l
//   e^{-2 pi i (k-k') . l/(2N+1)}.
// position basis: diagonal potential (omega_l) plus the (2N+1)-periodized,
//   theta-twisted kernel. The two assemblies are unitarily equivalent.
struct FloquetFiber {
  int N = 0;
  int dimension = 1;
  std::vector<double> theta;           // in [-pi/(2N+1), pi/(2N+1)]^d
  FiniteOperator::Basis basis = FiniteOperator::Basis::momentum;
  Eigen::MatrixXcd matrix;             // Hermitian, size (2N+1)^d
  std::vector<double> cell_potential;  // lexicographic over Z^d_{2N+1}
};

FloquetFiber assemble_floquet(const HoppingKernel& kernel, std::span<const double> cell_potential,
                              std::span<const double> theta, int N,
                              FiniteOperator::Basis basis = FiniteOperator::Basis::momentum,
                              const Capacity& cap = {});

Eigen::VectorXd fiber_eigenvalues(const FloquetFiber& fiber);

// Midpoint product grid on [-pi/(2N+1), pi/(2N+1)]^d.
std::vector<std::vector<double>> theta_midpoint_grid(int N, int dimension, int resolution);

struct PeriodicIds {
  std::vector<double> energies;
  std::vector<double> estimates;  // expectation over replicas of N^N_omega(E)
  std::vector<double> ci_half;
  int N = 0;
  int theta_resolution = 0;
  long replicas = 0;
  std::uint64_t seed = 0;
};

// Quasi-momentum quadrature of the fiber counting function, normalized so the
// full count gives 1, then averaged over disorder replicas.
PeriodicIds periodic_ids(const HoppingKernel& kernel, const DisorderSpec& spec, int N,
                         int theta_resolution, std::vector<double> energies, long replicas,
                         std::uint64_t seed, int threads = 0);

struct EventProbability {
  double estimate = 0.0;
  double ci_half = 0.0;
  bool upper_bound_only = false;  // zero hits: rule-of-three bound
  long hits = 0;
  long trials = 0;
};

// Probability that some fiber over the theta grid has an eigenvalue in [0, E].
EventProbability prob_omega_event(const HoppingKernel& kernel, const DisorderSpec& spec, double E,
                                  int N, int theta_resolution, long replicas, std::uint64_t seed,
                                  int threads = 0);

}  // namespace dilute
