#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dilute/disorder.hpp"
#include "dilute/lattice.hpp"
#include "dilute/stats.hpp"

namespace dilute {

// One realization's shifted resolvent (H - E - i eps)^{-1} on a box. Columns
// are solved on demand, cached, and every solve is residual-checked to 1e-10
// relative.
class BoxResolvent {
 public:
  // eps = 0 requires certified_outside_spectrum (the caller guarantees E is
  // off the realization's spectrum); a numerically singular factorization
  // raises SingularityError carrying the nearest eigenvalue gap.
  BoxResolvent(const HoppingKernel& kernel, const Box& box, std::span<const double> potential,
               double energy, double eps, bool certified_outside_spectrum = false,
               const Capacity& cap = {});

  Complex entry(const LatticeVec& m, const LatticeVec& n) const;
  double energy() const { return energy_; }
  double eps() const { return eps_; }
  long size() const { return n_; }

 private:
  const Eigen::VectorXcd& column(long rank) const;

  Box box_;
  long n_ = 0;
  double energy_ = 0.0, eps_ = 0.0;
  Eigen::MatrixXcd shifted_;  // H - z (kept for residual checks)
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
  mutable std::vector<std::optional<Eigen::VectorXcd>> columns_;
};

// s in (0, tau/4) is enforced when the law carries a Holder certificate;
// override_s_range disables the guard.
struct GreenQuery {
  Box box;
  double energy = 0.0;
  double eps = 1e-3;
  double s = 0.2;
  LatticeVec m{0, 0, 0};
  LatticeVec n{0, 0, 0};
  bool override_s_range = false;
};

void validate_fractional_exponent(const GreenQuery& q, const DisorderSpec& spec);

struct FractionalMoment {
  MeanCi moment;          // E |G_mn|^s
  double apriori_ratio;   // moment / rho^{-s}
};

FractionalMoment fractional_moment(const HoppingKernel& kernel, const DisorderSpec& spec,
                                   const GreenQuery& query, long replicas, std::uint64_t seed,
                                   int threads = 0);

struct DecayFit {
  std::vector<double> distances;
  std::vector<MeanCi> moments;   // or |G| itself for the off-spectrum check
  LineFit fit;                   // ln(moment) vs distance
  double rate = 0.0;             // -slope
  double reference_rate = 0.0;   // delta(E)-based comparison value
};

// Exponential decay of |G_{0n}| at an energy below the spectrum bottom
// (eps = 0). `gap` certifies inf spec - E > 0; refuses when gap <= 0. The
// reference rate is sqrt(gap), the off-spectrum decay scale.
DecayFit combes_thomas_check(const HoppingKernel& kernel, const DisorderSpec* spec, const Box& box,
                             double energy, double gap, const std::vector<int>& distances,
                             long replicas, std::uint64_t seed, int threads = 0);

// delta(E) = sqrt(rho^alpha - E) for E in [0, rho^alpha]: the only rate scale
// consistent with the off-spectrum estimate at the tail edge.
double default_decay_rate(double rho, double alpha, double energy);

// Log-linear fit of E|G_{0n}|^s against distance. The reference rate is the
// tail-edge scale sqrt(rho^alpha - E) when E lies in [0, rho^alpha].
DecayFit localization_length_fit(const HoppingKernel& kernel, const DisorderSpec& spec,
                                 double energy, double eps, double s,
                                 const std::vector<int>& distances, long replicas,
                                 std::uint64_t seed, int threads = 0, int box_margin = 20,
                                 double alpha = 4.5);

// E |G_mn|^s as a function of the site pair; either a stub or Monte Carlo
// estimates backed by a simulation box.
using MomentModel = std::function<double(const LatticeVec& m, const LatticeVec& n)>;

// Precomputes E|G_mn|^s for every m in the inner box and every n in the
// simulation box: one factorization per realization, one solve per column.
MomentModel make_mc_moment_model(const HoppingKernel& kernel, const DisorderSpec& spec,
                                 double energy, double eps, double s, int sim_half_side,
                                 int inner_half_side, long replicas, std::uint64_t seed,
                                 int threads = 0);

struct CriterionConstants {
  double D = 1.0;        // prefactor and the 1/D in the outer exponential
  double c = 1.0;        // kernel decay rate used in e^{-c|m-n|}
  int xi_degree = 1;     // Xi(x) = x^degree
  double delta = 0.0;    // decay rate delta(E)
};

struct CriterionResult {
  double value = 0.0;
  bool satisfied = false;  // value < 1
  long terms = 0;
  int shells_used = 0;
};

// D L^{2d} Xi(rho^{-s}) sum_{m in box, n outside} e^{-c|m-n|} E|G_mn|^s
// e^{delta |n| / D}, outer sum truncated when a shell drops below 1e-14 of
// the running total. Throws DivergenceError when c <= delta/D.
CriterionResult fm_criterion_lhs(const MomentModel& moments, int dimension, int L, double rho,
                                 double s, const CriterionConstants& constants);

}  // namespace dilute
