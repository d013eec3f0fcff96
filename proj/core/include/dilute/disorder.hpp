#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dilute/lattice.hpp"
#include "dilute/rng.hpp"

namespace dilute {

// Nonnegative, compactly supported, unit-mass smoothing profile on [-1, 1].
class Mollifier {
 public:
  enum class Kind { triangular, smooth_bump };

  // piecewise linear, v(0) = 1, support [-1,1]; the default
  static Mollifier triangular();
  // C^infinity bump exp(-1/(1-x^2)) normalized to unit mass
  static Mollifier smooth_bump();

  Kind kind() const { return kind_; }
  double operator()(double x) const;
  double cdf(double x) const;
  double inverse_cdf(double u) const;  // for sampling
  double max_value() const { return max_value_; }

 private:
  Mollifier() = default;
  Kind kind_ = Kind::triangular;
  double max_value_ = 1.0;
  // tabulated CDF for the smooth bump
  std::vector<double> grid_, cdf_;
};

struct HolderCertificate {
  double tau = 1.0;  // in (0,1]
  double constant = 1.0;
};

// Law of the i.i.d. site variables. Sampling draws from the normalized law:
// the raw law shifted so its essential infimum is 0 (adding a constant to the
// Hamiltonian changes nothing spectrally, and every downstream positivity
// argument needs omega >= 0). For the smoothed Bernoulli mixture the shift is
// rho times the mollifier radius; the raw two-humped density itself is
// available through smoothed_bernoulli_density().
class DisorderSpec {
 public:
  enum class Law { bernoulli, smoothed_bernoulli, uniform_dilute, tabulated };

  static DisorderSpec bernoulli(double rho);
  static DisorderSpec smoothed_bernoulli(double rho, Mollifier v = Mollifier::triangular());
  static DisorderSpec uniform_dilute(double rho);  // uniform on [0, 2 rho]
  // piecewise-constant density on consecutive [breaks[i], breaks[i+1])
  static DisorderSpec tabulated(std::vector<double> breakpoints, std::vector<double> densities);

  Law law() const { return law_; }
  std::string law_name() const;
  double rho() const { return rho_; }
  double omega_plus() const { return omega_plus_; }   // sup of the sampled law
  double mean() const { return mean_; }               // analytic mean of the sampled law
  double variance() const { return variance_; }
  bool atomic() const { return atomic_; }             // has point masses (no density)
  double sampling_shift() const { return shift_; }    // raw -> sampled offset

  // CDF / density of the sampled (normalized) law; density() throws for
  // atomic laws.
  double cdf(double x) const;
  double density(double x) const;

  // draws consume a fixed number of uniforms per site for each law, so equal
  // (seed, box) couples samples across parameter values of the same law
  double draw(RngStream& rng) const;

  std::optional<HolderCertificate> holder;

 private:
  Law law_ = Law::bernoulli;
  double rho_ = 0.0;
  double omega_plus_ = 1.0;
  double mean_ = 0.0;
  double variance_ = 0.0;
  double shift_ = 0.0;
  bool atomic_ = true;
  Mollifier mollifier_ = Mollifier::triangular();
  std::vector<double> breaks_, dens_, cum_;
};

// The two-humped mixture density (1-rho) rho^{-1} v(x/rho) + rho rho^{-1}
// v((x-1)/rho). This is the raw, unshifted law.
double smoothed_bernoulli_density(double rho, const Mollifier& v, double x);

struct PotentialSample {
  Box box;
  std::vector<double> values;  // lexicographic site order
  std::uint64_t seed = 0;
  std::string law_name;

  void write_csv(std::ostream& os) const;  // site coordinates, value
};

// i.i.d. draws per site, deterministic under (seed, lexicographic site order).
PotentialSample sample_potential(const DisorderSpec& spec, const Box& box, std::uint64_t seed);

struct HolderCheck {
  bool applicable = false;       // false for atomic laws
  double constant = 0.0;         // sup over probed intervals of P[a,b] / (|b-a|^tau rho^{-tau})
  double worst_a = 0.0, worst_b = 0.0;
};

// Probes P[omega in [a,b]] <= C |b-a|^tau rho^{-tau} over a grid of intervals
// and reports the empirical sup constant with the maximizing interval.
HolderCheck holder_certificate_check(const DisorderSpec& spec, double tau,
                                     int interval_count = 64, int width_count = 24);

}  // namespace dilute
