#include "dilute/green.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "dilute/parallel.hpp"

namespace dilute {

BoxResolvent::BoxResolvent(const HoppingKernel& kernel, const Box& box,
                           std::span<const double> potential, double energy, double eps,
                           bool certified_outside_spectrum, const Capacity& cap)
    : box_(box), energy_(energy), eps_(eps) {
  const FiniteOperator op = assemble_dirichlet(kernel, box, potential, cap);
  n_ = op.size();
  if (n_ > cap.max_dense_dim) throw CapacityError("resolvent box exceeds the capacity budget");
  shifted_ = op.to_dense(cap);
  const Complex z(energy, eps);
  for (long i = 0; i < n_; ++i) shifted_(i, i) -= z;
  if (eps == 0.0 && !certified_outside_spectrum)
    throw ValidationError("eps = 0 needs E certified outside the spectrum");
  lu_.compute(shifted_);
  if (eps == 0.0) {
    // singular shift shows up as a wildly amplified solve; detect via the
    // residual of a probe column and report the actual gap
    Eigen::VectorXcd probe = Eigen::VectorXcd::Zero(n_);
    probe(0) = 1.0;
    Eigen::VectorXcd x = lu_.solve(probe);
    const double resid = (shifted_ * x - probe).norm();
    if (!x.allFinite() || resid > 1e-8) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(op.to_dense(cap), Eigen::EigenvaluesOnly);
      double gap = std::numeric_limits<double>::max();
      for (long i = 0; i < n_; ++i) gap = std::min(gap, std::abs(es.eigenvalues()(i) - energy));
      throw SingularityError("shifted system is numerically singular at eps = 0", gap);
    }
  }
  columns_.resize(n_);
}

const Eigen::VectorXcd& BoxResolvent::column(long rank) const {
  auto& slot = columns_[rank];
  if (!slot) {
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n_);
    rhs(rank) = 1.0;
    Eigen::VectorXcd x = lu_.solve(rhs);
    // one step of iterative refinement, then enforce the residual contract
    Eigen::VectorXcd r = rhs - shifted_ * x;
    x += lu_.solve(r);
    r = rhs - shifted_ * x;
    if (r.norm() > 1e-10 * std::max(1.0, x.norm()))
      throw SingularityError("resolvent solve failed the residual bound", 0.0);
    slot = std::move(x);
  }
  return *slot;
}

Complex BoxResolvent::entry(const LatticeVec& m, const LatticeVec& n) const {
  if (!box_.contains(m) || !box_.contains(n))
    throw ValidationError("site pair outside the resolvent box");
  return column(box_.rank_of(m))(box_.rank_of(n));
}

void validate_fractional_exponent(const GreenQuery& q, const DisorderSpec& spec) {
  if (q.s <= 0.0 || q.s >= 1.0) throw ValidationError("fractional exponent must be in (0,1)");
  if (q.override_s_range || !spec.holder) return;
  if (q.s >= spec.holder->tau / 4.0)
    throw ValidationError("fractional exponent must be below tau/4 for this law");
}

FractionalMoment fractional_moment(const HoppingKernel& kernel, const DisorderSpec& spec,
                                   const GreenQuery& query, long replicas, std::uint64_t seed,
                                   int threads) {
  validate_fractional_exponent(query, spec);
  std::vector<double> samples(replicas, 0.0);
  const double bound = query.eps != 0.0 ? 1.0 / std::abs(query.eps)
                                        : std::numeric_limits<double>::max();
  parallel_for_index(replicas, threads, [&](long r) {
    const PotentialSample sample = sample_potential(spec, query.box, mix_seed(seed, r));
    const BoxResolvent G(kernel, query.box, sample.values, query.energy, query.eps,
                         query.eps == 0.0);
    const double g = std::abs(G.entry(query.m, query.n));
    if (query.eps != 0.0 && g > bound * (1.0 + 1e-9))
      throw ValidationError("|G| exceeded the 1/|eps| operator-norm bound");
    samples[r] = std::pow(g, query.s);
  });
  FractionalMoment out;
  out.moment = mean_ci(samples);
  out.apriori_ratio = out.moment.mean / std::pow(spec.rho(), -query.s);
  return out;
}

double default_decay_rate(double rho, double alpha, double energy) {
  const double top = std::pow(rho, alpha);
  if (energy < 0.0 || energy > top)
    throw ValidationError("decay rate defined for energies in [0, rho^alpha]");
  return std::sqrt(top - energy);
}

DecayFit combes_thomas_check(const HoppingKernel& kernel, const DisorderSpec* spec, const Box& box,
                             double energy, double gap, const std::vector<int>& distances,
                             long replicas, std::uint64_t seed, int threads) {
  if (gap <= 0.0) throw ValidationError("off-spectrum check needs a positive certified gap");
  if (energy > -gap + 1e-15)
    throw ValidationError("energy must sit at least `gap` below the spectrum bottom estimate");
  if (distances.size() < 2) throw ValidationError("need at least two distances");

  const long reps = spec ? replicas : 1;
  std::vector<std::vector<double>> logs(distances.size(), std::vector<double>(reps, 0.0));
  parallel_for_index(reps, threads, [&](long r) {
    std::vector<double> pot;
    if (spec) pot = sample_potential(*spec, box, mix_seed(seed, r)).values;
    const BoxResolvent G(kernel, box, pot, energy, 0.0, true);
    LatticeVec origin = box.center;
    for (std::size_t i = 0; i < distances.size(); ++i) {
      LatticeVec n = origin;
      n[0] += distances[i];
      logs[i][r] = std::log(std::abs(G.entry(origin, n)));
    }
  });

  DecayFit out;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    out.distances.push_back(distances[i]);
    out.moments.push_back(mean_ci(logs[i]));
    x.push_back(distances[i]);
    y.push_back(out.moments.back().mean);
  }
  out.fit = fit_line(x, y);
  out.rate = -out.fit.slope;
  out.reference_rate = std::sqrt(gap);
  return out;
}

DecayFit localization_length_fit(const HoppingKernel& kernel, const DisorderSpec& spec,
                                 double energy, double eps, double s,
                                 const std::vector<int>& distances, long replicas,
                                 std::uint64_t seed, int threads, int box_margin, double alpha) {
  if (distances.size() < 4) throw ValidationError("fit needs at least 4 distances");
  if (eps == 0.0 && energy >= 0.0)
    throw ValidationError("eps = 0 needs E below the spectrum bottom of the normalized law");
  GreenQuery q;
  q.s = s;
  q.override_s_range = true;
  validate_fractional_exponent(q, spec);

  int max_dist = 0;
  for (int d : distances) max_dist = std::max(max_dist, std::abs(d));
  Box box;
  box.dimension = kernel.dimension();
  box.half_side = max_dist + box_margin;

  std::vector<std::vector<double>> vals(distances.size(), std::vector<double>(replicas, 0.0));
  parallel_for_index(replicas, threads, [&](long r) {
    const PotentialSample sample = sample_potential(spec, box, mix_seed(seed, r));
    const BoxResolvent G(kernel, box, sample.values, energy, eps, eps == 0.0);
    LatticeVec origin{0, 0, 0};
    for (std::size_t i = 0; i < distances.size(); ++i) {
      LatticeVec n = origin;
      n[0] += distances[i];
      vals[i][r] = std::pow(std::abs(G.entry(origin, n)), s);
    }
  });

  DecayFit out;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const MeanCi ci = mean_ci(vals[i]);
    out.distances.push_back(distances[i]);
    out.moments.push_back(ci);
    if (ci.mean - ci.ci_half <= 0.0) continue;  // only CI-positive moments enter the fit
    x.push_back(std::abs(distances[i]));
    y.push_back(std::log(ci.mean));
  }
  if (x.size() < 4) throw ValidationError("fewer than 4 usable distances after CI filtering");
  out.fit = fit_line(x, y);
  out.rate = -out.fit.slope;
  const double tail_edge = std::pow(spec.rho(), alpha);
  if (energy >= 0.0 && energy <= tail_edge)
    out.reference_rate = std::sqrt(tail_edge - energy);
  return out;
}

MomentModel make_mc_moment_model(const HoppingKernel& kernel, const DisorderSpec& spec,
                                 double energy, double eps, double s, int sim_half_side,
                                 int inner_half_side, long replicas, std::uint64_t seed,
                                 int threads) {
  if (inner_half_side > sim_half_side)
    throw ValidationError("inner box must fit inside the simulation box");
  Box sim;
  sim.dimension = kernel.dimension();
  sim.half_side = sim_half_side;
  Box inner;
  inner.dimension = kernel.dimension();
  inner.half_side = inner_half_side;

  const long n_sim = sim.site_count();
  const long n_inner = inner.site_count();

  // one factorization per realization, one solve per inner column, every
  // outer entry read from the solved column
  std::vector<Eigen::MatrixXd> partial(replicas);
  parallel_for_index(replicas, threads, [&](long r) {
    const PotentialSample sample = sample_potential(spec, sim, mix_seed(seed, r));
    const BoxResolvent G(kernel, sim, sample.values, energy, eps, eps == 0.0);
    Eigen::MatrixXd acc(n_inner, n_sim);
    for (long a = 0; a < n_inner; ++a) {
      const LatticeVec m = inner.site_at(a);
      for (long b = 0; b < n_sim; ++b)
        acc(a, b) = std::pow(std::abs(G.entry(m, sim.site_at(b))), s);
    }
    partial[r] = std::move(acc);
  });

  auto table = std::make_shared<Eigen::MatrixXd>(Eigen::MatrixXd::Zero(n_inner, n_sim));
  for (const auto& p : partial) *table += p;
  *table /= static_cast<double>(replicas);

  auto sim_box = std::make_shared<Box>(sim);
  auto inner_box = std::make_shared<Box>(inner);
  // outside the simulated window the estimate is zero: size the window so the
  // criterion's own shell truncation fires first
  return [table, sim_box, inner_box](const LatticeVec& m, const LatticeVec& n) -> double {
    if (!inner_box->contains(m))
      throw ValidationError("moment model queried off the inner box");
    if (!sim_box->contains(n)) return 0.0;
    return (*table)(inner_box->rank_of(m), sim_box->rank_of(n));
  };
}

CriterionResult fm_criterion_lhs(const MomentModel& moments, int dimension, int L, double rho,
                                 double s, const CriterionConstants& constants) {
  if (constants.D <= 0.0 || constants.c <= 0.0) throw ValidationError("constants must be positive");
  if (constants.c <= constants.delta / constants.D)
    throw DivergenceError("outer sum diverges: c <= delta/D");

  Box box;
  box.dimension = dimension;
  box.half_side = L;
  const long box_sites = box.site_count();

  const double xi = std::pow(std::pow(rho, -s), constants.xi_degree);
  const double prefactor = constants.D * xi * std::pow(static_cast<double>(L), 2.0 * dimension);

  CriterionResult out;
  double sum = 0.0;
  const int max_shells = 4000;
  int zero_shells = 0;
  int shell = L + 1;
  for (; shell <= L + max_shells; ++shell) {
    // sites n with |n|_inf == shell
    double shell_sum = 0.0;
    Box outer;
    outer.dimension = dimension;
    outer.half_side = shell;
    const long outer_sites = outer.site_count();
    for (long ro = 0; ro < outer_sites; ++ro) {
      const LatticeVec n = outer.site_at(ro);
      int linf = 0;
      for (int i = 0; i < dimension; ++i) linf = std::max(linf, std::abs(n[i]));
      if (linf != shell) continue;
      const double n_norm = euclidean_norm(n, dimension);
      for (long rb = 0; rb < box_sites; ++rb) {
        const LatticeVec m = box.site_at(rb);
        LatticeVec diff{0, 0, 0};
        for (int i = 0; i < dimension; ++i) diff[i] = m[i] - n[i];
        const double dist = euclidean_norm(diff, dimension);
        shell_sum += std::exp(-constants.c * dist) * moments(m, n) *
                     std::exp(constants.delta * n_norm / constants.D);
        ++out.terms;
      }
    }
    sum += shell_sum;
    if (sum > 0.0 && shell_sum < 1e-14 * sum) break;
    zero_shells = shell_sum == 0.0 ? zero_shells + 1 : 0;
    if (sum == 0.0 && zero_shells >= 3) break;  // identically-zero moments
  }
  if (shell > L + max_shells)
    throw DivergenceError("outer sum failed to converge within the shell budget");
  out.shells_used = std::min(shell, L + max_shells) - L;
  out.value = prefactor * sum;
  out.satisfied = out.value < 1.0;
  return out;
}

}  // namespace dilute
