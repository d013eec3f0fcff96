// Acceptance suite: one check per shipped guarantee, one PASS/FAIL line each.
// Run directly or through ctest; the process exit code is the number of
// failed checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dilute/continuum.hpp"
#include "dilute/experiment.hpp"
#include "dilute/floquet.hpp"
#include "dilute/green.hpp"
#include "dilute/scales.hpp"
#include "dilute/spectra.hpp"
#include "oracles.hpp"

using namespace dilute;

namespace {

struct Outcome {
  bool pass = true;
  std::string details;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!details.empty()) details += "; ";
      details += what;
    }
  }
  void note(const std::string& text) {
    if (!details.empty()) details += "; ";
    details += text;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

Box line_box(int half_side) {
  Box b;
  b.dimension = 1;
  b.half_side = half_side;
  return b;
}

// 1. eigenvalue oracle and the dual counting paths
Outcome check_eigenvalue_oracles() {
  Outcome out;
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const Eigen::VectorXd evs = assemble_dirichlet(k, line_box(100)).eigenvalues();  // 201... n=200 below
  // n = 200 sites: half-side has no odd representation, assemble via 199+1?
  // Use the formula-sized box directly: 2L+1 = 201 covers the n = 200 case by
  // checking both 199 and 201; the formula holds for every n.
  for (int n : {199, 201}) {
    const Eigen::VectorXd e = assemble_dirichlet(k, line_box((n - 1) / 2)).eigenvalues();
    auto expected = oracles::laplacian_box_eigenvalues(n);
    std::sort(expected.begin(), expected.end());
    double worst = 0.0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(e(i) - expected[i]));
    out.require(worst < 1e-10, "eigenvalue formula deviation " + fmt(worst) + " at n=" +
                                   std::to_string(n));
  }
  (void)evs;

  std::mt19937 gen(2024);
  std::uniform_int_distribution<int> half_dist(10, 249);
  std::uniform_real_distribution<double> e_dist(-0.5, 5.5);
  CountOptions force;
  force.force_banded = true;
  long checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Box box = line_box(half_dist(gen));
    const PotentialSample pot =
        sample_potential(DisorderSpec::uniform_dilute(0.3), box, 9000 + trial);
    const FiniteOperator op = assemble_dirichlet(k, box, pot.values);
    const double E = e_dist(gen);
    const long a = count_below(op, E, force).count;
    const long b = count_below(op, E).count;
    out.require(a == b, "count mismatch at trial " + std::to_string(trial));
    ++checked;
  }
  out.note(std::to_string(checked) + " random (E, matrix) pairs cross-checked");
  return out;
}

// 2. free IDS against the arccos law
Outcome check_free_ids() {
  Outcome out;
  const HoppingKernel k = HoppingKernel::laplacian(1);
  std::vector<double> energies;
  for (int i = 1; i <= 21; ++i) energies.push_back(4.0 * i / 22.0);
  const IdsCurve curve =
      estimate_ids(k, DisorderSpec::bernoulli(0.0), line_box(1000), energies, 1, 7, 0);
  double worst = 0.0;
  for (const auto& p : curve.points)
    worst = std::max(worst, std::abs(p.estimate - oracles::free_ids(p.energy)));
  out.require(worst < 2e-3, "free IDS deviation " + fmt(worst));
  out.note("max |estimate - arccos law| = " + fmt(worst) + " over 21 energies, box 2001");
  return out;
}

// 3. fiber bases agree; free fibers are exact
Outcome check_floquet_consistency() {
  Outcome out;
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const int N = 6;
  const int n = 2 * N + 1;
  Box cell;
  cell.dimension = 1;
  cell.half_side = N;
  double worst_pair = 0.0;
  for (std::uint64_t s : {11u, 12u, 13u}) {
    const PotentialSample omega = sample_potential(DisorderSpec::uniform_dilute(0.4), cell, s);
    for (double theta : {0.0, 0.07, -0.19}) {
      const auto span = std::span(&theta, 1);
      const Eigen::VectorXd mom = fiber_eigenvalues(
          assemble_floquet(k, omega.values, span, N, FiniteOperator::Basis::momentum));
      const Eigen::VectorXd pos = fiber_eigenvalues(
          assemble_floquet(k, omega.values, span, N, FiniteOperator::Basis::position));
      for (int i = 0; i < n; ++i) worst_pair = std::max(worst_pair, std::abs(mom(i) - pos(i)));
    }
  }
  out.require(worst_pair < 1e-9, "basis spectra deviate by " + fmt(worst_pair));

  std::vector<double> zeros(n, 0.0);
  const double theta = 0.13;
  const Eigen::VectorXd free_evs =
      fiber_eigenvalues(assemble_floquet(k, zeros, std::span(&theta, 1), N));
  std::vector<double> expected;
  for (int j = -N; j <= N; ++j) expected.push_back(k.symbol(theta + 2 * oracles::kPi * j / n));
  std::sort(expected.begin(), expected.end());
  double worst_free = 0.0;
  for (int i = 0; i < n; ++i) worst_free = std::max(worst_free, std::abs(free_evs(i) - expected[i]));
  out.require(worst_free < 1e-12, "free fiber eigenvalues deviate by " + fmt(worst_free));
  out.note("basis gap " + fmt(worst_pair) + ", free-fiber gap " + fmt(worst_free));
  return out;
}

// 4. periodic-approximation sandwich around the box estimate
Outcome check_sandwich() {
  Outcome out;
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const DisorderSpec spec = DisorderSpec::bernoulli(0.3);
  const double E = 0.5, nu = 0.05;
  const int N = 41;
  const double slack = std::exp(-1.0 / nu);  // the nu^{-1}-exponent error term

  const PeriodicIds lower = periodic_ids(k, spec, N, 3, {E - nu}, 500, 1001, 0);
  const PeriodicIds upper = periodic_ids(k, spec, N, 3, {E + nu}, 500, 1002, 0);
  const IdsCurve mid = estimate_ids(k, spec, line_box(1000), {E}, 300, 1003, 0);

  const double lo = lower.estimates[0] - slack - lower.ci_half[0] - mid.points[0].ci_half;
  const double hi = upper.estimates[0] + slack + upper.ci_half[0] + mid.points[0].ci_half;
  const double est = mid.points[0].estimate;
  out.require(lo <= est && est <= hi,
              "estimate " + fmt(est) + " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
  out.note("E[N^N](E-nu) = " + fmt(lower.estimates[0]) + " <= N(E) = " + fmt(est) +
           " <= E[N^N](E+nu) = " + fmt(upper.estimates[0]));
  return out;
}

// 5. tail scan trend at alpha = 4.5 on the smoothed law
Outcome check_lifschitz_trend() {
  Outcome out;
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const double alpha = 4.5;
  const std::vector<double> rhos = {0.3, 0.25, 0.2, 0.15};
  std::vector<TailPoint> points;
  for (double rho : rhos) {
    const int side = lifschitz_box_side(rho, alpha);
    const long replicas = std::max<long>(1, (2200000 + side - 1) / side);  // >= 2e6 sites
    const TailFit one = lifschitz_scan(
        k, [](double r) { return DisorderSpec::smoothed_bernoulli(r); }, {rho}, alpha, replicas,
        20240815, 0);
    points.push_back(one.points[0]);
  }
  std::string detail;
  for (const auto& p : points) {
    detail += "rho=" + fmt(p.rho) + ": " + std::to_string(p.hits) + " hits in " +
              std::to_string(p.total_sites) + " sites" + (p.upper_bound_only ? " (bound)" : "") +
              "; ";
  }
  detail += "the probed tail sits near exp(-pi rho^(1-alpha/2)), below desk resolution at this "
            "alpha (see README); the observable contrast run lives in the unit suite";
  out.note(detail);

  // the three largest rho need observed counts; the smallest may be a bound
  for (std::size_t i = 0; i + 1 < points.size(); ++i)
    out.require(!points[i].upper_bound_only,
                "rho=" + fmt(points[i].rho) + " has zero observed counts");
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const bool separated =
        points[i].estimate - points[i].ci_half > points[i + 1].estimate + points[i + 1].ci_half;
    out.require(separated, "no CI separation between rho=" + fmt(points[i].rho) + " and rho=" +
                               fmt(points[i + 1].rho));
  }
  std::vector<double> x, y;
  for (const auto& p : points) {
    if (p.estimate > 0.0 && p.estimate < 1.0) {
      x.push_back(std::log(1.0 / p.rho));
      y.push_back(std::log(-std::log(p.estimate)));
    }
  }
  if (x.size() >= 2) {
    const LineFit lf = fit_line(x, y);
    out.require(lf.slope > 0.0, "double-log slope " + fmt(lf.slope) + " not positive");
  } else {
    out.require(false, "fewer than two usable points for the double-log slope");
  }
  return out;
}

// 6. off-spectrum decay rate
Outcome check_offspectrum_rate() {
  Outcome out;
  const HoppingKernel k = HoppingKernel::laplacian(1);
  std::vector<int> distances;
  for (int j = 2; j <= 40; j += 2) distances.push_back(j);
  const DecayFit fit = combes_thomas_check(k, nullptr, line_box(80), -0.5, 0.5, distances, 1, 1);
  const double exact = std::acosh(1.25);
  out.require(std::abs(fit.rate - exact) < 0.1 * exact,
              "rate " + fmt(fit.rate) + " vs exact " + fmt(exact));
  out.note("fitted rate " + fmt(fit.rate) + ", exact acosh(1.25) = " + fmt(exact) +
           ", r2 = " + fmt(fit.fit.r2));
  return out;
}

// 7. fractional moment decay and eps robustness
Outcome check_fractional_moments() {
  Outcome out;
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const DisorderSpec spec = DisorderSpec::uniform_dilute(0.1);
  std::vector<int> distances;
  for (int j = 4; j <= 30; j += 2) distances.push_back(j);
  const std::vector<double> eps_list = {1e-1, 1e-3, 1e-6};
  std::vector<DecayFit> fits;
  for (double eps : eps_list)
    fits.push_back(localization_length_fit(k, spec, 0.0, eps, 0.2, distances, 2000, 606, 0));

  const DecayFit& main_fit = fits[1];  // eps = 1e-3 per the headline check
  out.require(main_fit.fit.r2 >= 0.95, "r2 = " + fmt(main_fit.fit.r2));
  out.require(main_fit.fit.slope < 0.0, "slope " + fmt(main_fit.fit.slope) + " not negative");
  out.note("eps=1e-3: slope " + fmt(main_fit.fit.slope) + ", r2 " + fmt(main_fit.fit.r2));

  // sup-over-eps robustness, the shape the bound itself takes: the sup over
  // the probed shifts must agree with the headline estimate within combined
  // CIs (it is attained on the small-eps plateau), and the moments must
  // stabilize rather than blow up as eps -> 0
  long sup_violations = 0, plateau_violations = 0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    double sup = 0.0, sup_ci = 0.0;
    for (const auto& f : fits) {
      if (f.moments[i].mean > sup) {
        sup = f.moments[i].mean;
        sup_ci = f.moments[i].ci_half;
      }
    }
    const MeanCi& headline = fits[1].moments[i];
    if (std::abs(sup - headline.mean) > sup_ci + headline.ci_half) ++sup_violations;
    const MeanCi& small_a = fits[1].moments[i];  // 1e-3
    const MeanCi& small_b = fits[2].moments[i];  // 1e-6
    if (std::abs(small_a.mean - small_b.mean) > small_a.ci_half + small_b.ci_half)
      ++plateau_violations;
  }
  out.require(sup_violations == 0,
              std::to_string(sup_violations) + " distances: sup over eps departs the estimate");
  out.require(plateau_violations == 0,
              std::to_string(plateau_violations) + " distances: no eps -> 0 stabilization");
  return out;
}

// 8. large-deviation machinery against the exact binomial
Outcome check_large_deviations() {
  Outcome out;
  const DisorderSpec law = DisorderSpec::bernoulli(0.2);
  const long R = 100;
  const double threshold = 0.1;
  const double exact = oracles::binomial_tail_leq(R, 10, 0.2);
  const EventProbability mc =
      mean_event_probability(law, R, threshold, EventSign::plus, 100000, 808, 0);
  const double sigma = std::sqrt(exact * (1.0 - exact) / 100000.0);
  out.require(std::abs(mc.estimate - exact) <= 3.0 * sigma,
              "frequency " + fmt(mc.estimate) + " vs exact " + fmt(exact) + " (3 sigma = " +
                  fmt(3 * sigma) + ")");

  const ChernoffBound bound = chernoff_bound(law, R, threshold, TailSide::lower);
  out.require(bound.bound >= exact, "bound " + fmt(bound.bound) + " below exact " + fmt(exact));
  out.require(bound.bound / exact < 1e3, "bound looser than 1e3 x exact");

  std::vector<double> cs;
  for (long Rs : {100l, 1000l, 10000l}) {
    const ChernoffBound b = chernoff_bound(law, Rs, 0.1, TailSide::lower);
    cs.push_back(-std::log(b.bound) / (static_cast<double>(Rs) * 0.2));
  }
  const double cmin = *std::min_element(cs.begin(), cs.end());
  const double cmax = *std::max_element(cs.begin(), cs.end());
  out.require(cmax / cmin < 1.05, "decay constant drifts: " + fmt(cmin) + " .. " + fmt(cmax));
  out.note("frequency " + fmt(mc.estimate) + ", exact " + fmt(exact) + ", bound " +
           fmt(bound.bound) + ", c = " + fmt(cs[0]));
  return out;
}

// 9. scale-plan arithmetic
Outcome check_scale_plans() {
  Outcome out;
  std::mt19937 gen(909);
  std::uniform_real_distribution<double> rho_dist(0.01, 0.2);
  std::uniform_real_distribution<double> ap_dist(2.05, 3.5);
  std::uniform_real_distribution<double> slack(1.02, 2.2);
  std::uniform_real_distribution<double> gamma_dist(0.4, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + (trial % 2);
    const double rho = rho_dist(gen);
    const double ap = ap_dist(gen);
    const double alpha = ap * (d + 1.0) / d * slack(gen);
    const ScalePlan p = build_scale_plan(rho, alpha, ap, gamma_dist(gen), d);
    out.require(p.side_N() == p.side_L() * p.side_K(), "LK identity failed");
    out.require(p.side_N() == p.side_L_prime() * p.side_K_prime(), "L'K' identity failed");
    if (rho <= 0.2) {
      out.require(p.K < p.K_prime, "K < K' failed at rho " + fmt(rho));
      out.require(p.L_prime < p.L, "L' < L failed at rho " + fmt(rho));
    }
  }
  out.note("20 random valid tuples, d in {1,2}");
  return out;
}

// 10. coarse graining error scaling
Outcome check_coarse_graining() {
  Outcome out;
  const int K = 4;
  std::mt19937 gen(1010);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> constants;
  double worst_norm_gap = 0.0;
  for (long side_kp : {25l, 73l, 217l}) {  // K'/K = 3, 9, 27
    const ScalePlan plan = scale_plan_from_factors(9, side_kp, 1, 1);
    const long n = plan.side_N();
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(n);
    for (int mode = -K; mode <= K; ++mode) {
      const Complex c(u(gen), u(gen));
      for (long x = 0; x < n; ++x)
        a(x) += c * std::exp(Complex(0.0, 2.0 * oracles::kPi * mode * x / n));
    }
    a /= a.norm();
    const Eigen::VectorXcd g = coarse_grain(a, plan);
    worst_norm_gap = std::max(worst_norm_gap, std::abs(g.norm() - 1.0));
    const double ratio = static_cast<double>(K) / ((side_kp - 1) / 2.0);
    constants.push_back((a - g).norm() / ratio);
  }
  const double cmin = *std::min_element(constants.begin(), constants.end());
  const double cmax = *std::max_element(constants.begin(), constants.end());
  out.require(cmax / cmin < 2.0, "fitted constants spread " + fmt(cmax / cmin));
  out.require(worst_norm_gap < 1e-12, "norm preservation off by " + fmt(worst_norm_gap));
  out.note("error constants " + fmt(cmin) + " .. " + fmt(cmax) + " across K'/K in {3,9,27}");
  return out;
}

// 11. continuum: convergence order, Poisson pmf, tail trend
Outcome check_continuum() {
  Outcome out;
  // (a) mesh convergence on the free box
  {
    const double length = 10.0;
    const double exact = oracles::kPi * oracles::kPi / (length * length);
    std::vector<double> lx, ly;
    for (double mesh : {0.1, 0.05, 0.025}) {
      ContinuumModel m;
      m.dimension = 1;
      m.varrho = 0.1;
      m.mesh = mesh;
      m.box.dimension = 1;
      m.box.half_length[0] = length / 2.0;
      ContinuumRealization empty;
      const double e0 = assemble_continuum(m, empty).eigenvalues()(0);
      lx.push_back(std::log(mesh));
      ly.push_back(std::log(std::abs(e0 - exact)));
    }
    const LineFit fit = fit_line(lx, ly);
    out.require(fit.slope >= 1.8, "convergence order " + fmt(fit.slope));
    out.note("mesh order " + fmt(fit.slope));
  }
  // (b) Poisson zero-count pmf at intensity*volume = 2
  {
    BoxR box;
    box.dimension = 1;
    box.half_length[0] = 5.0;
    long empty_clouds = 0;
    const long trials = 10000;
    for (long s = 0; s < trials; ++s)
      if (sample_poisson_cloud(0.2, box, mix_seed(1111, s)).points.empty()) ++empty_clouds;
    const double expected = std::exp(-2.0);
    const double sigma = std::sqrt(expected * (1 - expected) / trials);
    const double freq = static_cast<double>(empty_clouds) / trials;
    out.require(std::abs(freq - expected) <= 3.0 * sigma,
                "P(k=0) = " + fmt(freq) + " vs exp(-2) = " + fmt(expected));
    out.note("P(k=0) = " + fmt(freq));
  }
  // (c) Poisson tail trend at alpha = 3 with per-density replica budgets
  {
    const double alpha = 3.0;
    const std::vector<double> rhos = {0.3, 0.2, 0.1};
    const std::vector<long> replicas = {3000, 6000, 60000};
    std::vector<IdsPoint> points;
    for (std::size_t i = 0; i < rhos.size(); ++i) {
      ContinuumModel m;
      m.dimension = 1;
      m.disorder = ContinuumDisorder::poisson;
      m.varrho = rhos[i];
      m.mesh = 0.1;
      m.box.dimension = 1;
      m.box.half_length[0] = 2.0 * oracles::kPi * std::pow(rhos[i], -alpha / 2.0);
      const IdsCurve c =
          continuum_ids(m, {std::pow(rhos[i], alpha)}, replicas[i], mix_seed(131, i), 0);
      points.push_back(c.points[0]);
    }
    std::string detail = "hits: ";
    for (const auto& p : points) detail += std::to_string(p.total_count) + " ";
    out.note(detail + "(alpha = 3)");
    for (std::size_t i = 0; i < points.size(); ++i)
      out.require(!points[i].upper_bound_only,
                  "zero counts at varrho = " + fmt(rhos[i]));
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
      out.require(points[i].estimate - points[i].ci_half >
                      points[i + 1].estimate + points[i + 1].ci_half,
                  "no CI separation between varrho " + fmt(rhos[i]) + " and " + fmt(rhos[i + 1]));
  }
  return out;
}

// 12. byte-identical reruns across thread budgets on shipped configs
Outcome check_determinism() {
  Outcome out;
  namespace fs = std::filesystem;
  const std::string config_dir = DILUTE_CONFIG_DIR;
  for (const std::string name : {"ids_bernoulli", "ldp_bernoulli"}) {
    ExperimentConfig c = ExperimentConfig::from_file(config_dir + "/" + name + ".json");
    // shrink the workload; the determinism contract is scale-free
    if (c.replicas > 16) c.replicas = 16;
    if (c.samples > 2000) c.samples = 2000;
    c.output_dir = "acceptance_out/det_" + name + "_t1";
    c.threads = 1;
    fs::remove_all(c.output_dir);
    const ExperimentRecord a = run_experiment(c);
    c.output_dir = "acceptance_out/det_" + name + "_t8";
    c.threads = 8;
    fs::remove_all(c.output_dir);
    const ExperimentRecord b = run_experiment(c);
    std::ifstream fa(a.rows_path, std::ios::binary), fb(b.rows_path, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    out.require(sa.str() == sb.str(), name + ": rows differ between thread budgets 1 and 8");
    out.require(!sa.str().empty(), name + ": empty rows file");
  }
  out.note("ids_bernoulli and ldp_bernoulli rerun byte-identically at threads 1 vs 8");
  return out;
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"eigenvalue oracles and dual counting paths", check_eigenvalue_oracles},
      {"free IDS against the arccos law", check_free_ids},
      {"Floquet fiber consistency", check_floquet_consistency},
      {"periodic-approximation sandwich", check_sandwich},
      {"diluted tail trend at alpha = 4.5 (smoothed law)", check_lifschitz_trend},
      {"off-spectrum decay rate", check_offspectrum_rate},
      {"fractional moment decay and eps robustness", check_fractional_moments},
      {"large-deviation bounds vs the exact binomial", check_large_deviations},
      {"scale-plan arithmetic", check_scale_plans},
      {"coarse-graining error scaling", check_coarse_graining},
      {"continuum models", check_continuum},
      {"byte-identical reruns across thread budgets", check_determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = checks[i].second();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.note(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count() /
        1000.0;
    std::printf("[%s] criterion %2zu: %s (%.1fs)%s%s\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                checks[i].first.c_str(), secs, outcome.details.empty() ? "" : " -- ",
                outcome.details.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  std::printf("%d/%zu acceptance checks passed\n", static_cast<int>(checks.size()) - failures,
              checks.size());
  return failures;
}
