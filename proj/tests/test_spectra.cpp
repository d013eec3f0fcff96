#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dilute/spectra.hpp"
#include "oracles.hpp"

using namespace dilute;
using doctest::Approx;

namespace {

Box line_box(int half_side) {
  Box b;
  b.dimension = 1;
  b.half_side = half_side;
  return b;
}

}  // namespace

TEST_CASE("count_below on the free box matches the eigenvalue formula") {
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const FiniteOperator op = assemble_dirichlet(k, line_box(49));  // 99 sites
  SUBCASE("midpoint splits the band evenly on an even count") {
    // 100 sites: eigenvalues 2 - 2cos(k pi/101) <= 2 exactly for k = 1..50
    std::vector<double> diag(100, 2.0), off(99, -1.0);
    CHECK(count_below_tridiagonal(diag, off, 2.0).count == 50);
    // and the formula-derived count on an odd box
    const FiniteOperator op101 = assemble_dirichlet(k, line_box(50));
    const auto evs = oracles::laplacian_box_eigenvalues(101);
    long expected = 0;
    for (double e : evs)
      if (e <= 2.0) ++expected;
    CHECK(count_below(op101, 2.0).count == expected);
  }
  SUBCASE("below the spectrum and above the band") {
    CHECK(count_below(op, -0.1).count == 0);
    CHECK(count_below(op, 4.1).count == 99);
  }
  SUBCASE("banded and dense paths agree across the band") {
    CountOptions banded_opts;
    banded_opts.force_banded = true;
    for (double E : {0.01, 0.5, 1.0, 2.0, 3.3, 3.99}) {
      const long dense = count_below(op, E).count;
      const long banded = count_below(op, E, banded_opts).count;
      CHECK(dense == banded);
    }
  }
}

TEST_CASE("count_below is nondecreasing in E and robust at eigenvalues") {
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const FiniteOperator op = assemble_dirichlet(k, line_box(10));
  long prev = -1;
  for (double E = -0.5; E <= 4.5; E += 0.01) {
    const long c = count_below(op, E).count;
    CHECK(c >= prev);
    prev = c;
  }
  // exactly on an eigenvalue: nudged upward, counts the eigenvalue
  const double ev = 2.0 - 2.0 * std::cos(oracles::kPi * 3 / 22.0);
  const CountResult r = count_below(op, ev);
  CHECK(r.count == 3);
}

TEST_CASE("inertia path agrees with full diagonalization on random operators") {
  std::mt19937 gen(1234);
  std::uniform_int_distribution<int> size_dist(20, 250);
  std::uniform_real_distribution<double> e_dist(-0.5, 5.0);
  const HoppingKernel k = HoppingKernel::laplacian(1);
  CountOptions banded_opts;
  banded_opts.force_banded = true;
  for (int trial = 0; trial < 50; ++trial) {
    const int half = size_dist(gen) / 2;
    const Box box = line_box(half);
    const PotentialSample pot =
        sample_potential(DisorderSpec::uniform_dilute(0.4), box, 1000 + trial);
    const FiniteOperator op = assemble_dirichlet(k, box, pot.values);
    const double E = e_dist(gen);
    CHECK(count_below(op, E, banded_opts).count == count_below(op, E).count);
  }
  // d=2: wider bands, same agreement
  const HoppingKernel k2 = HoppingKernel::laplacian(2);
  std::uniform_real_distribution<double> e2_dist(-0.5, 9.5);
  for (int trial = 0; trial < 10; ++trial) {
    Box box;
    box.dimension = 2;
    box.half_side = 3 + trial % 4;
    const PotentialSample pot =
        sample_potential(DisorderSpec::uniform_dilute(0.4), box, 2000 + trial);
    const FiniteOperator op = assemble_dirichlet(k2, box, pot.values);
    const double E = e2_dist(gen);
    CHECK(count_below(op, E, banded_opts).count == count_below(op, E).count);
  }
}

TEST_CASE("streaming tridiagonal Sturm count equals the dense count") {
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const Box box = line_box(60);
  const PotentialSample pot = sample_potential(DisorderSpec::bernoulli(0.4), box, 5);
  const FiniteOperator op = assemble_dirichlet(k, box, pot.values);
  std::vector<double> diag(box.site_count(), 2.0), off(box.site_count() - 1, -1.0);
  for (long i = 0; i < box.site_count(); ++i) diag[i] += pot.values[i];
  for (double E : {0.02, 0.3, 1.7, 2.9, 4.6}) {
    CHECK(count_below_tridiagonal(diag, off, E).count == count_below(op, E).count);
  }
}

TEST_CASE("free IDS estimate matches the arccos law") {
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const DisorderSpec spec = DisorderSpec::bernoulli(0.0);
  const Box box = line_box(1000);  // 2001 sites
  const IdsCurve curve = estimate_ids(k, spec, box, {0.5, 1.0, 2.0, 3.0}, 1, 7, 1);
  for (const auto& p : curve.points) {
    CHECK(std::abs(p.estimate - oracles::free_ids(p.energy)) < 2.0 / 2001.0);
  }
}

TEST_CASE("full band gives exactly one") {
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const DisorderSpec spec = DisorderSpec::bernoulli(0.7);
  const IdsCurve curve = estimate_ids(k, spec, line_box(200), {4.0 + 1.0}, 5, 3, 1);
  CHECK(curve.points[0].estimate == 1.0);
  CHECK(curve.points[0].ci_half == 0.0);
}

TEST_CASE("deterministic potential shifts the free curve") {
  // bernoulli(1): omega = 1 everywhere, so N(E) = N_free(E - 1)
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const IdsCurve curve =
      estimate_ids(k, DisorderSpec::bernoulli(1.0), line_box(1000), {1.5, 3.0}, 1, 3, 1);
  CHECK(std::abs(curve.points[0].estimate - oracles::free_ids(0.5)) < 2.0 / 2001.0);
  CHECK(std::abs(curve.points[1].estimate - oracles::free_ids(2.0)) < 2.0 / 2001.0);
}

TEST_CASE("small-box estimate matches exhaustive enumeration over configurations") {
  // 9-site box, bernoulli(1/2): exact expectation by enumerating all 2^9
  // potentials with an independent dense diagonalization
  const int n = 9;
  const double E = 0.2;
  double exact = 0.0;
  for (int mask = 0; mask < (1 << n); ++mask) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      M(i, i) = 2.0 + ((mask >> i) & 1);
      if (i + 1 < n) M(i + 1, i) = M(i, i + 1) = -1.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    long c = 0;
    for (int i = 0; i < n; ++i)
      if (es.eigenvalues()(i) <= E) ++c;
    exact += static_cast<double>(c);
  }
  exact /= static_cast<double>(1 << n) * n;

  const HoppingKernel k = HoppingKernel::laplacian(1);
  const IdsCurve curve =
      estimate_ids(k, DisorderSpec::bernoulli(0.5), line_box(4), {E}, 40000, 11, 2);
  CHECK(exact > 0.0);
  CHECK(exact < oracles::free_ids(E));
  CHECK(std::abs(curve.points[0].estimate - exact) < std::max(curve.points[0].ci_half, 1e-4) * 1.5);
}

TEST_CASE("IDS distribution is invariant under box translation") {
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const DisorderSpec spec = DisorderSpec::bernoulli(0.5);
  Box centered = line_box(50);
  Box shifted = line_box(50);
  shifted.center = lattice_vec(17);
  std::vector<double> a, b;
  for (long r = 0; r < 200; ++r) {
    const PotentialSample pa = sample_potential(spec, centered, mix_seed(900, r));
    const PotentialSample pb = sample_potential(spec, shifted, mix_seed(4242, r));
    const FiniteOperator oa = assemble_dirichlet(k, centered, pa.values);
    const FiniteOperator ob = assemble_dirichlet(k, shifted, pb.values);
    a.push_back(static_cast<double>(count_below(oa, 1.0).count));
    b.push_back(static_cast<double>(count_below(ob, 1.0).count));
  }
  CHECK_FALSE(ks_reject_1pct(a, b));
}

TEST_CASE("matched coupling makes counts monotone in rho, replica by replica") {
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const Box box = line_box(250);
  const double E = 0.3;
  long total_lo = 0, total_hi = 0;
  for (long r = 0; r < 60; ++r) {
    const std::uint64_t seed = mix_seed(77, r);
    const PotentialSample lo = sample_potential(DisorderSpec::bernoulli(0.3), box, seed);
    const PotentialSample hi = sample_potential(DisorderSpec::bernoulli(0.5), box, seed);
    const long clo = count_below(assemble_dirichlet(k, box, lo.values), E).count;
    const long chi = count_below(assemble_dirichlet(k, box, hi.values), E).count;
    CHECK(clo >= chi);  // adding nonnegative potential raises eigenvalues
    total_lo += clo;
    total_hi += chi;
  }
  CHECK(total_lo > total_hi);
}

TEST_CASE("box eigenvalue probability is controlled by L^d times the IDS") {
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const DisorderSpec spec = DisorderSpec::bernoulli(0.5);
  const double E = 0.05;
  const int L = 10;

  long hits = 0;
  const long trials = 4000;
  for (long r = 0; r < trials; ++r) {
    const PotentialSample p = sample_potential(spec, line_box(L), mix_seed(3000, r));
    if (count_below(assemble_dirichlet(k, line_box(L), p.values), E).count > 0) ++hits;
  }
  const MeanCi freq = frequency_ci(hits, trials);

  const IdsCurve ids = estimate_ids(k, spec, line_box(2000), {E}, 40, 3001, 2);
  const double ids_lower = std::max(ids.points[0].estimate - ids.points[0].ci_half, 1e-12);
  const double C = 2.0;  // calibrated constant, >= 1
  CHECK(freq.upper() <= C * (2 * L + 1) * ids_lower * 5.0 + 1e-3);
  // report-style: the implied constant stays moderate
  const double implied = freq.mean / ((2 * L + 1) * ids.points[0].estimate);
  CHECK(implied < 5.0);
}

TEST_CASE("tail scan on the pure bernoulli contrast run decreases with separated CIs") {
  // alpha below the theorem threshold keeps counts observable at desk scale;
  // the scan itself must still show the monotone trend with a positive
  // double-log slope
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const double alpha = 2.5;
  const TailFit fit = lifschitz_scan(
      k, [](double rho) { return DisorderSpec::bernoulli(rho); }, {0.3, 0.2, 0.1}, alpha, 4000,
      314, 2);
  REQUIRE(fit.points.size() == 3);
  for (const auto& p : fit.points) {
    CAPTURE(p.rho);
    CHECK_FALSE(p.upper_bound_only);
    CHECK(p.hits > 0);
  }
  CHECK(fit.points[0].estimate - fit.points[0].ci_half >
        fit.points[1].estimate + fit.points[1].ci_half);
  CHECK(fit.points[1].estimate - fit.points[1].ci_half >
        fit.points[2].estimate + fit.points[2].ci_half);
  CHECK(fit.fitted_exponent > 0.0);
  CHECK(fit.regression_points == 3);
  CHECK(fit.alpha_below_threshold);  // 2.5 < 4: flagged, not failed
}

TEST_CASE("band-edge tail exponent matches the classical d/2 rate") {
  // for the Bernoulli law, -ln N(E) ~ const * E^{-1/2} near the edge, so the
  // ln(-ln N) vs ln E slope sits near -d/2 = -1/2
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const DisorderSpec spec = DisorderSpec::bernoulli(0.5);
  const std::vector<double> energies = {0.15, 0.2, 0.3, 0.4};
  const IdsCurve curve = estimate_ids(k, spec, line_box(2500), energies, 400, 2718, 2);
  std::vector<double> x, y;
  for (const auto& p : curve.points) {
    REQUIRE(p.total_count > 50);
    x.push_back(std::log(p.energy));
    y.push_back(std::log(-std::log(p.estimate)));
  }
  const LineFit lf = fit_line(x, y);
  CHECK(lf.slope < -0.3);
  CHECK(lf.slope > -0.75);
}

TEST_CASE("d=2 estimates run through the banded path") {
  const HoppingKernel k = HoppingKernel::laplacian(2);
  Box box;
  box.dimension = 2;
  box.half_side = 7;  // 225 sites
  const IdsCurve curve =
      estimate_ids(k, DisorderSpec::bernoulli(0.3), box, {2.0, 4.0, 9.5}, 10, 77, 2);
  CHECK(curve.points[0].estimate > 0.0);
  CHECK(curve.points[0].estimate < curve.points[1].estimate);
  CHECK(curve.points[2].estimate == 1.0);  // above 4d + omega_+
}

TEST_CASE("IDS curves are nondecreasing in energy and live in [0,1]") {
  const HoppingKernel k = HoppingKernel::laplacian(1);
  const IdsCurve curve = estimate_ids(k, DisorderSpec::bernoulli(0.4), line_box(300),
                                      {-0.5, 0.1, 0.5, 1.5, 2.5, 3.5, 5.5}, 20, 55, 2);
  CHECK(curve.points.front().estimate == 0.0);  // below the spectrum, exactly zero
  double prev = -1.0;
  for (const auto& p : curve.points) {
    CHECK(p.estimate >= 0.0);
    CHECK(p.estimate <= 1.0);
    if (!p.upper_bound_only) {
      CHECK(p.estimate >= prev);
      prev = p.estimate;
    }
  }
  CHECK(curve.points.back().estimate == 1.0);
}

TEST_CASE("complex Hermitian band inertia agrees with dense diagonalization") {
  std::mt19937 gen(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const long n = 120;
  const int bw = 3;
  BandedHermitian A;
  A.n = n;
  A.bandwidth = bw;
  A.real = false;
  A.bands_re = Eigen::MatrixXd::Zero(bw + 1, n);
  A.bands_im = Eigen::MatrixXd::Zero(bw + 1, n);
  for (long j = 0; j < n; ++j) {
    A.bands_re(0, j) = 2.0 + u(gen);
    for (int b = 1; b <= bw && j + b < n; ++b) {
      A.bands_re(b, j) = 0.5 * u(gen);
      A.bands_im(b, j) = 0.5 * u(gen);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A.to_dense(), Eigen::EigenvaluesOnly);
  for (double E : {-1.0, 0.5, 2.0, 3.5}) {
    long expected = 0;
    for (long i = 0; i < n; ++i)
      if (es.eigenvalues()(i) <= E) ++expected;
    CHECK(count_below_banded(A, E).count == expected);
  }
}

TEST_CASE("lifschitz box rule keeps the lowest free mode below the probe energy") {
  for (double rho : {0.3, 0.2, 0.1}) {
    for (double alpha : {2.5, 4.5}) {
      const int side = lifschitz_box_side(rho, alpha);
      CHECK(side % 2 == 1);
      const double free_mode = 2.0 - 2.0 * std::cos(oracles::kPi / (side + 1));
      CHECK(free_mode < std::pow(rho, alpha));
    }
  }
}

TEST_CASE("zero-count cells report the rule-of-three bound, flagged") {
  const HoppingKernel k = HoppingKernel::laplacian(1);
  // smoothed law has no atom at zero: no eigenvalues this deep at desk scale
  const TailFit fit = lifschitz_scan(
      k, [](double rho) { return DisorderSpec::smoothed_bernoulli(rho); }, {0.3}, 4.5, 50, 9, 2);
  REQUIRE(fit.points.size() == 1);
  CHECK(fit.points[0].upper_bound_only);
  CHECK(fit.points[0].hits == 0);
  CHECK(fit.points[0].estimate ==
        Approx(3.0 / static_cast<double>(fit.points[0].total_sites)).epsilon(1e-12));
  CHECK(fit.regression_points == 0);
}
