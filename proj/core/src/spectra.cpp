#include "dilute/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>

#include "dilute/parallel.hpp"

namespace dilute {

namespace {

constexpr double kPi = 3.14159265358979323846;

// True when the kernel is the plain nearest-neighbor d=1 form, which unlocks
// the streaming Sturm path (no matrix materialization at all).
bool tridiagonal_fast_path(const HoppingKernel& kernel) {
  return kernel.dimension() == 1 && kernel.is_real() && kernel.support_radius() <= 1;
}

void tridiagonal_arrays(const HoppingKernel& kernel, std::span<const double> potential, long n,
                        std::vector<double>& diag, std::vector<double>& off) {
  double h0 = 0.0, h1 = 0.0;
  for (const auto& c : kernel.coefficients()) {
    if (c.offset[0] == 0) h0 = c.amplitude.real();
    if (c.offset[0] == 1) h1 = c.amplitude.real();
  }
  diag.assign(n, h0);
  off.assign(n > 0 ? n - 1 : 0, h1);
  if (!potential.empty())
    for (long i = 0; i < n; ++i) diag[i] += potential[i];
}

}  // namespace

double free_ids_1d(double energy) {
  if (energy <= 0.0) return 0.0;
  if (energy >= 4.0) return 1.0;
  return std::acos(1.0 - energy / 2.0) / kPi;
}

IdsCurve estimate_ids(const HoppingKernel& kernel, const DisorderSpec& spec, const Box& box,
                      std::vector<double> energies, long replicas, std::uint64_t seed, int threads,
                      const CountOptions& opts) {
  if (replicas < 1) throw ValidationError("estimate_ids needs at least one replica");
  std::sort(energies.begin(), energies.end());
  const long n = box.site_count();
  const std::size_t ne = energies.size();
  const bool fast = tridiagonal_fast_path(kernel) && !opts.force_dense;

  // per-replica eigenvalue fractions, per energy
  std::vector<std::vector<double>> fractions(ne, std::vector<double>(replicas, 0.0));
  std::vector<long> total_counts(ne, 0);
  std::mutex totals_mutex;

  parallel_for_index(replicas, threads, [&](long r) {
    const PotentialSample sample = sample_potential(spec, box, mix_seed(seed, r));
    std::vector<long> counts(ne, 0);
    if (fast) {
      std::vector<double> diag, off;
      tridiagonal_arrays(kernel, sample.values, n, diag, off);
      for (std::size_t e = 0; e < ne; ++e)
        counts[e] = count_below_tridiagonal(diag, off, energies[e]).count;
    } else {
      const FiniteOperator op = assemble_dirichlet(kernel, box, sample.values, opts.capacity);
      for (std::size_t e = 0; e < ne; ++e) counts[e] = count_below(op, energies[e], opts).count;
    }
    for (std::size_t e = 0; e < ne; ++e)
      fractions[e][r] = static_cast<double>(counts[e]) / static_cast<double>(n);
    std::lock_guard<std::mutex> lock(totals_mutex);
    for (std::size_t e = 0; e < ne; ++e) total_counts[e] += counts[e];
  });

  IdsCurve curve;
  curve.box = box;
  curve.replicas = replicas;
  curve.seed = seed;
  curve.law_name = spec.law_name();
  for (std::size_t e = 0; e < ne; ++e) {
    IdsPoint p;
    p.energy = energies[e];
    p.total_count = total_counts[e];
    if (energies[e] < 0.0) {
      p.estimate = 0.0;  // shifted kernel + nonnegative potential: exactly zero
    } else if (total_counts[e] == 0) {
      p.upper_bound_only = true;
      p.estimate = rule_of_three(replicas * n);
      p.ci_half = 0.0;
    } else {
      const MeanCi ci = mean_ci(fractions[e]);
      p.estimate = ci.mean;
      p.ci_half = ci.ci_half;
    }
    curve.points.push_back(p);
  }
  return curve;
}

int lifschitz_box_side(double rho, double alpha) {
  if (rho <= 0.0 || rho > 1.0) throw ValidationError("tail scan needs rho in (0,1]");
  const double target = std::pow(rho, -alpha / 2.0);
  long side = 4l * static_cast<long>(std::ceil(target));
  if (side % 2 == 0) ++side;
  return static_cast<int>(side);
}

TailFit lifschitz_scan(const HoppingKernel& kernel,
                       const std::function<DisorderSpec(double)>& law_for_rho,
                       const std::vector<double>& rho_grid, double alpha, long replicas,
                       std::uint64_t seed, int threads, int box_side_override) {
  TailFit fit;
  fit.alpha = alpha;
  const int d = kernel.dimension();
  // below the threshold the tail regime is not expected; flag, never fail
  // (contrast runs live there on purpose)
  fit.alpha_below_threshold = !(alpha > 2.0 * (d + 1.0) / d);

  for (std::size_t i = 0; i < rho_grid.size(); ++i) {
    const double rho = rho_grid[i];
    const double energy = std::pow(rho, alpha);
    Box box;
    box.dimension = d;
    box.half_side = ((box_side_override > 0 ? box_side_override : lifschitz_box_side(rho, alpha)) - 1) / 2;
    const DisorderSpec spec = law_for_rho(rho);
    // sub-seed derived from the rho value itself, so a single-point scan (or
    // a sweep over singleton grids) reproduces the multi-point rows exactly
    std::uint64_t rho_bits;
    std::memcpy(&rho_bits, &rho, sizeof(rho_bits));
    const IdsCurve curve =
        estimate_ids(kernel, spec, box, {energy}, replicas, mix_seed(seed, rho_bits), threads);
    TailPoint p;
    p.rho = rho;
    p.energy = energy;
    p.box_side = box.side();
    p.replicas = replicas;
    p.total_sites = replicas * box.site_count();
    p.hits = curve.points[0].total_count;
    p.estimate = curve.points[0].estimate;
    p.ci_half = curve.points[0].ci_half;
    p.upper_bound_only = curve.points[0].upper_bound_only;
    fit.points.push_back(p);
  }

  // double-log regression over positive-count cells only
  std::vector<double> x, y;
  for (const auto& p : fit.points) {
    if (p.upper_bound_only || p.estimate <= 0.0 || p.estimate >= 1.0) continue;
    x.push_back(std::log(1.0 / p.rho));
    y.push_back(std::log(-std::log(p.estimate)));
  }
  fit.regression_points = static_cast<long>(x.size());
  if (x.size() >= 2) {
    const LineFit lf = fit_line(x, y);
    fit.fitted_exponent = lf.slope;
    fit.r2 = lf.r2;
  }
  // superlinear decay diagnostic: -ln N grows faster than linearly in
  // ln(1/rho), i.e. successive slopes increase
  if (x.size() >= 3) {
    bool increasing = true;
    // points were appended in grid order; sort by x to compare slopes
    std::vector<std::size_t> idx(x.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    double prev_slope = -std::numeric_limits<double>::max();
    for (std::size_t k = 1; k < idx.size(); ++k) {
      const double dx = x[idx[k]] - x[idx[k - 1]];
      if (dx <= 0) continue;
      const double slope = (std::exp(y[idx[k]]) - std::exp(y[idx[k - 1]])) / dx;
      if (slope < prev_slope) increasing = false;
      prev_slope = slope;
    }
    fit.decay_superlinear = increasing;
  }
  return fit;
}

}  // namespace dilute
