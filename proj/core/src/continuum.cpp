#include "dilute/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>

#include "dilute/parallel.hpp"
#include "dilute/rng.hpp"

namespace dilute {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

SingleSitePotential SingleSitePotential::flat_top(double u_plus, double tau_minus,
                                                  double tau_plus) {
  if (!(0.0 < tau_minus && tau_minus < tau_plus))
    throw ValidationError("need 0 < tau_- < tau_+");
  if (u_plus <= 0.0) throw ValidationError("need u_+ > 0");
  SingleSitePotential u;
  u.u_plus_ = u_plus;
  u.u_minus_ = 0.5 * u_plus;
  u.tau_minus_ = tau_minus;
  u.tau_plus_ = tau_plus;
  u.radii_ = {0.0, tau_minus, tau_plus};
  u.values_ = {u_plus, u_plus, 0.0};
  return u;
}

SingleSitePotential SingleSitePotential::tabulated(std::vector<double> radii,
                                                   std::vector<double> values, double u_minus,
                                                   double u_plus, double tau_minus,
                                                   double tau_plus) {
  if (radii.size() != values.size() || radii.size() < 2)
    throw ValidationError("profile table needs matching radii/values, at least two points");
  if (!(0.0 < u_minus && u_minus < u_plus) || !(0.0 < tau_minus && tau_minus < tau_plus))
    throw ValidationError("bounds must satisfy 0 < u_- < u_+ and 0 < tau_- < tau_+");
  SingleSitePotential u;
  u.radii_ = std::move(radii);
  u.values_ = std::move(values);
  u.u_minus_ = u_minus;
  u.u_plus_ = u_plus;
  u.tau_minus_ = tau_minus;
  u.tau_plus_ = tau_plus;
  // certificate check on the evaluation grid
  for (std::size_t i = 0; i < u.radii_.size(); ++i) {
    const double r = u.radii_[i], v = u.values_[i];
    if (v < 0.0 || v > u_plus * (1.0 + 1e-12))
      throw ValidationError("profile exceeds the certified upper bound");
    if (r <= tau_minus && v < u_minus * (1.0 - 1e-12))
      throw ValidationError("profile dips below u_- inside tau_-");
    if (r >= tau_plus && v != 0.0)
      throw ValidationError("profile must vanish beyond tau_+");
  }
  return u;
}

double SingleSitePotential::operator()(double r) const {
  r = std::abs(r);
  if (r >= tau_plus_) return 0.0;
  auto it = std::upper_bound(radii_.begin(), radii_.end(), r);
  if (it == radii_.begin()) return values_.front();
  if (it == radii_.end()) return 0.0;
  const std::size_t i = static_cast<std::size_t>(it - radii_.begin());
  const double f = (r - radii_[i - 1]) / (radii_[i] - radii_[i - 1]);
  return values_[i - 1] + f * (values_[i] - values_[i - 1]);
}

PointCloud sample_poisson_cloud(double intensity, const BoxR& box, std::uint64_t seed) {
  if (intensity <= 0.0) throw ValidationError("Poisson intensity must be positive");
  PointCloud cloud;
  cloud.intensity = intensity;
  cloud.seed = seed;
  RngStream rng(seed);
  const long count = rng.poisson(intensity * box.volume());
  cloud.points.reserve(count);
  for (long i = 0; i < count; ++i) {
    std::array<double, 2> p{0.0, 0.0};
    for (int k = 0; k < box.dimension; ++k)
      p[k] = rng.uniform(-box.half_length[k], box.half_length[k]);
    cloud.points.push_back(p);
  }
  return cloud;
}

std::pair<PointCloud, PointCloud> thin_cloud(const PointCloud& cloud, std::uint64_t seed) {
  RngStream rng(seed);
  PointCloud kept, dropped;
  kept.intensity = dropped.intensity = cloud.intensity / 2.0;
  kept.seed = dropped.seed = seed;
  for (const auto& p : cloud.points) {
    if (rng.bernoulli(0.5))
      kept.points.push_back(p);
    else
      dropped.points.push_back(p);
  }
  return {std::move(kept), std::move(dropped)};
}

void ContinuumModel::validate() const {
  if (dimension < 1 || dimension > 2) throw ValidationError("continuum models support d <= 2");
  if (period_q <= 1 || period_q % 2 == 0)
    throw ValidationError("background period must be an odd integer > 1");
  if (mesh <= 0.0) throw ValidationError("mesh width must be positive");
  if (std::abs(1.0 / mesh - std::round(1.0 / mesh)) > 1e-9)
    throw ValidationError("mesh must divide the unit cell");
  if (mesh > site.tau_minus() / 2.0 + 1e-12)
    throw ValidationError("mesh too coarse: need >= 4 grid points across the site support");
  if (varrho <= 0.0) throw ValidationError("disorder density must be positive");
}

ContinuumRealization sample_continuum_realization(const ContinuumModel& model, std::uint64_t seed) {
  model.validate();
  ContinuumRealization real;
  if (model.disorder == ContinuumDisorder::poisson) {
    PointCloud cloud = sample_poisson_cloud(model.varrho, model.box, seed);
    real.centers = std::move(cloud.points);
    real.weights.assign(real.centers.size(), 1.0);
  } else {
    RngStream rng(seed);
    // integer lattice points inside the box, lexicographic
    const long nx = static_cast<long>(std::floor(model.box.half_length[0]));
    if (model.dimension == 1) {
      for (long j = -nx; j <= nx; ++j) {
        const double w = rng.bernoulli(model.varrho) ? 1.0 : 0.0;
        if (w > 0.0) {
          real.centers.push_back({static_cast<double>(j), 0.0});
          real.weights.push_back(w);
        }
      }
    } else {
      const long ny = static_cast<long>(std::floor(model.box.half_length[1]));
      for (long jx = -nx; jx <= nx; ++jx)
        for (long jy = -ny; jy <= ny; ++jy) {
          const double w = rng.bernoulli(model.varrho) ? 1.0 : 0.0;
          if (w > 0.0) {
            real.centers.push_back({static_cast<double>(jx), static_cast<double>(jy)});
            real.weights.push_back(w);
          }
        }
    }
  }
  std::sort(real.centers.begin(), real.centers.end());
  return real;
}

namespace {

// potential sampler along the x-axis for d=1 (centers sorted by x)
class PotentialTrace1d {
 public:
  PotentialTrace1d(const ContinuumModel& model, const ContinuumRealization& real)
      : model_(model), real_(real) {}

  double operator()(double x) {
    const double reach = model_.site.tau_plus();
    while (lo_ < real_.centers.size() && real_.centers[lo_][0] < x - reach) ++lo_;
    double v = 0.0;
    for (std::size_t j = lo_; j < real_.centers.size() && real_.centers[j][0] <= x + reach; ++j)
      v += real_.weights[j] * model_.site(x - real_.centers[j][0]);
    if (model_.periodic_background) v += model_.periodic_background({x, 0.0});
    return v;
  }

 private:
  const ContinuumModel& model_;
  const ContinuumRealization& real_;
  std::size_t lo_ = 0;
};

double potential_at(const ContinuumModel& model, const ContinuumRealization& real, double x,
                    double y) {
  const double reach = model.site.tau_plus();
  double v = 0.0;
  for (std::size_t j = 0; j < real.centers.size(); ++j) {
    const double dx = x - real.centers[j][0];
    if (std::abs(dx) > reach) continue;
    const double dy = model.dimension == 2 ? y - real.centers[j][1] : 0.0;
    if (std::abs(dy) > reach) continue;
    v += real.weights[j] * model.site(std::hypot(dx, dy));
  }
  if (model.periodic_background) v += model.periodic_background({x, y});
  return v;
}

// streaming Sturm count for the d=1 finite-difference operator; LAPACK-style
// pivot floor instead of restarts, so a single pass suffices on huge boxes
long count_below_fd_1d(const ContinuumModel& model, const ContinuumRealization& real,
                       double energy) {
  const double h = model.mesh;
  const double len = 2.0 * model.box.half_length[0];
  const long interior = static_cast<long>(std::round(len / h)) - 1;
  const double hop = 1.0 / (h * h);
  const double pivmin = 1e-14 * (4.0 * hop + std::abs(energy) + 1.0);
  PotentialTrace1d V(model, real);
  long neg = 0;
  double d = 1.0;
  for (long i = 1; i <= interior; ++i) {
    const double x = -model.box.half_length[0] + i * h;
    double di = (2.0 * hop + V(x) - energy) - (i > 1 ? hop * hop / d : 0.0);
    if (std::abs(di) < pivmin) di = -pivmin;
    if (di < 0) ++neg;
    d = di;
  }
  return neg;
}

}  // namespace

FiniteOperator assemble_continuum(const ContinuumModel& model, const ContinuumRealization& real,
                                  std::optional<std::array<double, 2>> bloch_theta,
                                  const Capacity& cap) {
  model.validate();
  const double h = model.mesh;
  const double hop = 1.0 / (h * h);

  if (model.dimension == 1) {
    const double L = model.box.half_length[0];
    const long m = static_cast<long>(std::round(2.0 * L / h));
    if (!bloch_theta) {
      const long n = m - 1;
      if (n < 1) throw ValidationError("box too small for the mesh");
      if (2 * n > cap.max_banded_entries) throw CapacityError("mesh exceeds the capacity budget");
      BandedHermitian B;
      B.n = n;
      B.bandwidth = 1;
      B.real = true;
      B.bands_re = Eigen::MatrixXd::Zero(2, n);
      PotentialTrace1d V(model, real);
      for (long i = 0; i < n; ++i) {
        const double x = -L + (i + 1) * h;
        B.bands_re(0, i) = 2.0 * hop + V(x);
        if (i + 1 < n) B.bands_re(1, i) = -hop;
      }
      Box tag;
      tag.dimension = 1;
      tag.half_side = static_cast<int>(n / 2);
      return FiniteOperator(tag, FiniteOperator::Basis::position, std::move(B));
    }
    // Bloch cell: m points with phase-twisted wraparound
    const long n = m;
    if (n > cap.max_dense_dim) throw CapacityError("Bloch cell exceeds the capacity budget");
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
    PotentialTrace1d V(model, real);
    for (long i = 0; i < n; ++i) {
      const double x = -L + i * h;
      M(i, i) = 2.0 * hop + V(x);
      M(i, (i + 1) % n) += -hop;
      M((i + 1) % n, i) += -hop;
    }
    const double phase = (*bloch_theta)[0] * 2.0 * L;
    M(n - 1, 0) += -hop * (Complex(std::cos(phase), std::sin(phase)) - 1.0);
    M(0, n - 1) += -hop * (Complex(std::cos(phase), -std::sin(phase)) - 1.0);
    Box tag;
    tag.dimension = 1;
    tag.half_side = static_cast<int>(n / 2);
    return FiniteOperator(tag, FiniteOperator::Basis::position, std::move(M));
  }

  // d = 2, Dirichlet five-point stencil
  const double Lx = model.box.half_length[0], Ly = model.box.half_length[1];
  const long mx = static_cast<long>(std::round(2.0 * Lx / h)) - 1;
  const long my = static_cast<long>(std::round(2.0 * Ly / h)) - 1;
  if (mx < 1 || my < 1) throw ValidationError("box too small for the mesh");
  if (bloch_theta) throw ValidationError("Bloch boundary conditions are d=1 only");
  const long n = mx * my;
  const long bw = my;
  if ((bw + 1) * n > cap.max_banded_entries)
    throw CapacityError("2d mesh exceeds the capacity budget");
  BandedHermitian B;
  B.n = n;
  B.bandwidth = static_cast<int>(bw);
  B.real = true;
  B.bands_re = Eigen::MatrixXd::Zero(bw + 1, n);
  for (long ix = 0; ix < mx; ++ix) {
    const double x = -Lx + (ix + 1) * h;
    for (long iy = 0; iy < my; ++iy) {
      const double y = -Ly + (iy + 1) * h;
      const long r = ix * my + iy;
      B.bands_re(0, r) = 4.0 * hop + potential_at(model, real, x, y);
      if (iy + 1 < my) B.bands_re(1, r) = -hop;
      if (ix + 1 < mx) B.bands_re(bw, r) = -hop;
    }
  }
  Box tag;
  tag.dimension = 2;
  tag.half_side = static_cast<int>(std::max(mx, my) / 2);
  return FiniteOperator(tag, FiniteOperator::Basis::position, std::move(B));
}

IdsCurve continuum_ids(const ContinuumModel& model, std::vector<double> energies, long replicas,
                       std::uint64_t seed, int threads) {
  model.validate();
  if (replicas < 1) throw ValidationError("continuum_ids needs at least one replica");
  std::sort(energies.begin(), energies.end());
  const double volume = model.box.volume();
  const std::size_t ne = energies.size();

  std::vector<std::vector<double>> fractions(ne, std::vector<double>(replicas, 0.0));
  std::vector<long> totals(ne, 0);
  std::mutex totals_mutex;
  parallel_for_index(replicas, threads, [&](long r) {
    const ContinuumRealization real = sample_continuum_realization(model, mix_seed(seed, r));
    std::vector<long> counts(ne, 0);
    if (model.dimension == 1) {
      for (std::size_t e = 0; e < ne; ++e)
        counts[e] = energies[e] < 0.0 ? 0 : count_below_fd_1d(model, real, energies[e]);
    } else {
      const FiniteOperator op = assemble_continuum(model, real);
      for (std::size_t e = 0; e < ne; ++e)
        counts[e] = energies[e] < 0.0 ? 0 : count_below(op, energies[e]).count;
    }
    for (std::size_t e = 0; e < ne; ++e)
      fractions[e][r] = static_cast<double>(counts[e]) / volume;
    std::lock_guard<std::mutex> lock(totals_mutex);
    for (std::size_t e = 0; e < ne; ++e) totals[e] += counts[e];
  });

  IdsCurve curve;
  curve.box.dimension = model.dimension;
  curve.replicas = replicas;
  curve.seed = seed;
  curve.law_name = model.disorder == ContinuumDisorder::poisson ? "poisson" : "bernoulli_lattice";
  for (std::size_t e = 0; e < ne; ++e) {
    IdsPoint p;
    p.energy = energies[e];
    p.total_count = totals[e];
    if (energies[e] < 0.0) {
      p.estimate = 0.0;  // operators are nonnegative: exactly zero, not a bound
    } else if (totals[e] == 0) {
      p.upper_bound_only = true;
      p.estimate = 3.0 / (static_cast<double>(replicas) * volume);
    } else {
      const MeanCi ci = mean_ci(fractions[e]);
      p.estimate = ci.mean;
      p.ci_half = ci.ci_half;
    }
    curve.points.push_back(p);
  }
  return curve;
}

TailFit continuum_lifschitz_scan(const ContinuumModel& base, const std::vector<double>& varrho_grid,
                                 double alpha, long replicas, std::uint64_t seed, int threads) {
  TailFit fit;
  fit.alpha = alpha;
  for (std::size_t i = 0; i < varrho_grid.size(); ++i) {
    const double varrho = varrho_grid[i];
    const double energy = std::pow(varrho, alpha);
    ContinuumModel model = base;
    model.varrho = varrho;
    // box long enough that the lowest free mode sits well below the probe
    model.box.half_length[0] = 2.0 * kPi * std::pow(varrho, -alpha / 2.0);
    std::uint64_t bits;
    std::memcpy(&bits, &varrho, sizeof(bits));
    const IdsCurve curve = continuum_ids(model, {energy}, replicas, mix_seed(seed, bits), threads);
    TailPoint p;
    p.rho = varrho;
    p.energy = energy;
    p.box_side = static_cast<int>(2.0 * model.box.half_length[0]);
    p.replicas = replicas;
    p.total_sites = static_cast<long>(replicas * model.box.volume() / model.mesh);
    p.hits = curve.points[0].total_count;
    p.estimate = curve.points[0].estimate;
    p.ci_half = curve.points[0].ci_half;
    p.upper_bound_only = curve.points[0].upper_bound_only;
    fit.points.push_back(p);
  }
  std::vector<double> x, y;
  for (const auto& p : fit.points) {
    if (p.upper_bound_only || p.estimate <= 0.0) continue;
    x.push_back(std::log(1.0 / p.rho));
    y.push_back(std::log(-std::log(std::min(p.estimate, 0.999))));
  }
  fit.regression_points = static_cast<long>(x.size());
  if (x.size() >= 2) {
    const LineFit lf = fit_line(x, y);
    fit.fitted_exponent = lf.slope;
    fit.r2 = lf.r2;
  }
  return fit;
}

}  // namespace dilute
