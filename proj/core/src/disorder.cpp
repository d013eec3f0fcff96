#include "dilute/disorder.hpp"

#include <algorithm>
#include <cmath>

namespace dilute {

namespace {

// Simpson quadrature on [-1,1]
template <typename F>
double integrate_sym(const F& f, int panels = 4000) {
  const double h = 2.0 / panels;
  double s = f(-1.0) + f(1.0);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(-1.0 + i * h);
  return s * h / 3.0;
}

}  // namespace

Mollifier Mollifier::triangular() {
  Mollifier m;
  m.kind_ = Kind::triangular;
  m.max_value_ = 1.0;
  return m;
}

Mollifier Mollifier::smooth_bump() {
  Mollifier m;
  m.kind_ = Kind::smooth_bump;
  auto raw = [](double x) {
    const double t = 1.0 - x * x;
    return t > 1e-12 ? std::exp(-1.0 / t) : 0.0;
  };
  const double mass = integrate_sym(raw);
  const int n = 4096;
  m.grid_.resize(n + 1);
  m.cdf_.resize(n + 1);
  double acc = 0.0;
  m.grid_[0] = -1.0;
  m.cdf_[0] = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double a = -1.0 + 2.0 * (i - 1) / n;
    const double b = -1.0 + 2.0 * i / n;
    acc += (raw(a) + 4.0 * raw(0.5 * (a + b)) + raw(b)) * (b - a) / 6.0 / mass;
    m.grid_[i] = b;
    m.cdf_[i] = std::min(1.0, acc);
  }
  m.cdf_[n] = 1.0;
  m.max_value_ = std::exp(-1.0) / mass;
  return m;
}

double Mollifier::operator()(double x) const {
  if (x <= -1.0 || x >= 1.0) return 0.0;
  if (kind_ == Kind::triangular) return 1.0 - std::abs(x);
  const double t = 1.0 - x * x;
  return max_value_ * std::exp(1.0 - 1.0 / t);
}

double Mollifier::cdf(double x) const {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  if (kind_ == Kind::triangular) {
    if (x <= 0.0) return 0.5 * (x + 1.0) * (x + 1.0);
    return 0.5 + x - 0.5 * x * x;
  }
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - grid_.begin());
  if (i == 0) return 0.0;
  if (i >= grid_.size()) return 1.0;
  const double f = (x - grid_[i - 1]) / (grid_[i] - grid_[i - 1]);
  return cdf_[i - 1] + f * (cdf_[i] - cdf_[i - 1]);
}

double Mollifier::inverse_cdf(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  if (kind_ == Kind::triangular) {
    if (u <= 0.5) return std::sqrt(2.0 * u) - 1.0;
    return 1.0 - std::sqrt(2.0 - 2.0 * u);
  }
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  const std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
  if (i == 0) return -1.0;
  if (i >= cdf_.size()) return 1.0;
  const double span = cdf_[i] - cdf_[i - 1];
  const double f = span > 0.0 ? (u - cdf_[i - 1]) / span : 0.0;
  return grid_[i - 1] + f * (grid_[i] - grid_[i - 1]);
}

DisorderSpec DisorderSpec::bernoulli(double rho) {
  if (rho < 0.0 || rho > 1.0) throw ValidationError("bernoulli density must be in [0,1]");
  DisorderSpec s;
  s.law_ = Law::bernoulli;
  s.rho_ = rho;
  s.omega_plus_ = 1.0;
  s.mean_ = rho;
  s.variance_ = rho * (1.0 - rho);
  s.atomic_ = true;
  return s;
}

DisorderSpec DisorderSpec::smoothed_bernoulli(double rho, Mollifier v) {
  if (rho <= 0.0 || rho >= 0.5)
    throw ValidationError("smoothed bernoulli needs rho in (0, 0.5) so the humps stay disjoint");
  DisorderSpec s;
  s.law_ = Law::smoothed_bernoulli;
  s.rho_ = rho;
  s.mollifier_ = v;
  s.shift_ = rho;  // essential infimum of the raw mixture is -rho
  s.omega_plus_ = 1.0 + 2.0 * rho;
  double ex2;  // second moment of the mollifier profile
  if (v.kind() == Mollifier::Kind::triangular) {
    ex2 = 1.0 / 6.0;
  } else {
    ex2 = integrate_sym([&](double x) { return x * x * v(x); });
  }
  s.mean_ = 2.0 * rho;  // symmetric mollifier: E[raw] = rho, plus the shift
  s.variance_ = rho * (1.0 - rho) + rho * rho * ex2;
  s.atomic_ = false;
  return s;
}

DisorderSpec DisorderSpec::uniform_dilute(double rho) {
  if (rho <= 0.0 || rho > 1.0) throw ValidationError("uniform_dilute density must be in (0,1]");
  DisorderSpec s;
  s.law_ = Law::uniform_dilute;
  s.rho_ = rho;
  s.omega_plus_ = 2.0 * rho;
  s.mean_ = rho;
  s.variance_ = rho * rho / 3.0;
  s.atomic_ = false;
  s.holder = HolderCertificate{1.0, 0.5};  // P[a,b] <= |b-a| / (2 rho), exactly
  return s;
}

DisorderSpec DisorderSpec::tabulated(std::vector<double> breakpoints, std::vector<double> densities) {
  if (breakpoints.size() < 2 || densities.size() + 1 != breakpoints.size())
    throw ValidationError("tabulated law needs n+1 breakpoints for n density pieces");
  for (std::size_t i = 1; i < breakpoints.size(); ++i)
    if (breakpoints[i] <= breakpoints[i - 1])
      throw ValidationError("tabulated breakpoints must be strictly increasing");
  if (breakpoints.front() < 0.0)
    throw ValidationError("tabulated law must be supported on [0, infinity)");
  DisorderSpec s;
  s.law_ = Law::tabulated;
  // custom laws may place their essential infimum above 0 on purpose
  // (degenerate test laws); no normalization shift is applied here
  double mass = 0.0, mean = 0.0, ex2 = 0.0;
  s.cum_.assign(1, 0.0);
  for (std::size_t i = 0; i < densities.size(); ++i) {
    if (densities[i] < 0.0) throw ValidationError("tabulated density must be nonnegative");
    const double a = breakpoints[i], b = breakpoints[i + 1];
    mass += densities[i] * (b - a);
    mean += densities[i] * (b * b - a * a) / 2.0;
    ex2 += densities[i] * (b * b * b - a * a * a) / 3.0;
    s.cum_.push_back(mass);
  }
  if (std::abs(mass - 1.0) > 1e-9) throw ValidationError("tabulated density must integrate to 1");
  s.breaks_ = std::move(breakpoints);
  s.dens_ = std::move(densities);
  s.rho_ = mean;
  s.mean_ = mean;
  s.variance_ = ex2 - mean * mean;
  s.omega_plus_ = s.breaks_.back();
  s.atomic_ = false;
  return s;
}

std::string DisorderSpec::law_name() const {
  switch (law_) {
    case Law::bernoulli: return "bernoulli";
    case Law::smoothed_bernoulli: return "smoothed_bernoulli";
    case Law::uniform_dilute: return "uniform_dilute";
    case Law::tabulated: return "tabulated";
  }
  return "?";
}

double DisorderSpec::cdf(double x) const {
  switch (law_) {
    case Law::bernoulli:
      if (x < 0.0) return 0.0;
      if (x < 1.0) return 1.0 - rho_;
      return 1.0;
    case Law::smoothed_bernoulli:
      return (1.0 - rho_) * mollifier_.cdf(x / rho_ - 1.0) +
             rho_ * mollifier_.cdf((x - 1.0) / rho_ - 1.0);
    case Law::uniform_dilute:
      return std::clamp(x / (2.0 * rho_), 0.0, 1.0);
    case Law::tabulated: {
      if (x <= breaks_.front()) return 0.0;
      if (x >= breaks_.back()) return 1.0;
      const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
      const std::size_t i = static_cast<std::size_t>(it - breaks_.begin()) - 1;
      return cum_[i] + dens_[i] * (x - breaks_[i]);
    }
  }
  return 0.0;
}

double DisorderSpec::density(double x) const {
  switch (law_) {
    case Law::bernoulli:
      throw ValidationError("atomic law has no density");
    case Law::smoothed_bernoulli:
      return (1.0 - rho_) / rho_ * mollifier_(x / rho_ - 1.0) +
             mollifier_((x - 1.0) / rho_ - 1.0);
    case Law::uniform_dilute:
      return (x >= 0.0 && x <= 2.0 * rho_) ? 1.0 / (2.0 * rho_) : 0.0;
    case Law::tabulated: {
      if (x < breaks_.front() || x >= breaks_.back()) return 0.0;
      const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
      const std::size_t i = static_cast<std::size_t>(it - breaks_.begin()) - 1;
      return dens_[i];
    }
  }
  return 0.0;
}

double DisorderSpec::draw(RngStream& rng) const {
  switch (law_) {
    case Law::bernoulli:
      return rng.uniform01() < rho_ ? 1.0 : 0.0;
    case Law::smoothed_bernoulli: {
      const double b = rng.uniform01() < rho_ ? 1.0 : 0.0;
      const double x = mollifier_.inverse_cdf(rng.uniform01());
      return b + rho_ * (x + 1.0);
    }
    case Law::uniform_dilute:
      return 2.0 * rho_ * rng.uniform01();
    case Law::tabulated: {
      const double u = rng.uniform01();
      const auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
      std::size_t i = static_cast<std::size_t>(it - cum_.begin());
      if (i > 0) --i;
      if (i >= dens_.size()) i = dens_.size() - 1;
      const double span = cum_[i + 1] - cum_[i];
      const double f = span > 0.0 ? (u - cum_[i]) / span : 0.0;
      return breaks_[i] + f * (breaks_[i + 1] - breaks_[i]);
    }
  }
  return 0.0;
}

double smoothed_bernoulli_density(double rho, const Mollifier& v, double x) {
  if (rho <= 0.0 || rho >= 1.0) throw ValidationError("rho must be in (0,1)");
  return (1.0 - rho) / rho * v(x / rho) + v((x - 1.0) / rho);
}

PotentialSample sample_potential(const DisorderSpec& spec, const Box& box, std::uint64_t seed) {
  PotentialSample s;
  s.box = box;
  s.seed = seed;
  s.law_name = spec.law_name();
  const long n = box.site_count();
  s.values.resize(n);
  RngStream rng(seed);
  for (long i = 0; i < n; ++i) s.values[i] = spec.draw(rng);
  return s;
}

void PotentialSample::write_csv(std::ostream& os) const {
  const char* headers[3] = {"x", "y", "z"};
  for (int i = 0; i < box.dimension; ++i) os << headers[i] << ",";
  os << "value\n";
  char buf[64];
  for (long r = 0; r < box.site_count(); ++r) {
    const LatticeVec site = box.site_at(r);
    for (int i = 0; i < box.dimension; ++i) os << site[i] << ",";
    std::snprintf(buf, sizeof(buf), "%.17g", values[r]);
    os << buf << "\n";
  }
}

HolderCheck holder_certificate_check(const DisorderSpec& spec, double tau, int interval_count,
                                     int width_count) {
  HolderCheck out;
  if (spec.atomic()) return out;  // fails by construction; caller sees applicable=false
  if (tau <= 0.0 || tau > 1.0) throw ValidationError("tau must be in (0,1]");
  out.applicable = true;
  const double top = spec.omega_plus();
  const double rho_pow = std::pow(spec.rho(), -tau);
  for (int wi = 0; wi < width_count; ++wi) {
    const double w = top * std::pow(10.0, -6.0 * (width_count - 1 - wi) / (width_count - 1));
    for (int ai = 0; ai < interval_count; ++ai) {
      const double a = (top - w) * ai / std::max(1, interval_count - 1);
      const double p = spec.cdf(a + w) - spec.cdf(a);
      const double ratio = p / (std::pow(w, tau) * rho_pow);
      if (ratio > out.constant) {
        out.constant = ratio;
        out.worst_a = a;
        out.worst_b = a + w;
      }
    }
  }
  return out;
}

}  // namespace dilute
