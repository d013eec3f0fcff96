#include "dilute/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace dilute {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_to_pi(double x) {
  x = std::fmod(x + kPi, 2.0 * kPi);
  if (x < 0) x += 2.0 * kPi;
  return x - kPi;
}

double torus_dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = wrap_to_pi(a[i] - b[i]);
    s += d * d;
  }
  return s;
}

}  // namespace

double euclidean_norm(const LatticeVec& v, int dimension) {
  double s = 0.0;
  for (int i = 0; i < dimension; ++i) s += static_cast<double>(v[i]) * v[i];
  return std::sqrt(s);
}

LatticeVec Box::site_at(long rank) const {
  LatticeVec site{0, 0, 0};
  const long s = side();
  for (int i = dimension - 1; i >= 0; --i) {
    site[i] = static_cast<int>(rank % s) - half_side + center[i];
    rank /= s;
  }
  return site;
}

long Box::rank_of(const LatticeVec& site) const {
  long rank = 0;
  const long s = side();
  for (int i = 0; i < dimension; ++i) {
    const long c = static_cast<long>(site[i]) - center[i] + half_side;
    rank = rank * s + c;
  }
  return rank;
}

bool Box::contains(const LatticeVec& site) const {
  for (int i = 0; i < dimension; ++i) {
    if (std::abs(site[i] - center[i]) > half_side) return false;
  }
  return true;
}

HoppingKernel::HoppingKernel(int dimension, std::vector<Coefficient> coefficients,
                             double decay_constant, bool shift_to_band_bottom)
    : dimension_(dimension), coefficients_(std::move(coefficients)), decay_constant_(decay_constant) {
  if (dimension_ < 1 || dimension_ > kMaxDim)
    throw ValidationError("kernel dimension must be in [1," + std::to_string(kMaxDim) + "]");
  if (decay_constant_ <= 0.0) throw ValidationError("decay constant must be positive");
  validate_and_normalize(shift_to_band_bottom);
}

HoppingKernel HoppingKernel::laplacian(int dimension, double decay_constant) {
  if (decay_constant <= 0.0) decay_constant = 0.4 / dimension;
  std::vector<Coefficient> coeffs;
  Coefficient c0;
  c0.amplitude = 2.0 * dimension;
  coeffs.push_back(c0);
  for (int i = 0; i < dimension; ++i) {
    Coefficient cp, cm;
    cp.offset[i] = 1;
    cm.offset[i] = -1;
    cp.amplitude = -1.0;
    cm.amplitude = -1.0;
    coeffs.push_back(cp);
    coeffs.push_back(cm);
  }
  return HoppingKernel(dimension, std::move(coeffs), decay_constant);
}

void HoppingKernel::validate_and_normalize(bool shift) {
  std::map<LatticeVec, Complex> table;
  for (const auto& c : coefficients_) {
    LatticeVec k = c.offset;
    for (int i = dimension_; i < kMaxDim; ++i) {
      if (k[i] != 0) throw ValidationError("offset uses components beyond the kernel dimension");
    }
    if (!table.emplace(k, c.amplitude).second) throw ValidationError("duplicate kernel offset");
  }

  const double tol = 1e-12;
  bool has_offsite = false;
  for (const auto& [k, amp] : table) {
    LatticeVec mk = k;
    for (auto& v : mk) v = -v;
    auto it = table.find(mk);
    if (it == table.end())
      throw ValidationError("Hermitian symmetry violated: missing mirror offset");
    if (std::abs(it->second - std::conj(amp)) > tol * (1.0 + std::abs(amp)))
      throw ValidationError("Hermitian symmetry violated: h_{-k} != conj(h_k)");
    bool zero = true;
    for (int i = 0; i < dimension_; ++i) zero = zero && k[i] == 0;
    if (!zero && std::abs(amp) > 0.0) has_offsite = true;
  }
  if (!has_offsite) throw ValidationError("kernel must have h_k != 0 for some k != 0");

  real_ = true;
  support_radius_ = 0;
  for (const auto& [k, amp] : table) {
    if (std::abs(amp.imag()) > tol * (1.0 + std::abs(amp))) real_ = false;
    for (int i = 0; i < dimension_; ++i) support_radius_ = std::max(support_radius_, std::abs(k[i]));
  }

  coefficients_.clear();
  for (const auto& [k, amp] : table) {
    Coefficient c;
    c.offset = k;
    c.amplitude = real_ ? Complex(amp.real(), 0.0) : amp;
    coefficients_.push_back(c);
  }

  amplitude_sum_ = 0.0;
  lipschitz_ = 0.0;
  for (const auto& c : coefficients_) {
    amplitude_sum_ += std::abs(c.amplitude);
    lipschitz_ += euclidean_norm(c.offset, dimension_) * std::abs(c.amplitude);
  }

  if (shift) {
    // locate min h over a probe grid + Newton refinement, then move it to 0
    const int res = dimension_ == 1 ? 512 : (dimension_ == 2 ? 96 : 24);
    double best = std::numeric_limits<double>::max();
    std::vector<double> best_theta(dimension_, 0.0);
    std::vector<double> theta(dimension_, 0.0);
    std::vector<int> idx(dimension_, 0);
    const long total = static_cast<long>(std::pow(static_cast<double>(res), dimension_));
    for (long r = 0; r < total; ++r) {
      long t = r;
      for (int i = dimension_ - 1; i >= 0; --i) {
        idx[i] = static_cast<int>(t % res);
        t /= res;
      }
      for (int i = 0; i < dimension_; ++i) theta[i] = -kPi + 2.0 * kPi * idx[i] / res;
      const double v = symbol(theta);
      if (v < best) {
        best = v;
        best_theta = theta;
      }
    }
    // a few damped Newton steps on finite-difference derivatives
    const double h = 1e-4;
    for (int it = 0; it < 12; ++it) {
      Eigen::VectorXd g(dimension_);
      Eigen::MatrixXd H(dimension_, dimension_);
      for (int i = 0; i < dimension_; ++i) {
        auto tp = best_theta, tm = best_theta;
        tp[i] += h;
        tm[i] -= h;
        g(i) = (symbol(tp) - symbol(tm)) / (2 * h);
        for (int j = i; j < dimension_; ++j) {
          auto tpp = best_theta, tpm = best_theta, tmp = best_theta, tmm = best_theta;
          tpp[i] += h;
          tpp[j] += h;
          tpm[i] += h;
          tpm[j] -= h;
          tmp[i] -= h;
          tmp[j] += h;
          tmm[i] -= h;
          tmm[j] -= h;
          H(i, j) = H(j, i) = (symbol(tpp) - symbol(tpm) - symbol(tmp) + symbol(tmm)) / (4 * h * h);
        }
      }
      Eigen::VectorXd step = H.ldlt().solve(g);
      if (!step.allFinite()) break;
      bool improved = false;
      for (int halvings = 0; halvings < 4; ++halvings) {
        const double damp = std::pow(0.5, halvings);
        auto cand = best_theta;
        for (int i = 0; i < dimension_; ++i) cand[i] = wrap_to_pi(cand[i] - damp * step(i));
        const double v = symbol(cand);
        if (v < best) {
          best = v;
          best_theta = cand;
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
    if (std::abs(best) > 0.0) {
      for (auto& c : coefficients_) {
        bool zero = true;
        for (int i = 0; i < dimension_; ++i) zero = zero && c.offset[i] == 0;
        if (zero) c.amplitude -= best;
      }
      // h_0 may have been absent from the table
      bool found = false;
      for (auto& c : coefficients_) {
        bool zero = true;
        for (int i = 0; i < dimension_; ++i) zero = zero && c.offset[i] == 0;
        if (zero) found = true;
      }
      if (!found) {
        Coefficient c0;
        c0.amplitude = -best;
        coefficients_.push_back(c0);
      }
      spectral_shift_ = -best;
      amplitude_sum_ = 0.0;
      for (const auto& c : coefficients_) amplitude_sum_ += std::abs(c.amplitude);
    }
  }

  for (const auto& c : coefficients_) {
    const double bound =
        std::exp(-decay_constant_ * euclidean_norm(c.offset, dimension_)) / decay_constant_;
    if (std::abs(c.amplitude) > bound * (1.0 + 1e-12))
      throw ValidationError("decay certificate violated: |h_k| > (1/c) e^{-c|k|} at some offset; "
                            "use a smaller decay constant");
  }
}

double HoppingKernel::symbol(std::span<const double> theta) const {
  if (static_cast<int>(theta.size()) != dimension_)
    throw ValidationError("theta dimension mismatch");
  Complex acc(0.0, 0.0);
  for (const auto& c : coefficients_) {
    double phase = 0.0;
    for (int i = 0; i < dimension_; ++i) phase += c.offset[i] * theta[i];
    acc += c.amplitude * Complex(std::cos(phase), std::sin(phase));
  }
  if (std::abs(acc.imag()) > 1e-12 * std::max(1.0, amplitude_sum_))
    throw ValidationError("symbol has a non-negligible imaginary part (non-Hermitian kernel?)");
  return acc.real();
}

double HoppingKernel::symbol(double theta) const {
  return symbol(std::span<const double>(&theta, 1));
}

double HoppingKernel::symbol_max() const {
  if (symbol_max_ >= 0.0) return symbol_max_;
  const int res = dimension_ == 1 ? 512 : (dimension_ == 2 ? 96 : 24);
  double best = std::numeric_limits<double>::lowest();
  std::vector<double> theta(dimension_, 0.0);
  std::vector<int> idx(dimension_, 0);
  const long total = static_cast<long>(std::pow(static_cast<double>(res), dimension_));
  for (long r = 0; r < total; ++r) {
    long t = r;
    for (int i = dimension_ - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(t % res);
      t /= res;
    }
    for (int i = 0; i < dimension_; ++i) theta[i] = -kPi + 2.0 * kPi * idx[i] / res;
    best = std::max(best, symbol(theta));
  }
  symbol_max_ = best;
  return symbol_max_;
}

HoppingKernel HoppingKernel::from_json_text(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const int d = j.at("dimension").get<int>();
  const double c = j.at("decay_constant").get<double>();
  const bool shift = j.value("shift_to_band_bottom", true);
  std::vector<Coefficient> coeffs;
  for (const auto& e : j.at("coefficients")) {
    Coefficient k;
    const auto& off = e.at("offset");
    if (static_cast<int>(off.size()) != d)
      throw ValidationError("kernel file: offset length != dimension");
    for (int i = 0; i < d; ++i) k.offset[i] = off[i].get<int>();
    k.amplitude = Complex(e.at("re").get<double>(), e.value("im", 0.0));
    coeffs.push_back(k);
  }
  return HoppingKernel(d, std::move(coeffs), c, shift);
}

HoppingKernel HoppingKernel::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open kernel file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

Eigen::MatrixXcd BandedHermitian::to_dense() const {
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
  for (long j = 0; j < n; ++j) {
    for (int b = 0; b <= bandwidth && j + b < n; ++b) {
      const Complex v(bands_re(b, j), real ? 0.0 : bands_im(b, j));
      M(j + b, j) = v;
      M(j, j + b) = std::conj(v);
    }
  }
  return M;
}

Eigen::MatrixXd BandedHermitian::to_dense_real() const {
  if (!real) throw ValidationError("banded matrix is not real");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (long j = 0; j < n; ++j) {
    for (int b = 0; b <= bandwidth && j + b < n; ++b) {
      M(j + b, j) = bands_re(b, j);
      M(j, j + b) = bands_re(b, j);
    }
  }
  return M;
}

FiniteOperator::FiniteOperator(Box box, Basis basis, BandedHermitian banded)
    : box_(box), basis_(basis), storage_(std::move(banded)) {}

FiniteOperator::FiniteOperator(Box box, Basis basis, Eigen::MatrixXcd dense)
    : box_(box), basis_(basis), storage_(std::move(dense)) {}

long FiniteOperator::size() const {
  if (is_banded()) return banded().n;
  return dense().rows();
}

Eigen::MatrixXcd FiniteOperator::to_dense(const Capacity& cap) const {
  if (size() > cap.max_dense_dim)
    throw CapacityError("dense materialization exceeds the capacity budget");
  if (is_banded()) return banded().to_dense();
  return dense();
}

Eigen::VectorXd FiniteOperator::eigenvalues(const Capacity& cap) const {
  if (size() > cap.max_dense_dim)
    throw CapacityError("dense diagonalization exceeds the capacity budget");
  if (is_banded() && banded().real) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(banded().to_dense_real(),
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(to_dense(cap), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

FiniteOperator assemble_dirichlet(const HoppingKernel& kernel, const Box& box,
                                  std::span<const double> potential, const Capacity& cap) {
  if (box.dimension != kernel.dimension())
    throw ValidationError("box dimension does not match kernel dimension");
  if (box.half_side < 0) throw ValidationError("box half-side must be nonnegative");
  const long n = box.site_count();
  if (!potential.empty() && static_cast<long>(potential.size()) != n)
    throw ValidationError("potential size does not match box site count");

  const int side = box.side();
  const bool banded_ok = kernel.is_real() && side > 2 * kernel.support_radius();

  if (banded_ok) {
    // linearized band offsets are collision-free because side > 2 R_h
    long bw = 0;
    for (const auto& c : kernel.coefficients()) {
      long delta = 0;
      for (int i = 0; i < box.dimension; ++i) delta = delta * side + c.offset[i];
      bw = std::max(bw, std::abs(delta));
    }
    if ((bw + 1) * n > cap.max_banded_entries)
      throw CapacityError("banded assembly exceeds the capacity budget");
    BandedHermitian B;
    B.n = n;
    B.bandwidth = static_cast<int>(bw);
    B.real = true;
    B.bands_re = Eigen::MatrixXd::Zero(bw + 1, n);
    for (long r = 0; r < n; ++r) {
      const LatticeVec x = box.site_at(r);
      for (const auto& c : kernel.coefficients()) {
        LatticeVec y = x;
        for (int i = 0; i < box.dimension; ++i) y[i] += c.offset[i];
        if (!box.contains(y)) continue;
        const long q = box.rank_of(y);
        if (q >= r) B.bands_re(q - r, r) = c.amplitude.real();
      }
      if (!potential.empty()) B.bands_re(0, r) += potential[r];
    }
    return FiniteOperator(box, FiniteOperator::Basis::position, std::move(B));
  }

  if (n > cap.max_dense_dim) throw CapacityError("dense assembly exceeds the capacity budget");
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
  for (long r = 0; r < n; ++r) {
    const LatticeVec x = box.site_at(r);
    for (const auto& c : kernel.coefficients()) {
      LatticeVec y = x;
      for (int i = 0; i < box.dimension; ++i) y[i] += c.offset[i];
      if (!box.contains(y)) continue;
      M(box.rank_of(y), r) = c.amplitude;
    }
    if (!potential.empty()) M(r, r) += potential[r];
  }
  return FiniteOperator(box, FiniteOperator::Basis::position, std::move(M));
}

SymbolMinima find_symbol_minima(const HoppingKernel& kernel, int grid_resolution, double tol) {
  if (grid_resolution < 8)
    throw ValidationError("minima search needs at least 8 grid points per dimension");
  const int d = kernel.dimension();
  const int res = grid_resolution;
  const long total = static_cast<long>(std::pow(static_cast<double>(res), d));

  std::vector<double> values(total);
  std::vector<double> theta(d);
  std::vector<int> idx(d);
  auto decode = [&](long r, std::vector<int>& out) {
    for (int i = d - 1; i >= 0; --i) {
      out[i] = static_cast<int>(r % res);
      r /= res;
    }
  };
  auto encode = [&](const std::vector<int>& in) {
    long r = 0;
    for (int i = 0; i < d; ++i) r = r * res + ((in[i] % res) + res) % res;
    return r;
  };
  for (long r = 0; r < total; ++r) {
    decode(r, idx);
    for (int i = 0; i < d; ++i) theta[i] = -kPi + 2.0 * kPi * idx[i] / res;
    values[r] = kernel.symbol(theta);
  }

  // grid-local minima (<= all axis neighbors, torus wraparound)
  std::vector<std::vector<double>> candidates;
  std::vector<int> nb(d);
  for (long r = 0; r < total; ++r) {
    decode(r, idx);
    bool is_min = true;
    for (int i = 0; i < d && is_min; ++i) {
      for (int s = -1; s <= 1 && is_min; s += 2) {
        nb = idx;
        nb[i] += s;
        if (values[encode(nb)] < values[r]) is_min = false;
      }
    }
    if (!is_min) continue;
    std::vector<double> t(d);
    for (int i = 0; i < d; ++i) t[i] = -kPi + 2.0 * kPi * idx[i] / res;
    candidates.push_back(t);
  }

  // Newton refinement on finite differences
  const double h = 1e-4;
  auto fd_grad_hess = [&](const std::vector<double>& t, Eigen::VectorXd& g, Eigen::MatrixXd& H) {
    for (int i = 0; i < d; ++i) {
      auto tp = t, tm = t;
      tp[i] += h;
      tm[i] -= h;
      g(i) = (kernel.symbol(tp) - kernel.symbol(tm)) / (2 * h);
      for (int j = i; j < d; ++j) {
        auto tpp = t, tpm = t, tmp = t, tmm = t;
        tpp[i] += h;
        tpp[j] += h;
        tpm[i] += h;
        tpm[j] -= h;
        tmp[i] -= h;
        tmp[j] += h;
        tmm[i] -= h;
        tmm[j] -= h;
        H(i, j) = H(j, i) =
            (kernel.symbol(tpp) - kernel.symbol(tpm) - kernel.symbol(tmp) + kernel.symbol(tmm)) /
            (4 * h * h);
      }
    }
  };

  SymbolMinima out;
  double min_val = std::numeric_limits<double>::max();
  for (auto& t : candidates) {
    Eigen::VectorXd g(d);
    Eigen::MatrixXd H(d, d);
    for (int it = 0; it < 16; ++it) {
      fd_grad_hess(t, g, H);
      if (g.norm() < 1e-12) break;
      Eigen::VectorXd step = H.ldlt().solve(g);
      if (!step.allFinite() || step.norm() > 2.0 * kPi / res) break;
      for (int i = 0; i < d; ++i) t[i] = wrap_to_pi(t[i] - step(i));
    }
    min_val = std::min(min_val, kernel.symbol(t));
  }

  // merge refined candidates that collapsed to the same point, keep only
  // global minima (within tol of the smallest value)
  const double merge_tol = std::max(tol, 1e-7);
  for (auto& t : candidates) {
    if (kernel.symbol(t) > min_val + merge_tol) continue;
    bool dup = false;
    for (const auto& p : out.points) {
      if (torus_dist2(t, p) < merge_tol * merge_tol) {
        dup = true;
        break;
      }
    }
    if (!dup) out.points.push_back(t);
  }

  for (const auto& p : out.points) {
    Eigen::VectorXd g(d);
    Eigen::MatrixXd H(d, d);
    fd_grad_hess(p, g, H);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < tol)
      throw DegeneracyError("symbol minimum has a near-singular Hessian");
    out.hessians.push_back(H);
  }

  out.min_value = min_val;

  // C with h(theta) >= C min_J |theta - theta_J|^2 over the probe grid
  double C = std::numeric_limits<double>::max();
  for (long r = 0; r < total; ++r) {
    decode(r, idx);
    for (int i = 0; i < d; ++i) theta[i] = -kPi + 2.0 * kPi * idx[i] / res;
    double d2 = std::numeric_limits<double>::max();
    for (const auto& p : out.points) d2 = std::min(d2, torus_dist2(theta, p));
    if (d2 < 1e-16) continue;
    C = std::min(C, (values[r] - min_val) / d2);
  }
  out.quadratic_constant = C;
  return out;
}

}  // namespace dilute
