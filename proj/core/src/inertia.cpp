#include "dilute/inertia.hpp"

#include <cmath>
#include <complex>
#include <limits>

namespace dilute {

namespace {

double nudge(double energy) { return energy + 1e-10 * (1.0 + std::abs(energy)); }

// One LDL^* sweep of (A - E) restricted to the band. Returns the number of
// negative pivots, or -1 if a pivot fell below the breakdown threshold.
long ldl_negative_pivots_real(const BandedHermitian& A, double energy, double breakdown) {
  const long n = A.n;
  const int bw = A.bandwidth;
  Eigen::MatrixXd W = A.bands_re;
  for (long j = 0; j < n; ++j) W(0, j) -= energy;
  long neg = 0;
  for (long j = 0; j < n; ++j) {
    const double d = W(0, j);
    if (std::abs(d) < breakdown) return -1;
    if (d < 0) ++neg;
    const int kmax = static_cast<int>(std::min<long>(bw, n - 1 - j));
    for (int c = 1; c <= kmax; ++c) {
      const double f = W(c, j) / d;
      for (int r = c; r <= kmax; ++r) W(r - c, j + c) -= f * W(r, j);
    }
  }
  return neg;
}

long ldl_negative_pivots_complex(const BandedHermitian& A, double energy, double breakdown) {
  using C = std::complex<double>;
  const long n = A.n;
  const int bw = A.bandwidth;
  Eigen::MatrixXcd W(bw + 1, n);
  for (long j = 0; j < n; ++j)
    for (int b = 0; b <= bw; ++b)
      W(b, j) = C(A.bands_re(b, j), A.real ? 0.0 : A.bands_im(b, j));
  for (long j = 0; j < n; ++j) W(0, j) -= energy;
  long neg = 0;
  for (long j = 0; j < n; ++j) {
    const double d = W(0, j).real();  // diagonal of a Hermitian factorization stays real
    if (std::abs(d) < breakdown) return -1;
    if (d < 0) ++neg;
    const int kmax = static_cast<int>(std::min<long>(bw, n - 1 - j));
    for (int c = 1; c <= kmax; ++c) {
      const C f = std::conj(W(c, j)) / d;
      for (int r = c; r <= kmax; ++r) W(r - c, j + c) -= f * W(r, j);
    }
  }
  return neg;
}

double band_scale(const BandedHermitian& A) {
  double s = A.bands_re.cwiseAbs().maxCoeff();
  if (!A.real && A.bands_im.size() > 0) s = std::max(s, A.bands_im.cwiseAbs().maxCoeff());
  return s;
}

}  // namespace

CountResult count_below_banded(const BandedHermitian& A, double energy) {
  CountResult res;
  res.method = CountResult::Method::banded_ldl;
  const double scale = band_scale(A) + std::abs(energy) + 1.0;
  const double breakdown = 1e-13 * scale;
  double e = energy;
  for (int attempt = 0; attempt < 4; ++attempt) {
    const long neg = A.real ? ldl_negative_pivots_real(A, e, breakdown)
                            : ldl_negative_pivots_complex(A, e, breakdown);
    if (neg >= 0) {
      res.count = neg;
      res.effective_energy = e;
      res.nudged = attempt > 0;
      return res;
    }
    e = nudge(e);
  }
  throw SingularityError("inertia count kept hitting near-singular pivots", 0.0);
}

CountResult count_below_tridiagonal(std::span<const double> diag, std::span<const double> offdiag,
                                    double energy) {
  CountResult res;
  res.method = CountResult::Method::banded_ldl;
  const long n = static_cast<long>(diag.size());
  double scale = std::abs(energy) + 1.0;
  // cheap scale probe; exact magnitude is uncritical for the breakdown guard
  if (n > 0) scale += std::abs(diag[0]) + (n > 1 ? std::abs(offdiag[0]) : 0.0);
  const double breakdown = 1e-13 * scale;

  double e = energy;
  for (int attempt = 0; attempt < 4; ++attempt) {
    long neg = 0;
    double d = 1.0;
    bool ok = true;
    for (long i = 0; i < n; ++i) {
      const double b = i > 0 ? offdiag[i - 1] : 0.0;
      d = (diag[i] - e) - (i > 0 ? b * b / d : 0.0);
      if (std::abs(d) < breakdown) {
        ok = false;
        break;
      }
      if (d < 0) ++neg;
    }
    if (ok) {
      res.count = neg;
      res.effective_energy = e;
      res.nudged = attempt > 0;
      return res;
    }
    e = nudge(e);
  }
  throw SingularityError("Sturm count kept hitting near-singular pivots", 0.0);
}

CountResult count_below(const FiniteOperator& op, double energy, const CountOptions& opts) {
  const long n = op.size();
  const bool use_dense =
      !opts.force_banded && (opts.force_dense || n <= opts.dense_threshold || !op.is_banded());
  if (!use_dense) {
    try {
      return count_below_banded(op.banded(), energy);
    } catch (const SingularityError&) {
      // pathological pivot sequence: fall back to the unconditionally stable
      // dense path when the matrix fits
      if (n > opts.capacity.max_dense_dim) throw;
    }
  }
  {
    const Eigen::VectorXd evs = op.eigenvalues(opts.capacity);
    CountResult res;
    res.method = CountResult::Method::dense;
    double e = energy;
    // keep the boundary semantics of the factorization path: nudge off
    // eigenvalues that sit numerically on the threshold
    const double scale = 1.0 + std::abs(energy);
    for (int attempt = 0; attempt < 4; ++attempt) {
      bool boundary = false;
      long count = 0;
      for (long i = 0; i < n; ++i) {
        if (std::abs(evs(i) - e) < 1e-12 * scale) {
          boundary = true;
          break;
        }
        if (evs(i) <= e) ++count;
      }
      if (!boundary) {
        res.count = count;
        res.effective_energy = e;
        res.nudged = attempt > 0;
        return res;
      }
      e = nudge(e);
    }
    throw SingularityError("energy pinned to an eigenvalue after repeated nudges", 0.0);
  }
}

}  // namespace dilute
