#pragma once

#include "dilute/lattice.hpp"

namespace dilute {

struct CountResult {
  long count = 0;            // eigenvalues <= effective_energy
  double effective_energy = 0.0;
  bool nudged = false;       // energy was perturbed off a near-eigenvalue
  enum class Method { dense, banded_ldl } method = Method::dense;
};

struct CountOptions {
  long dense_threshold = 500;  // full diagonalization at or below this size
  Capacity capacity;
  bool force_banded = false;   // test hook: use the factorization path regardless of size
  bool force_dense = false;
};

// Number of eigenvalues <= E. Dense Hermitian diagonalization below the size
// threshold, otherwise LDL^* inertia of the shifted band matrix (Sylvester).
// When the shift lands within ~1e-12 of an eigenvalue the energy is nudged by
// +1e-10 (1+|E|) and the nudge is recorded.
CountResult count_below(const FiniteOperator& op, double energy, const CountOptions& opts = {});

// Inertia count on raw band storage (no FiniteOperator wrapper).
CountResult count_below_banded(const BandedHermitian& A, double energy);

// Streaming Sturm count for a real tridiagonal (diag, offdiag) pair; offdiag
// has size n-1. This is the d=1 nearest-neighbor hot path.
CountResult count_below_tridiagonal(std::span<const double> diag, std::span<const double> offdiag,
                                    double energy);

}  // namespace dilute
