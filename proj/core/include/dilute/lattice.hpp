#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dilute/errors.hpp"

namespace dilute {

using Complex = std::complex<double>;

constexpr int kMaxDim = 3;

// Lattice vector; only the first `dimension` components of a kernel/box are
// meaningful.
using LatticeVec = std::array<int, kMaxDim>;

inline LatticeVec lattice_vec(int x, int y = 0, int z = 0) { return {x, y, z}; }

double euclidean_norm(const LatticeVec& v, int dimension);

// Cube of side 2L+1 centered at `center`.
struct Box {
  LatticeVec center{0, 0, 0};
  int half_side = 0;
  int dimension = 1;

  int side() const { return 2 * half_side + 1; }
  long site_count() const {
    long n = 1;
    for (int k = 0; k < dimension; ++k) n *= side();
    return n;
  }
  // Lexicographic rank <-> multi-index over box coordinates. Site ordering is
  // the RNG-consumption order, so it is part of the reproducibility contract.
  LatticeVec site_at(long rank) const;
  long rank_of(const LatticeVec& site) const;
  bool contains(const LatticeVec& site) const;
};

// Size guards for dense/banded materialization.
struct Capacity {
  long max_dense_dim = 8192;        // largest dense matrix edge
  long max_banded_entries = 1l << 28;  // (bandwidth+1) * n
};

// Finitely supported translation-invariant hopping kernel (h_k) with an
// exponential-decay certificate |h_k| <= (1/c) e^{-c|k|}.
//
// Hermitian symmetry h_{-k} = conj(h_k) is enforced at construction, and the
// symbol is shifted so that min_theta h(theta) = 0; the shift applied to h_0
// is recorded in spectral_shift().
class HoppingKernel {
 public:
  struct Coefficient {
    LatticeVec offset{0, 0, 0};
    Complex amplitude{0.0, 0.0};
  };

  HoppingKernel(int dimension, std::vector<Coefficient> coefficients, double decay_constant,
                bool shift_to_band_bottom = true);

  // Nearest-neighbor negative Laplacian: h_0 = 2d, h_{+-e_i} = -1. The
  // default decay constant scales so the certificate admits h_0 = 2d.
  static HoppingKernel laplacian(int dimension, double decay_constant = 0.0);

  static HoppingKernel from_json_file(const std::string& path);
  static HoppingKernel from_json_text(const std::string& text);

  int dimension() const { return dimension_; }
  double decay_constant() const { return decay_constant_; }
  double spectral_shift() const { return spectral_shift_; }
  const std::vector<Coefficient>& coefficients() const { return coefficients_; }
  bool is_real() const { return real_; }
  int support_radius() const { return support_radius_; }  // max |k|_inf over stored offsets

  // sum_k |h_k| and sum_k |k| |h_k| (a Lipschitz bound for the symbol)
  double amplitude_sum() const { return amplitude_sum_; }
  double symbol_lipschitz_bound() const { return lipschitz_; }
  double symbol_max() const;  // max over a probe grid (cached)

  // Symbol h(theta) = sum_k h_k e^{i k.theta}. Throws ValidationError if the
  // imaginary residue exceeds 1e-12 * sum|h_k|.
  double symbol(std::span<const double> theta) const;
  double symbol(double theta) const;  // d=1 convenience

 private:
  void validate_and_normalize(bool shift);

  int dimension_ = 1;
  std::vector<Coefficient> coefficients_;
  double decay_constant_ = 1.0;
  double spectral_shift_ = 0.0;
  bool real_ = true;
  int support_radius_ = 0;
  double amplitude_sum_ = 0.0;
  double lipschitz_ = 0.0;
  mutable double symbol_max_ = -1.0;
};

// Symmetric/Hermitian band storage: bands(b, j) = A(j+b, j), b = 0..bandwidth.
struct BandedHermitian {
  long n = 0;
  int bandwidth = 0;
  bool real = true;
  Eigen::MatrixXd bands_re;  // (bandwidth+1) x n
  Eigen::MatrixXd bands_im;  // empty when real

  Eigen::MatrixXcd to_dense() const;
  Eigen::MatrixXd to_dense_real() const;  // requires real
};

// Hermitian matrix of a Dirichlet box restriction or a Floquet fiber, tagged
// with its geometry and basis.
class FiniteOperator {
 public:
  enum class Basis { position, momentum };

  FiniteOperator(Box box, Basis basis, BandedHermitian banded);
  FiniteOperator(Box box, Basis basis, Eigen::MatrixXcd dense);

  long size() const;
  const Box& box() const { return box_; }
  Basis basis() const { return basis_; }
  bool is_banded() const { return std::holds_alternative<BandedHermitian>(storage_); }
  const BandedHermitian& banded() const { return std::get<BandedHermitian>(storage_); }
  const Eigen::MatrixXcd& dense() const { return std::get<Eigen::MatrixXcd>(storage_); }

  Eigen::MatrixXcd to_dense(const Capacity& cap = {}) const;
  // Ascending eigenvalues by dense Hermitian diagonalization.
  Eigen::VectorXd eigenvalues(const Capacity& cap = {}) const;

 private:
  Box box_;
  Basis basis_;
  std::variant<BandedHermitian, Eigen::MatrixXcd> storage_;
};

// Plain truncation Pi_Box H Pi_Box (Dirichlet, no boundary re-weighting),
// plus an optional diagonal potential given in lexicographic site order.
FiniteOperator assemble_dirichlet(const HoppingKernel& kernel, const Box& box,
                                  std::span<const double> potential = {},
                                  const Capacity& cap = {});

// Local minima of the symbol with Hessians (central finite differences) and
// the constant C such that h(theta) >= C min_J |theta - theta_J|^2 on the
// probed grid.
struct SymbolMinima {
  std::vector<std::vector<double>> points;           // each of length d, in [-pi, pi)
  std::vector<Eigen::MatrixXd> hessians;             // d x d, positive definite
  double quadratic_constant = 0.0;
  double min_value = 0.0;                            // min h over the grid (0 after shift)
};

SymbolMinima find_symbol_minima(const HoppingKernel& kernel, int grid_resolution, double tol);

}  // namespace dilute
