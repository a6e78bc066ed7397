#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "qrotor/ansatz.hpp"
#include "qrotor/lattice.hpp"
#include "qrotor/sampling.hpp"

namespace qrotor {

inline constexpr std::size_t kMaxBasisDim = 200000;

/// Product basis |m_1, ..., m_N>, m_k in [-M, M]. Site 0 is the most
/// significant digit of the flat index, matching the lattice site order.
class TruncatedBasis {
 public:
  TruncatedBasis(std::size_t n_sites, int M);

  std::size_t n_sites() const { return n_sites_; }
  int cutoff() const { return M_; }
  int local_dim() const { return 2 * M_ + 1; }
  std::size_t dim() const { return dim_; }

  std::size_t encode(std::span<const int> m) const;
  std::vector<int> decode(std::size_t index) const;
  /// m_k of basis state `index`.
  int quantum_number(std::size_t index, std::size_t k) const;
  /// Stride of site k in the flat index.
  std::size_t stride(std::size_t k) const { return strides_[k]; }

 private:
  std::size_t n_sites_;
  int M_;
  std::size_t dim_;
  std::vector<std::size_t> strides_;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using DenseState = Eigen::VectorXcd;

/// sum over bonds of n_k . n_l = (L+_k L-_l + L-_k L+_l) / 2, truncated
/// (L+|M> = L-|-M> = 0).
SparseMatrix build_bond_operator(const TruncatedBasis& basis, const Lattice& lattice);

/// H = (gJ/2) sum_k m_k^2 - J sum_<kl> n_k . n_l.
SparseMatrix build_hamiltonian(const TruncatedBasis& basis, const Lattice& lattice, double g,
                               double J);

/// All m_k = 0, normalized.
DenseState initial_product_state(const TruncatedBasis& basis);

/// e^{-iHt} for a fixed H. Small problems are diagonalized once; larger ones
/// use restarted Lanczos (Krylov) propagation on the sparse matrix.
class ExactEvolver {
 public:
  explicit ExactEvolver(SparseMatrix H, std::size_t dense_limit = 4000);

  DenseState evolve(const DenseState& c0, double t) const;
  bool dense() const { return dense_; }
  const SparseMatrix& hamiltonian() const { return H_; }
  /// Eigenvalues (dense mode only), ascending.
  const Eigen::VectorXd& eigenvalues() const { return evals_; }
  const Eigen::MatrixXd& eigenvectors() const { return evecs_; }

 private:
  DenseState krylov_step(const DenseState& v, double tau) const;

  SparseMatrix H_;
  bool dense_;
  Eigen::VectorXd evals_;
  Eigen::MatrixXd evecs_;
  double norm_bound_ = 0.0;
};

/// Lowest eigenpair of H (dense for small dims, Lanczos otherwise).
std::pair<double, DenseState> ground_state(const SparseMatrix& H, std::size_t dense_limit = 4000);

struct DenseConversion {
  DenseState coefficients;   ///< normalized
  double truncated_mass = 0.0;  ///< weight with some |m_k| > M (discarded)
  double top_shell_mass = 0.0;  ///< weight on the highest grid frequency
  std::vector<std::string> warnings;
};

/// c_m proportional to sum over a Q^N grid of psi(theta) e^{+i m . theta}, via
/// one DFT per site axis. Needs Q >= 2M+1 and Q^N <= 1e7.
DenseConversion vqs_to_dense(const VariationalState& state, const TruncatedBasis& basis,
                             std::size_t Q);

/// psi(theta) = (2 pi)^{-N/2} sum_m c_m e^{-i m . theta} on a Q^N grid, as a
/// sample set weighted by |psi|^2.
SampleSet dense_to_grid(const DenseState& c, const TruncatedBasis& basis, std::size_t Q);

/// <cos theta_k> and <sin theta_k> with cos = (L+ + L-)/2, sin = i(L+ - L-)/2.
std::pair<double, double> site_direction(const DenseState& c, const TruncatedBasis& basis,
                                         std::size_t k);

struct ExactObservables {
  double energy = 0.0;
  double e_pot = 0.0;
  double mag_x = 0.0;
  double mag_y = 0.0;
};

/// H and the bond operator B are the matrices from build_hamiltonian and
/// build_bond_operator on the same basis and lattice.
ExactObservables exact_observables(const DenseState& c, const TruncatedBasis& basis,
                                   const SparseMatrix& H, const SparseMatrix& B, double J);

/// |<a|b>|^2 / (<a|a><b|b>)
double exact_fidelity(const DenseState& a, const DenseState& b);

}  // namespace qrotor
