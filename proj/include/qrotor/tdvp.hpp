#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qrotor/ansatz.hpp"
#include "qrotor/sampling.hpp"

namespace qrotor {

/// Sampled quantum geometric tensor, force and energy statistics. All
/// averages divide by the (weighted) sample count, not n - 1.
struct QgtEstimate {
  Eigen::MatrixXcd S;
  Eigen::VectorXcd g;
  cplx e_mean{0.0, 0.0};
  double e_var = 0.0;  ///< <|E_L - <E_L>|^2>
  std::size_t n_samples = 0;
  std::vector<cplx> e_local;  ///< per-sample E_L in sample order
};

/// Core reduction from precomputed rows. O is row-major (n x P). Empty
/// weights mean 1/n each; otherwise they must sum to 1.
QgtEstimate estimate_qgt(std::span<const cplx> O, std::span<const cplx> e_local,
                         std::span<const double> weights, std::size_t n_params);

/// Evaluates O and E_L on every sample (in parallel over `workers`) and
/// reduces them.
QgtEstimate estimate_qgt(const VariationalState& state, const SampleSet& samples, double g,
                         double J, std::size_t workers = 1);

struct RegularizationPolicy {
  double a_c = 1e-4;
  double r_c = 1e-2;
  static constexpr int exponent = 6;

  /// Defaults for 1D chains (1e-5, 1e-4) and 2D lattices (1e-4, 1e-2).
  static RegularizationPolicy for_dims(std::size_t num_dims);
  void validate() const;
};

/// Smooth cutoff f = 1 / (1 + (lambda2 / sigma2)^6); zero for sigma2 <= 0.
double cutoff_factor(double sigma2, double lambda2);

/// lambda2 = max(a_c, r_c * max sigma2).
double adaptive_lambda(std::span<const double> spectrum, const RegularizationPolicy& policy);

/// U diag(f(sigma2) / sigma2) U^H, with negative eigenvalues clamped to 0.
struct RegularizedInverse {
  Eigen::MatrixXcd U;
  Eigen::VectorXd sigma2;    ///< eigenvalues as returned, ascending (before clamping)
  Eigen::VectorXd inv_diag;  ///< f(sigma2) / sigma2 per eigenvalue
  double lambda2 = 0.0;
  double rho = 0.0;  ///< effective rank, sum of f

  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
  Eigen::MatrixXcd matrix() const;
  /// x^H S_reg^-1 x
  double quadratic_form(const Eigen::VectorXcd& x) const;
};

/// Full Hermitian eigendecomposition of S followed by the smooth cutoff.
RegularizedInverse regularized_pseudoinverse(const Eigen::MatrixXcd& S, double lambda2);

/// Spectrum only, for choosing lambda2 before the inverse is formed.
struct Eigensystem {
  Eigen::MatrixXcd U;
  Eigen::VectorXd sigma2;
};
Eigensystem hermitian_eigensystem(const Eigen::MatrixXcd& S);
RegularizedInverse regularize(const Eigensystem& eig, double lambda2);

enum class TimeMode { Real, Imaginary };

struct ResidualR2 {
  double r2 = 0.0;
  double raw = 0.0;  ///< before clamping to [0, 1]
  bool clamped = false;
};

/// r^2 = 1 - g^H S_reg^-1 g / Var H, clamped to [0, 1]; 0 when Var H = 0.
ResidualR2 residual_r2(const QgtEstimate& qgt, const RegularizedInverse& inv);

struct TdvpSolution {
  Eigen::VectorXcd alpha_dot;
  double lambda2 = 0.0;
  double rho = 0.0;
  double sigma2_min = 0.0;
  double sigma2_max = 0.0;
  ResidualR2 r2;
};

/// Real time: alpha_dot = -i S_reg^-1 g. Imaginary time: alpha_dot = -S_reg^-1 g.
/// lambda2 chosen adaptively from the spectrum of S.
TdvpSolution tdvp_rhs(const QgtEstimate& qgt, const RegularizationPolicy& policy, TimeMode mode);

}  // namespace qrotor
