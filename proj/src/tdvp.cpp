#include "qrotor/tdvp.hpp"

#include <algorithm>
#include <cmath>

#include "qrotor/error.hpp"
#include "qrotor/kernels.hpp"
#include "qrotor/parallel.hpp"

namespace qrotor {

QgtEstimate estimate_qgt(std::span<const cplx> O, std::span<const cplx> e_local,
                         std::span<const double> weights, std::size_t p) {
  const std::size_t n = e_local.size();
  if (n < 2) throw ConfigError("qgt: need at least two samples");
  if (O.size() != n * p) throw ConfigError("qgt: O buffer does not match n x P");
  if (!weights.empty() && weights.size() != n) throw ConfigError("qgt: weight count mismatch");

  std::vector<double> w(weights.begin(), weights.end());
  if (w.empty()) w.assign(n, 1.0 / static_cast<double>(n));

  QgtEstimate q;
  q.n_samples = n;
  q.e_local.assign(e_local.begin(), e_local.end());
  for (std::size_t s = 0; s < n; ++s) q.e_mean += w[s] * e_local[s];

  std::vector<cplx> mean_o(p, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t mu = 0; mu < p; ++mu) mean_o[mu] += w[s] * O[s * p + mu];

  std::vector<cplx> centered(n * p), de(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t mu = 0; mu < p; ++mu) centered[s * p + mu] = O[s * p + mu] - mean_o[mu];
    de[s] = e_local[s] - q.e_mean;
    q.e_var += w[s] * std::norm(de[s]);
  }

  const auto& kt = kernels::active();
  std::vector<cplx> S(p * p, 0.0), g(p, 0.0);
  kt.herk_upper(centered.data(), w.data(), n, p, S.data());
  kt.gemv_conj(centered.data(), w.data(), de.data(), n, p, g.data());

  q.S.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t mu = 0; mu < p; ++mu) {
    q.S(mu, mu) = cplx(S[mu * p + mu].real(), 0.0);
    for (std::size_t nu = mu + 1; nu < p; ++nu) {
      q.S(mu, nu) = S[mu * p + nu];
      q.S(nu, mu) = std::conj(S[mu * p + nu]);
    }
  }
  q.g = Eigen::Map<const Eigen::VectorXcd>(g.data(), static_cast<Eigen::Index>(p));
  return q;
}

QgtEstimate estimate_qgt(const VariationalState& state, const SampleSet& samples, double g,
                         double J, std::size_t workers) {
  const std::size_t n = samples.size(), p = state.num_params();
  std::vector<cplx> O(n * p), e(n);
  parallel_for(n, workers, [&](std::size_t s) {
    const auto theta = samples.row(s);
    state.model->log_derivatives(state.alpha, theta,
                                 std::span<cplx>(O.data() + s * p, p));
    e[s] = local_energy(state, theta, g, J);
  });
  return estimate_qgt(O, e, samples.weights, p);
}

RegularizationPolicy RegularizationPolicy::for_dims(std::size_t num_dims) {
  if (num_dims == 1) return {1e-5, 1e-4};
  return {1e-4, 1e-2};
}

void RegularizationPolicy::validate() const {
  if (!(a_c > 0.0) || !(r_c > 0.0)) throw ConfigError("regularization: a_c and r_c must be > 0");
}

double cutoff_factor(double sigma2, double lambda2) {
  if (!(sigma2 > 0.0)) return 0.0;
  const double r = lambda2 / sigma2;
  const double r3 = r * r * r;
  return 1.0 / (1.0 + r3 * r3);
}

double adaptive_lambda(std::span<const double> spectrum, const RegularizationPolicy& policy) {
  if (spectrum.empty()) throw ConfigError("adaptive_lambda: empty spectrum");
  const double top = *std::max_element(spectrum.begin(), spectrum.end());
  return std::max(policy.a_c, policy.r_c * top);
}

Eigensystem hermitian_eigensystem(const Eigen::MatrixXcd& S) {
  if (S.rows() != S.cols()) throw ConfigError("qgt: S must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(S);
  if (es.info() != Eigen::Success)
    throw NumericalError("qgt: Hermitian eigendecomposition failed", "eig_failure");
  Eigensystem out{es.eigenvectors(), es.eigenvalues()};
  for (Eigen::Index i = 0; i < out.sigma2.size(); ++i)
    if (!std::isfinite(out.sigma2[i]))
      throw NumericalError("qgt: non-finite eigenvalue", "eig_failure");
  return out;
}

RegularizedInverse regularize(const Eigensystem& eig, double lambda2) {
  RegularizedInverse r;
  r.U = eig.U;
  r.sigma2 = eig.sigma2;
  r.lambda2 = lambda2;
  r.inv_diag.resize(eig.sigma2.size());
  for (Eigen::Index i = 0; i < eig.sigma2.size(); ++i) {
    const double s2 = std::max(eig.sigma2[i], 0.0);
    const double f = cutoff_factor(s2, lambda2);
    r.rho += f;
    r.inv_diag[i] = f > 0.0 ? f / s2 : 0.0;
  }
  return r;
}

RegularizedInverse regularized_pseudoinverse(const Eigen::MatrixXcd& S, double lambda2) {
  return regularize(hermitian_eigensystem(S), lambda2);
}

Eigen::VectorXcd RegularizedInverse::apply(const Eigen::VectorXcd& x) const {
  Eigen::VectorXcd y = U.adjoint() * x;
  y.array() *= inv_diag.array().cast<cplx>();
  return U * y;
}

Eigen::MatrixXcd RegularizedInverse::matrix() const {
  return U * inv_diag.cast<cplx>().asDiagonal() * U.adjoint();
}

double RegularizedInverse::quadratic_form(const Eigen::VectorXcd& x) const {
  const Eigen::VectorXcd y = U.adjoint() * x;
  return (y.array().abs2() * inv_diag.array()).sum();
}

ResidualR2 residual_r2(const QgtEstimate& qgt, const RegularizedInverse& inv) {
  ResidualR2 out;
  if (!(qgt.e_var > 0.0)) return out;
  out.raw = 1.0 - inv.quadratic_form(qgt.g) / qgt.e_var;
  out.r2 = std::clamp(out.raw, 0.0, 1.0);
  out.clamped = out.r2 != out.raw;
  return out;
}

TdvpSolution tdvp_rhs(const QgtEstimate& qgt, const RegularizationPolicy& policy, TimeMode mode) {
  const Eigensystem eig = hermitian_eigensystem(qgt.S);
  std::vector<double> spec(eig.sigma2.data(), eig.sigma2.data() + eig.sigma2.size());
  const RegularizedInverse inv = regularize(eig, adaptive_lambda(spec, policy));

  TdvpSolution sol;
  sol.lambda2 = inv.lambda2;
  sol.rho = inv.rho;
  sol.sigma2_min = eig.sigma2.minCoeff();
  sol.sigma2_max = eig.sigma2.maxCoeff();
  const Eigen::VectorXcd x = inv.apply(qgt.g);
  sol.alpha_dot = mode == TimeMode::Real ? Eigen::VectorXcd(cplx(0.0, -1.0) * x)
                                         : Eigen::VectorXcd(-x);
  sol.r2 = residual_r2(qgt, inv);
  return sol;
}

}  // namespace qrotor
