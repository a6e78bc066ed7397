#pragma once
// Test-side reference computations. Nothing here calls the derivative code
// under test: everything is built from log_psi values or from scratch.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "qrotor/ansatz.hpp"
#include "qrotor/lattice.hpp"

namespace oracle {

using cplx = std::complex<double>;

// Fourth-order central stencils.
inline constexpr double kStep = 1e-3;

template <class F>
cplx d1(F&& f, double h = kStep) {
  return (-f(2 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2 * h)) / (12.0 * h);
}

template <class F>
cplx d2(F&& f, double h = kStep) {
  return (-f(2 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2 * h)) / (12.0 * h * h);
}

// ln psi is holomorphic in alpha, so d/d alpha = d/d Re alpha.
inline std::vector<cplx> fd_log_derivatives(const qrotor::VariationalState& s,
                                            const std::vector<double>& theta) {
  std::vector<cplx> out(s.num_params());
  for (std::size_t mu = 0; mu < out.size(); ++mu) {
    out[mu] = d1([&](double h) {
      auto a = s.alpha;
      a[mu] += h;
      return s.model->log_psi(a, theta);
    });
  }
  return out;
}

inline std::vector<cplx> fd_angle_gradient(const qrotor::VariationalState& s,
                                           const std::vector<double>& theta) {
  std::vector<cplx> out(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k)
    out[k] = d1([&](double h) {
      auto t = theta;
      t[k] += h;
      return s.model->log_psi(s.alpha, t);
    });
  return out;
}

// Kinetic part: psi''/psi = (ln psi)'' + ((ln psi)')^2 per site, both from
// stencils on ln psi so large amplitudes do not overflow.
inline cplx fd_laplacian_over_psi(const qrotor::VariationalState& s,
                                  const std::vector<double>& theta) {
  cplx acc = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    auto f = [&](double h) {
      auto t = theta;
      t[k] += h;
      return s.model->log_psi(s.alpha, t);
    };
    const cplx g = d1(f);
    acc += d2(f) + g * g;
  }
  return acc;
}

// E_L written out from its definition with the finite-difference Laplacian.
inline cplx fd_local_energy(const qrotor::VariationalState& s, const std::vector<double>& theta,
                            double g, double J) {
  cplx e = -0.5 * g * J * fd_laplacian_over_psi(s, theta);
  for (const auto& [k, l] : s.model->lattice().bonds()) e -= J * std::cos(theta[k] - theta[l]);
  return e;
}

template <class A, class B>
double rel_error(const A& a, const B& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(cplx(a[i]) - cplx(b[i]));
    den += std::norm(cplx(b[i]));
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

inline std::vector<double> random_angles(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-qrotor::kPi, qrotor::kPi);
  std::vector<double> t(n);
  for (double& x : t) x = u(rng);
  return t;
}

// Bond operator element <m'| (L+_k L-_l + L-_k L+_l)/2 |m> written from the
// Kronecker-delta formula, for basis vectors given as digit lists.
inline double bond_element(const std::vector<int>& mp, const std::vector<int>& m, int k, int l) {
  for (std::size_t j = 0; j < m.size(); ++j)
    if (static_cast<int>(j) != k && static_cast<int>(j) != l && mp[j] != m[j]) return 0.0;
  double v = 0.0;
  if (mp[k] == m[k] + 1 && mp[l] == m[l] - 1) v += 0.5;
  if (mp[k] == m[k] - 1 && mp[l] == m[l] + 1) v += 0.5;
  return v;
}

// Mixed-radix digits, site 0 most significant, values in [-M, M].
inline std::vector<int> digits(std::size_t index, std::size_t n, int M) {
  std::vector<int> m(n);
  const std::size_t d = static_cast<std::size_t>(2 * M + 1);
  for (std::size_t j = n; j-- > 0;) {
    m[j] = static_cast<int>(index % d) - M;
    index /= d;
  }
  return m;
}

}  // namespace oracle
