#include <cmath>

#include "ansatz_impl.hpp"

namespace qrotor {

JastrowAnsatz::JastrowAnsatz(const Lattice& lattice)
    : Ansatz(lattice), num_params_(lattice.num_sites() * (lattice.num_sites() - 1) / 2) {}

std::vector<ParamBlock> JastrowAnsatz::layout() const {
  return {ParamBlock{"w_pairs", {static_cast<int>(num_params_)}, 0}};
}

std::size_t JastrowAnsatz::pair_index(std::size_t i, std::size_t j) const {
  // Row i of the strict upper triangle starts after i*(2N-i-1)/2 entries.
  const std::size_t n = num_sites();
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

cplx JastrowAnsatz::log_psi(std::span<const cplx> alpha, std::span<const double> theta) const {
  check_sizes(alpha, theta);
  const std::size_t n = num_sites();
  cplx acc{0.0, 0.0};
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) acc += alpha[p++] * std::cos(theta[i] - theta[j]);
  return acc;
}

cplx JastrowAnsatz::log_derivatives(std::span<const cplx> alpha, std::span<const double> theta,
                                    std::span<cplx> out) const {
  check_sizes(alpha, theta);
  const std::size_t n = num_sites();
  cplx acc{0.0, 0.0};
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++p) {
      const double c = std::cos(theta[i] - theta[j]);
      out[p] = c;
      acc += alpha[p] * c;
    }
  }
  return acc;
}

cplx JastrowAnsatz::angle_gradient(std::span<const cplx> alpha, std::span<const double> theta,
                                   std::span<cplx> grad) const {
  check_sizes(alpha, theta);
  const std::size_t n = num_sites();
  std::fill(grad.begin(), grad.end(), cplx{0.0, 0.0});
  cplx acc{0.0, 0.0};
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++p) {
      const double d = theta[i] - theta[j];
      acc += alpha[p] * std::cos(d);
      const cplx t = alpha[p] * std::sin(d);
      grad[i] -= t;
      grad[j] += t;
    }
  }
  return acc;
}

void JastrowAnsatz::angle_derivatives(std::span<const cplx> alpha, std::span<const double> theta,
                                      AngleDerivatives& out) const {
  check_sizes(alpha, theta);
  const std::size_t n = num_sites();
  out.grad.assign(n, cplx{0.0, 0.0});
  out.hess_diag.assign(n, cplx{0.0, 0.0});
  cplx acc{0.0, 0.0};
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++p) {
      const double d = theta[i] - theta[j];
      const cplx wc = alpha[p] * std::cos(d);
      const cplx ws = alpha[p] * std::sin(d);
      acc += wc;
      out.grad[i] -= ws;
      out.grad[j] += ws;
      out.hess_diag[i] -= wc;
      out.hess_diag[j] -= wc;
    }
  }
  out.log_psi = acc;
}

}  // namespace qrotor
