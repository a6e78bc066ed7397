#include "qrotor/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "ansatz_impl.hpp"
#include "qrotor/error.hpp"

namespace qrotor {

std::string to_string(AnsatzKind kind) {
  switch (kind) {
    case AnsatzKind::CNN: return "cnn";
    case AnsatzKind::CircularRBM: return "rbm";
    case AnsatzKind::Jastrow: return "jastrow";
  }
  return "unknown";
}

AnsatzKind ansatz_kind_from_string(const std::string& name) {
  if (name == "cnn") return AnsatzKind::CNN;
  if (name == "rbm") return AnsatzKind::CircularRBM;
  if (name == "jastrow") return AnsatzKind::Jastrow;
  throw ConfigError("unknown ansatz kind '" + name + "' (expected cnn, rbm or jastrow)");
}

std::size_t ParamBlock::size() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

void Ansatz::check_sizes(std::span<const cplx> alpha, std::span<const double> theta) const {
  if (alpha.size() != num_params())
    throw ConfigError("ansatz: parameter vector has " + std::to_string(alpha.size()) +
                      " entries, layout expects " + std::to_string(num_params()));
  if (theta.size() != num_sites())
    throw ConfigError("ansatz: configuration has " + std::to_string(theta.size()) +
                      " angles, lattice has " + std::to_string(num_sites()) + " sites");
}

std::shared_ptr<const Ansatz> make_ansatz(const AnsatzSpec& spec, const Lattice& lattice) {
  switch (spec.kind) {
    case AnsatzKind::Jastrow: return std::make_shared<JastrowAnsatz>(lattice);
    case AnsatzKind::CircularRBM: return std::make_shared<RbmAnsatz>(lattice, spec.rbm);
    case AnsatzKind::CNN: return std::make_shared<CnnAnsatz>(lattice, spec.cnn);
  }
  throw ConfigError("make_ansatz: unknown kind");
}

VariationalState zero_state(std::shared_ptr<const Ansatz> model) {
  VariationalState s{std::move(model), {}};
  s.alpha.assign(s.model->num_params(), cplx{0.0, 0.0});
  return s;
}

VariationalState random_state(std::shared_ptr<const Ansatz> model, double stddev,
                              std::mt19937_64& rng) {
  VariationalState s = zero_state(std::move(model));
  std::normal_distribution<double> normal(0.0, stddev);
  for (auto& a : s.alpha) {
    const double re = normal(rng);
    const double im = normal(rng);
    a = {re, im};
  }
  return s;
}

namespace {
void check_finite(cplx v, std::span<const double> theta) {
  if (std::isfinite(v.real()) && std::isfinite(v.imag())) return;
  std::string where = "ln psi is not finite at theta = (";
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (k) where += ", ";
    where += std::to_string(theta[k]);
  }
  throw NumericalError(where + ")", "nonfinite_log_psi");
}
}  // namespace

cplx log_psi(const VariationalState& state, std::span<const double> theta) {
  const cplx v = state.model->log_psi(state.alpha, theta);
  check_finite(v, theta);
  return v;
}

std::vector<cplx> log_derivatives(const VariationalState& state, std::span<const double> theta) {
  std::vector<cplx> out(state.num_params());
  check_finite(state.model->log_derivatives(state.alpha, theta, out), theta);
  return out;
}

std::vector<double> grad_log_prob(const VariationalState& state, std::span<const double> theta) {
  std::vector<cplx> g(state.num_sites());
  state.model->angle_gradient(state.alpha, theta, g);
  std::vector<double> out(g.size());
  std::transform(g.begin(), g.end(), out.begin(), [](cplx v) { return 2.0 * v.real(); });
  return out;
}

double bond_energy(const Lattice& lattice, std::span<const double> theta, double J) {
  double e = 0.0;
  for (const auto& [k, l] : lattice.bonds()) e += std::cos(theta[k] - theta[l]);
  return -J * e;
}

cplx local_energy(const VariationalState& state, std::span<const double> theta, double g,
                  double J) {
  AngleDerivatives d;
  state.model->angle_derivatives(state.alpha, theta, d);
  check_finite(d.log_psi, theta);
  cplx lap{0.0, 0.0};
  for (std::size_t k = 0; k < d.grad.size(); ++k) lap += d.hess_diag[k] + d.grad[k] * d.grad[k];
  return -0.5 * g * J * lap + bond_energy(state.model->lattice(), theta, J);
}

bool log_psi_periodicity_check(const VariationalState& state, std::span<const double> theta,
                               std::size_t k) {
  std::vector<double> shifted(theta.begin(), theta.end());
  shifted.at(k) += kTwoPi;
  const cplx a = state.model->log_psi(state.alpha, theta);
  const cplx b = state.model->log_psi(state.alpha, shifted);
  // Compare psi(shifted)/psi(theta) with 1 so that a 2 pi i jump in the
  // imaginary part is not reported as a violation.
  const double tol = 1e-12 * std::max(1.0, std::abs(a));
  return std::abs(std::exp(b - a) - 1.0) <= tol;
}

}  // namespace qrotor
