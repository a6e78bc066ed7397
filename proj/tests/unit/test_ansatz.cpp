#include "doctest.h"

#include <random>

#include "../support/oracles.hpp"
#include "qrotor/error.hpp"
#include "qrotor/rng.hpp"

using namespace qrotor;

namespace {

struct Case {
  std::string name;
  AnsatzSpec spec;
  std::vector<int> dims;
  std::vector<bool> periodic;
};

std::vector<Case> cases() {
  std::vector<Case> out;
  AnsatzSpec cnn;
  out.push_back({"cnn 1d", cnn, {5}, {true}});
  cnn.cnn = {3, 2, 3, 3};
  out.push_back({"cnn deep 2d", cnn, {3, 3}, {true, false}});
  AnsatzSpec rbm;
  rbm.kind = AnsatzKind::CircularRBM;
  out.push_back({"rbm dense", rbm, {4}, {false}});
  rbm.rbm.hidden = 6;
  rbm.rbm.visible_bias = false;
  out.push_back({"rbm no visible bias", rbm, {3}, {true}});
  AnsatzSpec conv = rbm;
  conv.rbm = {0, true, 2, 3, true, true};
  out.push_back({"rbm conv 2d", conv, {3, 3}, {true, true}});
  AnsatzSpec jas;
  jas.kind = AnsatzKind::Jastrow;
  out.push_back({"jastrow", jas, {2, 3}, {false, false}});
  return out;
}

}  // namespace

TEST_CASE("ansatz derivatives match finite differences") {
  for (const Case& c : cases()) {
    CAPTURE(c.name);
    auto model = make_ansatz(c.spec, build_lattice(c.dims, c.periodic));
    auto rng = keyed_rng(11, {1});
    for (int probe = 0; probe < 5; ++probe) {
      const VariationalState s = random_state(model, 0.3, rng);
      const auto theta = oracle::random_angles(s.num_sites(), rng);

      std::vector<cplx> O(s.num_params());
      const cplx lp = model->log_derivatives(s.alpha, theta, O);
      CHECK(std::abs(lp - model->log_psi(s.alpha, theta)) < 1e-12);
      CHECK(oracle::rel_error(O, oracle::fd_log_derivatives(s, theta)) < 1e-7);

      AngleDerivatives ad;
      model->angle_derivatives(s.alpha, theta, ad);
      const auto g_fd = oracle::fd_angle_gradient(s, theta);
      CHECK(oracle::rel_error(ad.grad, g_fd) < 1e-7);

      std::vector<cplx> grad(s.num_sites());
      model->angle_gradient(s.alpha, theta, grad);
      CHECK(oracle::rel_error(grad, ad.grad) < 1e-12);

      std::vector<double> glp_fd(s.num_sites());
      for (std::size_t k = 0; k < glp_fd.size(); ++k) glp_fd[k] = 2.0 * g_fd[k].real();
      CHECK(oracle::rel_error(grad_log_prob(s, theta), glp_fd) < 1e-7);

      const cplx el = local_energy(s, theta, 2.5, 1.3);
      const cplx el_fd = oracle::fd_local_energy(s, theta, 2.5, 1.3);
      CAPTURE(el);
      CAPTURE(el_fd);
      CHECK(std::abs(el - el_fd) / std::max(1.0, std::abs(el_fd)) < 1e-6);
    }
  }
}

TEST_CASE("ansatz periodicity and layout") {
  for (const Case& c : cases()) {
    CAPTURE(c.name);
    auto model = make_ansatz(c.spec, build_lattice(c.dims, c.periodic));
    auto rng = keyed_rng(12, {2});
    const VariationalState s = random_state(model, 0.3, rng);
    const auto theta = oracle::random_angles(s.num_sites(), rng);
    for (std::size_t k = 0; k < s.num_sites(); ++k) CHECK(log_psi_periodicity_check(s, theta, k));

    std::size_t covered = 0;
    for (const ParamBlock& b : model->layout()) {
      CHECK(b.offset == covered);
      covered += b.size();
    }
    CHECK(covered == model->num_params());
    CHECK(model->spec().kind == c.spec.kind);
  }
}

TEST_CASE("cnn with zero output kernel is the uniform state") {
  auto model = make_ansatz(AnsatzSpec{}, build_lattice({4}, {true}));
  auto rng = keyed_rng(3, {3});
  VariationalState s = random_state(model, 0.5, rng);
  const auto out = model->output_layer_params();
  REQUIRE(!out.empty());
  for (std::size_t i : out) s.alpha[i] = 0.0;
  const cplx ref = log_psi(s, oracle::random_angles(4, rng));
  for (int i = 0; i < 5; ++i) CHECK(std::abs(log_psi(s, oracle::random_angles(4, rng)) - ref) < 1e-14);
  // The output kernel still has live derivatives there.
  const auto O = log_derivatives(s, oracle::random_angles(4, rng));
  double live = 0.0;
  for (std::size_t i : out) live += std::abs(O[i]);
  CHECK(live > 1e-3);
}

TEST_CASE("jastrow local energy on a known state") {
  // psi = exp(a cos(theta_0 - theta_1)) on two open sites: the kinetic term
  // is analytic, -(gJ/2) * 2 * (-a cos d + a^2 sin^2 d).
  AnsatzSpec spec;
  spec.kind = AnsatzKind::Jastrow;
  auto model = make_ansatz(spec, build_lattice({2}, {false}));
  VariationalState s = zero_state(model);
  std::size_t pair_index = s.num_params();
  for (const ParamBlock& b : model->layout())
    if (b.name.find("pair") != std::string::npos || b.name.find("jastrow") != std::string::npos)
      pair_index = b.offset;
  REQUIRE(pair_index < s.num_params());
  const double a = 0.7, g = 3.0, J = 1.0;
  s.alpha[pair_index] = a;
  const std::vector<double> theta{0.4, -0.5};
  const double d = theta[0] - theta[1];
  const double kin = -(g * J / 2.0) * 2.0 * (-a * std::cos(d) + a * a * std::sin(d) * std::sin(d));
  const double expected = kin - J * std::cos(d);
  CHECK(local_energy(s, theta, g, J).real() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("bad ansatz input") {
  auto model = make_ansatz(AnsatzSpec{}, build_lattice({3}, {true}));
  std::vector<cplx> alpha(model->num_params() + 1);
  std::vector<double> theta(3);
  CHECK_THROWS_AS(model->log_psi(alpha, theta), ConfigError);
  CHECK_THROWS_AS(ansatz_kind_from_string("mps"), ConfigError);
  AnsatzSpec even;
  even.cnn.kernel_size = 2;
  CHECK_THROWS_AS(make_ansatz(even, build_lattice({3}, {true})), ConfigError);
}
