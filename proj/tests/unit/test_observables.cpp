#include "doctest.h"

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "qrotor/error.hpp"
#include "qrotor/observables.hpp"
#include "qrotor/rng.hpp"

using namespace qrotor;

namespace {

SampleSet constant_samples(std::vector<double> row, std::size_t copies, std::size_t chains = 1) {
  SampleSet s;
  s.n_sites = row.size();
  s.n_chains = chains;
  s.per_chain = copies / chains;
  for (std::size_t i = 0; i < copies; ++i) s.theta.insert(s.theta.end(), row.begin(), row.end());
  return s;
}

}  // namespace

TEST_CASE("bootstrap sigma of the mean") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  std::vector<double> v(20 * 500);
  for (double& x : v) x = d(rng);
  const double s = bootstrap_sigma(v, 20);
  CHECK(s == doctest::Approx(0.01).epsilon(0.25));
  CHECK(bootstrap_sigma(v, 20) == s);
  // One block: falls back to batches and still sees the spread.
  CHECK(bootstrap_sigma(v, 1) == doctest::Approx(0.01).epsilon(0.4));
  CHECK_THROWS_AS(bootstrap_sigma(std::vector<double>(7, 0.0), 2), ConfigError);
}

TEST_CASE("weighted sets give exact means") {
  SampleSet s = constant_samples({0.0}, 3);
  s.weights = {0.2, 0.3, 0.5};
  const std::vector<double> v{1.0, 2.0, 4.0};
  const Estimate e = sample_mean(v, s);
  CHECK(e.value == doctest::Approx(0.2 + 0.6 + 2.0));
  CHECK(e.sigma == 0.0);
}

TEST_CASE("magnetization and potential energy of an aligned state") {
  const Lattice lat = build_lattice({4}, {true});
  const SampleSet s = constant_samples({0.3, 0.3, 0.3, 0.3}, 10, 2);
  const Magnetization m = magnetization(s);
  CHECK(m.M.value == doctest::Approx(1.0));
  CHECK(m.Mx.value == doctest::Approx(std::cos(0.3)));
  CHECK(m.My.value == doctest::Approx(std::sin(0.3)));
  CHECK(m.M.sigma == doctest::Approx(0.0));
  CHECK(potential_energy_density(s, lat, 2.0).value == doctest::Approx(-2.0));
  CHECK(mean_circular_variance(s) == doctest::Approx(0.0));
}

TEST_CASE("single vortex on a plaquette") {
  const Lattice lat = build_lattice({2, 2}, {false, false});
  std::vector<double> theta(4);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) theta[lat.site(r, c)] = std::atan2(r - 0.5, c - 0.5);
  const auto& loops = lat.plaquettes(1);
  REQUIRE(loops.size() == 1);
  CHECK(loop_vorticity(loops[0], theta, 1) == doctest::Approx(kTwoPi));
  for (double& t : theta) t = -t;
  CHECK(loop_vorticity(loops[0], theta, 1) == doctest::Approx(-kTwoPi));
  const SampleSet s = constant_samples(theta, 4);
  CHECK(vorticity(s, lat, 1).value == doctest::Approx(-kTwoPi));
  // Smooth configurations carry no winding.
  const SampleSet calm = constant_samples({0.1, 0.2, 0.3, 0.2}, 4);
  CHECK(vorticity(calm, lat, 1).value == doctest::Approx(0.0));
}

TEST_CASE("log mean exp") {
  const std::vector<cplx> z{{800.0, 0.5}, {800.0, 0.5}};
  CHECK(std::abs(log_mean_exp(z) - cplx(800.0, 0.5)) < 1e-12);
  const std::vector<cplx> y{{0.0, 0.0}, {std::log(3.0), 0.0}};
  const std::vector<double> w{0.5, 0.5};
  CHECK(log_mean_exp(y, w).real() == doctest::Approx(std::log(2.0)));
}

TEST_CASE("fidelity against a direct grid overlap") {
  AnsatzSpec spec;
  spec.kind = AnsatzKind::Jastrow;
  auto model = make_ansatz(spec, build_lattice({3}, {false}));
  auto rng = keyed_rng(8, {1});
  const VariationalState a = random_state(model, 0.4, rng);
  const VariationalState b = random_state(model, 0.4, rng);
  const std::size_t q = 16;
  const SampleSet ga = quadrature_grid(a, q), gb = quadrature_grid(b, q);

  const FidelityEstimate same = fidelity(a, a, ga, ga);
  CHECK(same.F == doctest::Approx(1.0));
  CHECK(same.sigma == 0.0);

  const SampleSet u = uniform_grid(3, q);
  cplx ab = 0.0;
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto r = u.row(i);
    const std::vector<double> th(r.begin(), r.end());
    const cplx pa = std::exp(log_psi(a, th)), pb = std::exp(log_psi(b, th));
    ab += std::conj(pa) * pb;
    na += std::norm(pa);
    nb += std::norm(pb);
  }
  const FidelityEstimate f = fidelity(a, b, ga, gb);
  CHECK(f.F == doctest::Approx(std::norm(ab) / (na * nb)).epsilon(1e-10));
  CHECK(!f.clamped);
  CHECK(!f.overlap_loss);
}

TEST_CASE("half fidelity time") {
  const std::vector<double> t{0.0, 1.0, 2.0}, F{1.0, 0.6, 0.4};
  CHECK(*half_fidelity_time(t, F) == doctest::Approx(1.5));
  const std::vector<double> high{1.0, 0.9, 0.8};
  CHECK(!half_fidelity_time(t, high));
  const std::vector<double> low{0.3, 0.2, 0.1};
  CHECK_THROWS_AS(half_fidelity_time(t, low), ConfigError);
}
