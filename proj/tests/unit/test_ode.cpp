#include "doctest.h"

#include <cmath>

#include "../support/oracles.hpp"
#include "qrotor/error.hpp"
#include "qrotor/ode.hpp"
#include "qrotor/runner.hpp"

using namespace qrotor;
using Eigen::VectorXcd;

namespace {

const Rhs rotate = [](double, const VectorXcd& y, const StageContext&) -> VectorXcd {
  return cplx(0, -1) * y;
};

double fixed_step_error(int n) {
  VectorXcd y(1);
  y[0] = 1.0;
  const double dt = 1.0 / n;
  for (int i = 0; i < n; ++i) y = rk32_step(rotate, y, i * dt, dt, {}, 1e-3, 1e-3).y3;
  return std::abs(y[0] - std::exp(cplx(0, -1)));
}

}  // namespace

TEST_CASE("controller formula") {
  StepController c;
  c.dt_min = 1e-6;
  c.dt_max = 1.0;
  CHECK(c.next_dt(0.01, 8.0) == doctest::Approx(0.0045));
  CHECK(c.next_dt(0.01, 0.0) == doctest::Approx(0.04));
  CHECK(c.next_dt(0.01, 1e9) == doctest::Approx(0.0025));
  CHECK(c.next_dt(0.5, 1e-6) == doctest::Approx(1.0));
  CHECK(c.next_dt(1e-6, 1e9) == doctest::Approx(1e-6));
  c.dt_min = 0.2;
  c.dt_max = 0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("third-order global convergence") {
  std::vector<double> lx, ly;
  for (int n : {10, 20, 40, 80, 160}) {
    lx.push_back(std::log(1.0 / n));
    ly.push_back(std::log(fixed_step_error(n)));
  }
  CHECK(fit_slope(lx, ly) == doctest::Approx(3.0).epsilon(0.2 / 3.0));
}

TEST_CASE("embedded error estimate is second order") {
  VectorXcd y(1);
  y[0] = 1.0;
  auto err = [&](double dt) {
    const auto r = rk32_step(rotate, y, 0.0, dt, {}, 1.0, 0.0);
    return r.err;
  };
  // Local error of the embedded pair is O(dt^3).
  CHECK(std::log(err(0.02) / err(0.01)) / std::log(2.0) == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("adaptive integration lands on t_end") {
  StepController c;
  c.atol = 1e-8;
  c.rtol = 1e-8;
  c.dt_max = 0.5;
  Rk32Integrator integ(c, true);
  VectorXcd y(2);
  y << 1.0, cplx(0.0, 2.0);
  double t = 0.0, dt = c.dt0;
  int steps = 0;
  while (t < 1.0) {
    const auto st = integ.advance(rotate, y, t, dt, 1.0, static_cast<std::uint64_t>(steps));
    CHECK(st.t > t);
    y = st.y;
    t = st.t;
    dt = st.dt_next;
    ++steps;
  }
  CHECK(t == 1.0);
  CHECK(std::abs(y[0] - std::exp(cplx(0, -1))) < 1e-6);
  CHECK(std::abs(y[1] - cplx(0, 2) * std::exp(cplx(0, -1))) < 1e-6);
  CHECK(integ.fsal_stage() != nullptr);
}

TEST_CASE("stage contexts and evaluation counts") {
  std::vector<StageContext> seen;
  const Rhs f = [&](double, const VectorXcd& y, const StageContext& ctx) -> VectorXcd {
    seen.push_back(ctx);
    return cplx(0, -1) * y;
  };
  StepController c;
  Rk32Integrator integ(c, false);
  VectorXcd y = VectorXcd::Ones(1);
  integ.advance(f, y, 0.0, 0.01, 1.0, 7);
  REQUIRE(seen.size() == 4);
  for (int s = 0; s < 4; ++s) {
    CHECK(seen[s].step == 7);
    CHECK(seen[s].attempt == 0);
    CHECK(seen[s].stage == s);
  }
  seen.clear();
  const VectorXcd k1 = f(0.0, y, {});
  seen.clear();
  integ.advance(f, y, 0.0, 0.01, 1.0, 8, &k1);
  CHECK(seen.size() == 3);
}

TEST_CASE("rejection retries reuse k1 and bump the attempt counter") {
  std::vector<StageContext> seen;
  const Rhs f = [&](double, const VectorXcd& y, const StageContext& ctx) -> VectorXcd {
    seen.push_back(ctx);
    return cplx(0, -50) * y;
  };
  StepController c;
  c.dt_max = 1.0;
  Rk32Integrator integ(c, false);
  const auto st = integ.advance(f, VectorXcd::Ones(1), 0.0, 0.5, 1.0, 0);
  CHECK(st.dt_used < 0.5);
  CHECK(integ.attempts().size() > 1);
  CHECK(!integ.attempts().front().accepted);
  CHECK(integ.attempts().back().accepted);
  int stage0 = 0;
  for (const auto& ctx : seen) stage0 += ctx.stage == 0;
  CHECK(stage0 == 1);
  CHECK(seen.back().attempt == integ.attempts().size() - 1);
}

TEST_CASE("dt underflow") {
  const Rhs bad = [](double t, const VectorXcd& y, const StageContext&) -> VectorXcd {
    VectorXcd out = y;
    if (t > 0.0) out[0] = NAN;
    return out;
  };
  StepController c;
  Rk32Integrator integ(c, false);
  try {
    integ.advance(bad, VectorXcd::Ones(1), 0.0, 0.01, 1.0, 0);
    FAIL("expected dt_underflow");
  } catch (const NumericalError& e) {
    CHECK(e.reason() == "dt_underflow");
  }
}
