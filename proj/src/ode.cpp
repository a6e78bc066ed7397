#include "qrotor/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qrotor/error.hpp"

namespace qrotor {

void StepController::validate() const {
  if (!(atol > 0.0) || !(rtol > 0.0)) throw ConfigError("ode: tolerances must be > 0");
  if (!(dt_min > 0.0) || !(dt_max >= dt_min)) throw ConfigError("ode: need 0 < dt_min <= dt_max");
  if (!(dt0 >= dt_min && dt0 <= dt_max)) throw ConfigError("ode: dt0 must lie in [dt_min, dt_max]");
  if (!(safety > 0.0 && safety <= 1.0)) throw ConfigError("ode: safety must lie in (0, 1]");
}

double StepController::next_dt(double dt, double err) const {
  const double factor = err > 0.0 ? safety * std::pow(err, -order_exponent)
                                  : std::numeric_limits<double>::infinity();
  const double proposed = std::clamp(dt * factor, 0.25 * dt, 4.0 * dt);
  return std::clamp(proposed, dt_min, dt_max);
}

double error_norm(const Eigen::VectorXcd& y3, const Eigen::VectorXcd& y2, double atol,
                  double rtol) {
  double err = 0.0;
  for (Eigen::Index i = 0; i < y3.size(); ++i) {
    const auto d = y3[i] - y2[i];
    err = std::max(err, std::abs(d.real()) / (atol + rtol * std::abs(y3[i].real())));
    err = std::max(err, std::abs(d.imag()) / (atol + rtol * std::abs(y3[i].imag())));
  }
  return err;
}

namespace {

bool all_finite(const Eigen::VectorXcd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
  return true;
}

}  // namespace

Rk32Result rk32_step(const Rhs& f, const Eigen::VectorXcd& y, double t, double dt,
                     const StageContext& ctx, double atol, double rtol,
                     const Eigen::VectorXcd* k1_in) {
  Rk32Result r;
  StageContext c = ctx;
  auto stage = [&](int s, double ts, const Eigen::VectorXcd& ys) {
    c.stage = s;
    Eigen::VectorXcd k = f(ts, ys, c);
    if (!all_finite(k)) r.finite = false;
    return k;
  };

  const Eigen::VectorXcd k1 = k1_in ? *k1_in : stage(0, t, y);
  if (!r.finite) return r;
  const Eigen::VectorXcd k2 = stage(1, t + 0.5 * dt, y + 0.5 * dt * k1);
  if (!r.finite) return r;
  const Eigen::VectorXcd k3 = stage(2, t + 0.75 * dt, y + 0.75 * dt * k2);
  if (!r.finite) return r;
  r.y3 = y + dt * (2.0 / 9.0 * k1 + 1.0 / 3.0 * k2 + 4.0 / 9.0 * k3);
  r.k4 = stage(3, t + dt, r.y3);
  if (!r.finite) return r;
  r.y2 = y + dt * (7.0 / 24.0 * k1 + 0.25 * k2 + 1.0 / 3.0 * k3 + 0.125 * r.k4);
  r.err = error_norm(r.y3, r.y2, atol, rtol);
  if (!std::isfinite(r.err)) r.finite = false;
  return r;
}

Rk32Integrator::Rk32Integrator(StepController ctrl, bool fsal)
    : ctrl_(ctrl), fsal_enabled_(fsal) {
  ctrl_.validate();
}

Rk32Integrator::Step Rk32Integrator::advance(const Rhs& f, const Eigen::VectorXcd& y, double t,
                                             double dt, double t_end, std::uint64_t step_index,
                                             const Eigen::VectorXcd* k1_given) {
  if (!(t_end > t)) throw ConfigError("ode: advance called at or past the end time");
  dt = std::clamp(dt, ctrl_.dt_min, ctrl_.dt_max);

  Eigen::VectorXcd k1;
  if (k1_given) {
    k1 = *k1_given;
  } else if (fsal_enabled_ && have_fsal_) {
    k1 = fsal_;
  } else {
    k1 = f(t, y, StageContext{step_index, 0, 0});
  }
  have_fsal_ = false;
  if (!all_finite(k1))
    throw NumericalError("ode: non-finite right-hand side at the step start", "nonfinite_rhs");

  for (std::uint64_t attempt = 0;; ++attempt) {
    const bool end_capped = t + dt >= t_end;
    const double h = end_capped ? t_end - t : dt;
    const Rk32Result r =
        rk32_step(f, y, t, h, StageContext{step_index, attempt, 0}, ctrl_.atol, ctrl_.rtol, &k1);
    StepAttempt a{t, h, r.err, false, r.finite};

    if (!r.finite) {
      attempts_.push_back(a);
      if (h <= ctrl_.dt_min * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "ode: non-finite stage at dt_min (t=" << t << ")";
        throw NumericalError(msg.str(), "dt_underflow");
      }
      dt = std::max(0.5 * h, ctrl_.dt_min);
      continue;
    }
    if (r.err <= 1.0) {
      a.accepted = true;
      attempts_.push_back(a);
      if (fsal_enabled_) {
        fsal_ = r.k4;
        have_fsal_ = true;
      }
      return Step{r.y3, end_capped ? t_end : t + h, h, ctrl_.next_dt(h, r.err), r.err};
    }
    attempts_.push_back(a);
    if ((!end_capped && h <= ctrl_.dt_min * (1.0 + 1e-12)) || attempt >= 200) {
      std::ostringstream msg;
      msg << "ode: step rejected at dt_min (t=" << t << ", err=" << r.err
          << "); stiffness or sampling noise floor reached";
      throw NumericalError(msg.str(), "dt_underflow");
    }
    dt = ctrl_.next_dt(h, r.err);
  }
}

}  // namespace qrotor
