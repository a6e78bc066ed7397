#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace qrotor {

/// Step-size controller for the embedded RK3(2) pair. Times are in units of 1/J.
struct StepController {
  double atol = 1e-3;
  double rtol = 1e-3;
  double safety = 0.9;
  double dt_min = 1e-5;
  double dt_max = 0.1;
  double dt0 = 1e-3;
  static constexpr double order_exponent = 1.0 / 3.0;

  void validate() const;

  /// clamp(safety * dt * err^(-1/3), [dt/4, 4 dt]) intersected with [dt_min, dt_max].
  double next_dt(double dt, double err) const;
};

/// Identifies one right-hand-side evaluation so stochastic evaluations can
/// key their random streams on it.
struct StageContext {
  std::uint64_t step = 0;     ///< index of the step being attempted
  std::uint64_t attempt = 0;  ///< retries of that step
  int stage = 0;              ///< 0..3
};

using Rhs = std::function<Eigen::VectorXcd(double t, const Eigen::VectorXcd& y,
                                           const StageContext& ctx)>;

struct Rk32Result {
  Eigen::VectorXcd y3;  ///< third-order solution
  Eigen::VectorXcd y2;  ///< embedded second-order solution
  Eigen::VectorXcd k4;  ///< f(t + dt, y3), reusable as the next k1
  double err = 0.0;
  bool finite = true;
};

/// max over Re and Im parts of |y3 - y2| / (atol + rtol |y3|), componentwise.
double error_norm(const Eigen::VectorXcd& y3, const Eigen::VectorXcd& y2, double atol,
                  double rtol);

/// One Bogacki-Shampine step. A non-null k1 replaces the f(t, y) evaluation.
Rk32Result rk32_step(const Rhs& f, const Eigen::VectorXcd& y, double t, double dt,
                     const StageContext& ctx, double atol, double rtol,
                     const Eigen::VectorXcd* k1 = nullptr);

/// One attempt of an adaptive step, for telemetry.
struct StepAttempt {
  double t = 0.0;
  double dt = 0.0;
  double err = 0.0;
  bool accepted = false;
  bool finite = true;
};

/// Adaptive driver. With `fsal` set, the last stage of an accepted step is
/// reused as the first stage of the next one; this is only valid for
/// deterministic right-hand sides. A rejected step reuses its own k1.
class Rk32Integrator {
 public:
  Rk32Integrator(StepController ctrl, bool fsal);

  struct Step {
    Eigen::VectorXcd y;
    double t = 0.0;
    double dt_used = 0.0;
    double dt_next = 0.0;
    double err = 0.0;
  };

  /// Attempts steps from (t, y) with trial size dt until one is accepted.
  /// dt is additionally capped so that t never passes t_end. Throws
  /// NumericalError("dt_underflow") when a step is rejected at dt_min.
  /// `k1`, if given, is f(t, y) and is used for the first attempt.
  Step advance(const Rhs& f, const Eigen::VectorXcd& y, double t, double dt, double t_end,
               std::uint64_t step_index, const Eigen::VectorXcd* k1 = nullptr);

  /// Every attempt made so far, in order.
  const std::vector<StepAttempt>& attempts() const { return attempts_; }
  /// f at the end of the last accepted step (FSAL mode only).
  const Eigen::VectorXcd* fsal_stage() const { return have_fsal_ ? &fsal_ : nullptr; }
  const StepController& controller() const { return ctrl_; }

 private:
  StepController ctrl_;
  bool fsal_enabled_;
  bool have_fsal_ = false;
  Eigen::VectorXcd fsal_;
  std::vector<StepAttempt> attempts_;
};

}  // namespace qrotor
