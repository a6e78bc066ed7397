#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qrotor/ansatz.hpp"
#include "qrotor/sampling.hpp"

namespace qrotor {

/// Sampler hyperparameters. Defaults are the production values.
struct HmcConfig {
  int L0 = 20;                ///< mean leapfrog steps per proposal
  double gamma = 0.2;         ///< trajectory-length jitter fraction, [0, 1)
  double eps0 = 0.1;          ///< initial step size
  double delta_target = 0.8;  ///< target acceptance statistic
  int Nw = 800;               ///< warmup transitions per chain
  int Np = 5;                 ///< slow (mass-adapting) windows
  int Ns = 2000;              ///< kept draws per chain
  int Nc = 20;                ///< independent chains
  int workers = 1;            ///< threads used to run chains

  double variance_floor = 1e-6;
  double variance_ceiling = 1e3;  ///< also used when the circular variance is infinite
  double eps_max = 10.0;          ///< dual averaging cannot push the step size above this
  double divergence_threshold = 1000.0;

  // Dual averaging constants.
  double da_gamma = 0.05;
  double da_t0 = 10.0;
  double da_kappa = 0.75;

  void validate() const;
};

/// Log density ln p(theta) on the torus with its gradient.
class Target {
 public:
  virtual ~Target() = default;
  virtual std::size_t dim() const = 0;
  /// Returns ln p up to a constant and writes d ln p / d theta into grad.
  virtual double log_prob(std::span<const double> theta, std::span<double> grad) const = 0;
};

/// p = |psi_alpha|^2, evaluated as 2 Re ln psi.
class StateTarget final : public Target {
 public:
  explicit StateTarget(const VariationalState& state) : state_(state) {}
  std::size_t dim() const override { return state_.num_sites(); }
  double log_prob(std::span<const double> theta, std::span<double> grad) const override;

 private:
  const VariationalState& state_;
};

/// Product of independent von Mises densities exp(kappa_k cos(theta_k - mu_k)).
class VonMisesTarget final : public Target {
 public:
  VonMisesTarget(std::vector<double> kappa, std::vector<double> mu = {});
  std::size_t dim() const override { return kappa_.size(); }
  double log_prob(std::span<const double> theta, std::span<double> grad) const override;
  /// Exact circular variance -2 ln(I1(kappa)/I0(kappa)) of site k.
  double circular_variance(std::size_t k) const;

 private:
  std::vector<double> kappa_, mu_;
};

struct ChainState {
  std::vector<double> theta;
  double eps = 0.1;
  std::vector<double> mass;
  std::mt19937_64 rng;
  double log_prob = 0.0;
  std::vector<double> grad;  ///< d ln p / d theta at theta
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t divergences = 0;
};

struct LeapfrogResult {
  bool finite = true;
  double log_prob = 0.0;
};

/// L leapfrog steps of H~ = pi^T M^-1 pi / 2 + V with V = -ln p, starting
/// from gradient `grad` at theta. Interior half kicks are fused. On return
/// theta, pi and grad describe the end point. Angles are not wrapped.
LeapfrogResult leapfrog(std::span<double> theta, std::span<double> pi, std::span<double> grad,
                        double eps, int L, std::span<const double> mass, const Target& target);

struct Transition {
  bool accepted = false;
  bool divergent = false;
  double accept_prob = 0.0;  ///< min(1, exp(-dH)), 0 for divergent proposals
};

/// One HMC transition: fresh momenta pi ~ N(0, M), L leapfrog steps, then a
/// Metropolis test on the change of H~. Accepted angles are wrapped.
Transition propose_and_accept(ChainState& chain, int L, const Target& target, const HmcConfig& cfg);

/// Uniform integer in [round((1-gamma) L0), round((1+gamma) L0)], at least 1.
int jittered_length(std::mt19937_64& rng, int L0, double gamma);

struct WarmupWindow {
  int length = 0;
  bool slow = false;
};

/// fast N_w/12, slow N_w/36 doubling N_p times, fast N_w/18 (floors).
std::vector<WarmupWindow> warmup_schedule(int Nw, int Np);

/// Nesterov dual averaging of log step size toward a target acceptance.
class DualAverage {
 public:
  DualAverage(double eps_init, double delta, double gamma, double t0, double kappa,
              double eps_max);
  void update(double accept_prob);
  double iterate() const;  ///< step size to use for the next proposal
  double averaged() const;  ///< step size to freeze at the end of a window

 private:
  double mu_, log_eps_, log_eps_bar_ = 0.0, h_bar_ = 0.0, m_ = 1.0;
  double delta_, gamma_, t0_, kappa_, log_eps_max_;
};

/// Windowed warmup: one dual-averaging run across all windows. After each slow
/// window m_k = 1 / circular Var(theta_k) of that window's draws, the variance
/// clamped to [variance_floor, variance_ceiling]. Throws NumericalError if a window rejects
/// every proposal twice in a row (the retry runs with eps halved).
void warmup(ChainState& chain, const HmcConfig& cfg, const Target& target);

/// Fresh chain: theta_k ~ Uniform(-pi, pi), unit masses, eps = eps0.
ChainState init_chain(const Target& target, const HmcConfig& cfg, std::mt19937_64 rng);

struct ChainDiagnostics {
  double acceptance = 0.0;
  std::size_t divergences = 0;
  double eps = 0.0;
  std::vector<double> mass;
};

struct HmcDiagnostics {
  std::vector<ChainDiagnostics> chains;
  double mean_acceptance = 0.0;
  std::size_t divergences = 0;
  double max_rhat = 1.0;  ///< split R-hat over cos and sin of every angle
  std::vector<std::string> warnings;
};

struct HmcRun {
  SampleSet samples;
  HmcDiagnostics diagnostics;
  std::vector<ChainState> chains;
};

/// Draws Ns transitions from each warmed chain (rejections repeat the
/// current point). Chains run on cfg.workers threads; output is ordered by
/// chain index and does not depend on the thread count.
HmcRun sample(std::vector<ChainState> chains, int Ns, const Target& target, const HmcConfig& cfg);

/// init + warmup + sample for cfg.Nc chains. Chain c draws from
/// keyed_rng(seed, {stream..., c}).
HmcRun run_hmc(const Target& target, const HmcConfig& cfg, std::uint64_t seed,
               const std::vector<std::uint64_t>& stream);

/// Split R-hat of one scalar per draw, chain-major layout.
double split_rhat(std::span<const double> values, std::size_t n_chains, std::size_t per_chain);

}  // namespace qrotor
