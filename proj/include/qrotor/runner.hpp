#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "qrotor/checkpoint.hpp"
#include "qrotor/config.hpp"
#include "qrotor/hmc.hpp"
#include "qrotor/observables.hpp"
#include "qrotor/ode.hpp"
#include "qrotor/tdvp.hpp"

namespace qrotor {

/// Stream tags separating the random streams of different run phases.
enum class StreamTag : std::uint64_t { GroundState = 1, Quench = 2, SamplerCheck = 3, Init = 4 };

struct EvalOptions {
  SamplingPolicy sampling;
  HmcConfig hmc;
  RegularizationPolicy regularization;
  double g = 1.0;
  double J = 1.0;
  TimeMode mode = TimeMode::Real;
  std::uint64_t seed = 1;
  StreamTag tag = StreamTag::Quench;
  std::size_t workers = 1;
};

/// Samples, QGT estimate and TDVP solution at one parameter point.
struct StageEval {
  SampleSet samples;
  QgtEstimate qgt;
  TdvpSolution sol;
  std::optional<HmcDiagnostics> hmc;
};

/// Draws samples at given parameters and solves for alpha_dot. HMC streams
/// are keyed by (seed, tag, step, attempt, stage, chain), so every
/// evaluation is reproducible on its own.
class StageEvaluator {
 public:
  StageEvaluator(std::shared_ptr<const Ansatz> model, EvalOptions opt);

  StageEval evaluate(const std::vector<cplx>& alpha, const StageContext& ctx);
  SampleSet draw(const VariationalState& state, const StageContext& ctx) const;
  const EvalOptions& options() const { return opt_; }

 private:
  std::shared_ptr<const Ansatz> model_;
  EvalOptions opt_;
  std::optional<std::pair<std::uint64_t, SampleSet>> step_samples_;  // per_stage == false
};

/// Uniform superposition with live derivatives: for the CNN, random hidden
/// layers and a zero output kernel; for the other kinds, all-zero parameters.
VariationalState uniform_state(std::shared_ptr<const Ansatz> model, double stddev,
                               std::uint64_t seed);

struct TrajectoryRow {
  std::uint64_t step = 0;
  double dt = 0.0;  ///< size of the step that reached t (0 for the first row)
  ObservableRow obs;
  double energy = 0.0;
  double energy_sigma = 0.0;
  double e_var = 0.0;
  double rho = 0.0;
  double lambda2 = 0.0;
  double sigma2_max = 0.0;
  double r2 = 0.0;
  bool r2_clamped = false;
  double R2 = 0.0;
  double acceptance = 1.0;
  std::size_t divergences = 0;
  double max_rhat = 1.0;
  double eps_mean = 0.0;
  double mass_mean = 0.0;
};

struct TvmcOptions {
  EvalOptions eval;
  StepController ode;
  double t_end = 1.0;
  std::vector<int> vorticity_sizes;
  int checkpoint_every = 0;
  std::string checkpoint_path;  ///< empty disables checkpoints
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  VariationalState final_state;
  std::vector<StepAttempt> attempts;
  std::vector<std::string> warnings;
};

/// Real-time t-VMC from `initial` to opts.t_end. One row per accepted step,
/// plus the t = 0 row. With `resume`, continues from a quench checkpoint and
/// reproduces the rows an uninterrupted run would have produced after it.
/// On a numerical failure a checkpoint of the last accepted state is
/// written (if enabled) before the exception propagates.
Trajectory run_tvmc(const VariationalState& initial, const TvmcOptions& opts,
                    const std::function<void(const TrajectoryRow&)>& on_row = {},
                    const Checkpoint* resume = nullptr);

struct GroundStateOptions {
  EvalOptions eval;  ///< mode is forced to imaginary time
  double dtau = 0.01;
  int max_steps = 2000;
  int min_steps = 40;
  int window = 20;
  double tolerance = 1e-4;
};

struct EnergyPoint {
  int step = 0;
  double tau = 0.0;
  double energy = 0.0;
  double sigma = 0.0;
  double e_var = 0.0;
  double rho = 0.0;
  double lambda2 = 0.0;
  double acceptance = 1.0;
};

struct GroundStateResult {
  VariationalState state;
  std::vector<EnergyPoint> trace;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Euler steps of the imaginary-time flow alpha += dtau * alpha_dot. Stops
/// when the means of the two halves of the last `window` energies differ by
/// less than max(tolerance * N, 2 standard errors).
GroundStateResult run_ground_state(const VariationalState& initial, const GroundStateOptions& opts,
                                   const std::function<void(const EnergyPoint&)>& on_point = {});

struct SamplerCheckReport {
  std::vector<int> ns_values;
  std::vector<double> sigma_m;  ///< mean bootstrap sigma of M per N_s
  double slope = 0.0;           ///< least-squares slope of log sigma_M vs log N_s
  std::vector<int> l_values;
  std::vector<double> var_m;         ///< mean bootstrap variance of M per L
  std::vector<double> acceptance;    ///< mean acceptance per L
  /// Fraction of bootstrap resamples (over repeats) in which var(L) <= var(first L).
  std::vector<double> confidence_vs_first;
};

SamplerCheckReport sampler_check(const Target& target, const HmcConfig& hmc,
                                 const SamplerCheckConfig& cfg, std::uint64_t seed);

struct OracleRow {
  double t = 0.0;
  double e_pot = 0.0, e_pot_sigma = 0.0, e_pot_exact = 0.0;
  double F = 0.0, F_sigma = 0.0, F_exact = 0.0;
  double mag_x = 0.0, mag_x_exact = 0.0;
  double energy = 0.0, energy_sigma = 0.0, energy_exact = 0.0;
  double r2 = 0.0, R2 = 0.0;
  bool within = true;  ///< both deviations inside max(abs floor, 3 sigma)
};

struct OracleReport {
  std::vector<OracleRow> rows;
  Trajectory trajectory;
  std::size_t basis_dim = 0;
  double initial_overlap = 0.0;  ///< |<exact start|converted variational start>|^2
  double truncated_mass = 0.0;
  double max_e_pot_deviation = 0.0;
  double max_fidelity_deviation = 0.0;
  bool within = true;
};

inline constexpr double kOracleEpotFloor = 0.02;  ///< in units of J
inline constexpr double kOracleFidelityFloor = 0.03;

/// t-VMC from `initial` next to exact evolution in the M-truncated basis,
/// both under opts.eval.g. The exact run starts from the m = 0 product
/// state, or from the basis image of `initial` when `from_variational`.
OracleReport oracle_benchmark(const VariationalState& initial, const TvmcOptions& opts, int M,
                              std::size_t grid_points, bool from_variational,
                              const std::function<void(const OracleRow&)>& on_row = {});

/// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

// CSV and metadata helpers. Numbers are printed with 17 significant digits
// so identical runs give identical bytes.
std::string format_double(double v);
std::string trajectory_csv_header(const std::vector<int>& vorticity_sizes);
std::string trajectory_csv_line(const TrajectoryRow& row, const std::vector<int>& vorticity_sizes);

/// Entry points used by the CLI. Each writes its CSV, JSON metadata and
/// checkpoints into cfg.output_dir and fills `meta`. An empty resume path
/// means a fresh start. ground-state resumes imaginary time from a
/// ground-state checkpoint; oracle-benchmark takes one as its initial state.
void cli_ground_state(const RunConfig& cfg, const std::string& resume_path, nlohmann::json& meta);
void cli_quench(const RunConfig& cfg, const std::string& resume_path, nlohmann::json& meta);
void cli_oracle_benchmark(const RunConfig& cfg, const std::string& resume_path,
                          nlohmann::json& meta);
void cli_sampler_check(const RunConfig& cfg, const std::string& resume_path, nlohmann::json& meta);

/// EvalOptions derived from a run configuration.
EvalOptions eval_options(const RunConfig& cfg, double g, TimeMode mode, StreamTag tag);

}  // namespace qrotor
