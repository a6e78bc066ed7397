#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "qrotor/ansatz.hpp"
#include "qrotor/hmc.hpp"
#include "qrotor/ode.hpp"
#include "qrotor/tdvp.hpp"

namespace qrotor {

enum class RunMode { GroundState, Quench, OracleBenchmark, SamplerCheck };

std::string to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& name);

enum class SamplerKind { Hmc, Quadrature };

struct SamplingPolicy {
  SamplerKind kind = SamplerKind::Hmc;
  std::size_t quadrature_points = 24;  ///< per site, quadrature mode only
  /// Fresh samples for every Runge-Kutta stage. When false, the stage-0
  /// samples of a step are reused for its later stages, which biases the
  /// stage estimates toward the step start.
  bool per_stage = true;
};

struct PhysicsConfig {
  double g_i = 3.0;
  double g_f = 6.0;
  double J = 1.0;
  double t_max = 1.0;
};

struct GroundStateConfig {
  double g = 0.0;  ///< coupling for ground-state runs; 0 means physics.g_i
  double dtau = 0.01;
  int max_steps = 2000;
  int min_steps = 40;
  double tolerance = 1e-4;  ///< per site, in units of J
  int window = 20;
  double init_stddev = 0.01;
};

struct OracleConfig {
  int M = 5;
  std::size_t grid_points = 16;  ///< Q for the variational-to-dense transform
  /// Start both engines from the VMC ground state at g_i (converted to the
  /// basis) instead of the uniform superposition.
  bool from_ground_state = false;
};

struct SamplerCheckConfig {
  std::vector<int> ns_values{250, 500, 1000, 2000, 4000};
  std::vector<int> l_values{1, 2, 10, 20};
  int l_table_ns = 1000;  ///< draws per chain for the trajectory-length table
  int repeats = 8;  ///< independent HMC runs per table entry
};

struct OutputConfig {
  int checkpoint_every = 10;  ///< accepted steps between checkpoints, 0 disables
  std::vector<int> vorticity_sizes{1};  ///< loop sizes l reported on 2D lattices
};

/// Every knob of a run. Defaults are the production values; loading a file
/// only overrides keys it sets, except that lattice boundaries must always
/// be given explicitly.
struct RunConfig {
  RunMode mode = RunMode::Quench;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  int workers = 1;

  std::vector<int> dims;
  std::vector<bool> periodic;

  AnsatzSpec ansatz;
  HmcConfig hmc;
  SamplingPolicy sampling;
  RegularizationPolicy regularization;
  bool regularization_set = false;  ///< false: chosen from the lattice dimension
  StepController ode;
  PhysicsConfig physics;
  GroundStateConfig ground_state;
  OracleConfig oracle;
  SamplerCheckConfig sampler_check;
  OutputConfig output;

  void validate() const;
  RegularizationPolicy effective_regularization() const;
};

/// INI text with [sections] and key = value lines. '#' and ';' start
/// comments. Unknown sections or keys are errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// All effective values, including defaults that the file did not set.
nlohmann::json config_to_json(const RunConfig& cfg);

}  // namespace qrotor
