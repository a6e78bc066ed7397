#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrotor/ansatz.hpp"

namespace qrotor {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to rebuild a variational state and continue a run.
/// On disk: magic "QROTORCK", format version, then little-endian fields
/// (kind tag, lattice, hyperparameters, the parameter layout descriptor and
/// the flat complex arrays).
struct Checkpoint {
  std::string stage;  ///< "ground-state" or "quench"
  AnsatzSpec spec;
  std::vector<int> dims;
  std::vector<bool> periodic;
  std::vector<ParamBlock> layout;
  std::vector<cplx> alpha;
  std::vector<cplx> alpha_ref;  ///< t = 0 parameters of a quench, for the fidelity
  double t = 0.0;
  std::uint64_t step = 0;
  double dt_next = 0.0;
  double dt_last = 0.0;  ///< step that produced t, shown again on the resumed row
  double R2 = 0.0;
  double r2_last = 0.0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

/// Builds the checkpoint header for a state.
Checkpoint make_checkpoint(const VariationalState& state, const std::string& stage);

/// Rebuilds the model and checks the stored layout against it.
VariationalState restore_state(const Checkpoint& ck);

}  // namespace qrotor
