#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qrotor/lattice.hpp"

namespace qrotor {

using cplx = std::complex<double>;

enum class AnsatzKind { CNN, CircularRBM, Jastrow };

std::string to_string(AnsatzKind kind);
AnsatzKind ansatz_kind_from_string(const std::string& name);

struct CnnHyper {
  int depth = 2;          ///< D: hidden layers are D-1, plus the summed output layer
  int fourier_modes = 1;  ///< K: input channels are cos(n theta), sin(n theta), n = 1..K
  int kernel_size = 3;    ///< taps per lattice dimension, odd
  int channels = 0;       ///< hidden channel count; 0 means 2K
};

struct RbmHyper {
  int hidden = 0;  ///< N_h for the dense variant; 0 means N
  bool convolutional = false;
  int conv_channels = 1;  ///< hidden units per site in the convolutional variant
  int kernel_size = 3;
  bool visible_bias = true;
  bool hidden_bias = true;
};

struct AnsatzSpec {
  AnsatzKind kind = AnsatzKind::CNN;
  CnnHyper cnn;
  RbmHyper rbm;
};

/// A named contiguous slice of the flat parameter vector.
struct ParamBlock {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size() const;
};

/// ln psi together with its first and diagonal second angle derivatives.
struct AngleDerivatives {
  cplx log_psi;
  std::vector<cplx> grad;       ///< d ln psi / d theta_k
  std::vector<cplx> hess_diag;  ///< d^2 ln psi / d theta_k^2
};

/// Trial wavefunction ln psi_alpha(theta). Implementations are immutable and
/// every method is a pure function of (alpha, theta), so one instance can be
/// shared by any number of sampling threads.
///
/// Parameters are complex and ln psi is holomorphic in them; derivatives
/// with respect to alpha are plain complex derivatives.
class Ansatz {
 public:
  virtual ~Ansatz() = default;

  virtual AnsatzKind kind() const = 0;
  /// Kind and hyperparameters as constructed.
  virtual AnsatzSpec spec() const = 0;
  virtual std::size_t num_params() const = 0;
  virtual std::vector<ParamBlock> layout() const = 0;
  const Lattice& lattice() const { return lattice_; }
  std::size_t num_sites() const { return lattice_.num_sites(); }

  virtual cplx log_psi(std::span<const cplx> alpha, std::span<const double> theta) const = 0;

  /// Writes O_mu = d ln psi / d alpha_mu into `out` and returns ln psi.
  virtual cplx log_derivatives(std::span<const cplx> alpha, std::span<const double> theta,
                               std::span<cplx> out) const = 0;

  /// Writes d ln psi / d theta_k into `grad` and returns ln psi.
  virtual cplx angle_gradient(std::span<const cplx> alpha, std::span<const double> theta,
                              std::span<cplx> grad) const = 0;

  virtual void angle_derivatives(std::span<const cplx> alpha, std::span<const double> theta,
                                 AngleDerivatives& out) const = 0;

  /// Indices of parameters that belong to the output layer, if the kind has
  /// one (CNN final kernel). Used to build the uniform superposition state.
  virtual std::vector<std::size_t> output_layer_params() const { return {}; }

 protected:
  explicit Ansatz(Lattice lattice) : lattice_(std::move(lattice)) {}
  void check_sizes(std::span<const cplx> alpha, std::span<const double> theta) const;

 private:
  Lattice lattice_;
};

std::shared_ptr<const Ansatz> make_ansatz(const AnsatzSpec& spec, const Lattice& lattice);

/// Model handle plus its current parameter vector.
struct VariationalState {
  std::shared_ptr<const Ansatz> model;
  std::vector<cplx> alpha;

  std::size_t num_params() const { return alpha.size(); }
  std::size_t num_sites() const { return model->num_sites(); }
};

/// All-zero parameters. For the CNN this is the uniform superposition.
VariationalState zero_state(std::shared_ptr<const Ansatz> model);

/// Complex Gaussian initialization, independent Re/Im parts with the given
/// standard deviation each.
VariationalState random_state(std::shared_ptr<const Ansatz> model, double stddev,
                              std::mt19937_64& rng);

cplx log_psi(const VariationalState& state, std::span<const double> theta);

std::vector<cplx> log_derivatives(const VariationalState& state, std::span<const double> theta);

/// Gradient of ln p = 2 Re ln psi with respect to the angles.
std::vector<double> grad_log_prob(const VariationalState& state, std::span<const double> theta);

/// E_L = -(gJ/2) sum_k [d_k^2 ln psi + (d_k ln psi)^2] - J sum_<kl> cos(theta_k - theta_l).
cplx local_energy(const VariationalState& state, std::span<const double> theta, double g,
                  double J);

/// Potential part -J sum_<kl> cos(theta_k - theta_l) of the local energy.
double bond_energy(const Lattice& lattice, std::span<const double> theta, double J);

/// True when psi is unchanged (up to 1e-12) after theta_k -> theta_k + 2 pi.
bool log_psi_periodicity_check(const VariationalState& state, std::span<const double> theta,
                               std::size_t k);

}  // namespace qrotor
