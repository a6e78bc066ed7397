#pragma once

#include <vector>

#include "qrotor/ansatz.hpp"

namespace qrotor {

/// ln psi = sum_{i<j} w_ij cos(theta_i - theta_j), one parameter per pair in
/// lexicographic (i, j) order.
class JastrowAnsatz final : public Ansatz {
 public:
  explicit JastrowAnsatz(const Lattice& lattice);

  AnsatzKind kind() const override { return AnsatzKind::Jastrow; }
  AnsatzSpec spec() const override { return {AnsatzKind::Jastrow, {}, {}}; }
  std::size_t num_params() const override { return num_params_; }
  std::vector<ParamBlock> layout() const override;

  cplx log_psi(std::span<const cplx> alpha, std::span<const double> theta) const override;
  cplx log_derivatives(std::span<const cplx> alpha, std::span<const double> theta,
                       std::span<cplx> out) const override;
  cplx angle_gradient(std::span<const cplx> alpha, std::span<const double> theta,
                      std::span<cplx> grad) const override;
  void angle_derivatives(std::span<const cplx> alpha, std::span<const double> theta,
                         AngleDerivatives& out) const override;

  std::size_t pair_index(std::size_t i, std::size_t j) const;

 private:
  std::size_t num_params_;
};

/// Circular RBM with the hidden units integrated out:
///   ln psi = sum_j a_j . n_j + sum_k P(x_k . x_k),  x_k = b_k + sum_j w_jk n_j,
/// where P(u) is the ln I0 Taylor polynomial written in u = z^2.
///
/// Layout: a (N x 2) if enabled, b (N_h x 2) if enabled, then the weights:
/// a dense N x N_h matrix, or for the convolutional variant one kernel per
/// hidden channel (channels x taps) shared across sites.
class RbmAnsatz final : public Ansatz {
 public:
  RbmAnsatz(const Lattice& lattice, const RbmHyper& hyper);

  AnsatzKind kind() const override { return AnsatzKind::CircularRBM; }
  AnsatzSpec spec() const override { return {AnsatzKind::CircularRBM, {}, hyper_}; }
  std::size_t num_params() const override { return num_params_; }
  std::vector<ParamBlock> layout() const override;

  cplx log_psi(std::span<const cplx> alpha, std::span<const double> theta) const override;
  cplx log_derivatives(std::span<const cplx> alpha, std::span<const double> theta,
                       std::span<cplx> out) const override;
  cplx angle_gradient(std::span<const cplx> alpha, std::span<const double> theta,
                      std::span<cplx> grad) const override;
  void angle_derivatives(std::span<const cplx> alpha, std::span<const double> theta,
                         AngleDerivatives& out) const override;

  std::size_t num_hidden() const { return num_hidden_; }

 private:
  struct Link {
    int visible;
    int param;  // index into alpha
  };
  // Hidden-unit pre-activations (X_k, Y_k) for every hidden unit.
  void hidden_fields(std::span<const cplx> alpha, std::span<const double> c,
                     std::span<const double> s, std::vector<cplx>& x, std::vector<cplx>& y) const;

  RbmHyper hyper_;
  std::size_t num_hidden_ = 0;
  std::size_t a_offset_ = 0, b_offset_ = 0, w_offset_ = 0;
  std::size_t num_params_ = 0;
  int taps_ = 0;
  // links_[k] lists the (visible site, weight parameter) pairs feeding hidden
  // unit k, sorted by visible site so repeated sites are adjacent.
  std::vector<std::vector<Link>> links_;
};

/// Periodic convolutional network on the lattice.
///
///   h_0 = {cos n theta_k, sin n theta_k}_{n=1..K}  (channel 2(n-1) is cos, 2n-1 is sin)
///   h_d = f(b_d + w_d * h_{d-1}),  d = 1..D-1,  f = poly_log_I0
///   ln psi = (2 K N)^{-1/2} sum_c sum_k [w_D^c * h_{D-1}^c]_k
///
/// '*' is a lattice cross-correlation with kernel_size taps per dimension;
/// circular padding along periodic directions, zero padding along open ones.
/// Layout per hidden layer: weights [C_out][C_in][taps] then biases [C_out];
/// the output layer is [C_{D-1}][taps]. 2D taps are ordered (dy, dx) row-major.
class CnnAnsatz final : public Ansatz {
 public:
  CnnAnsatz(const Lattice& lattice, const CnnHyper& hyper);

  AnsatzKind kind() const override { return AnsatzKind::CNN; }
  AnsatzSpec spec() const override { return {AnsatzKind::CNN, hyper_, {}}; }
  std::size_t num_params() const override { return num_params_; }
  std::vector<ParamBlock> layout() const override;
  std::vector<std::size_t> output_layer_params() const override;

  cplx log_psi(std::span<const cplx> alpha, std::span<const double> theta) const override;
  cplx log_derivatives(std::span<const cplx> alpha, std::span<const double> theta,
                       std::span<cplx> out) const override;
  cplx angle_gradient(std::span<const cplx> alpha, std::span<const double> theta,
                      std::span<cplx> grad) const override;
  void angle_derivatives(std::span<const cplx> alpha, std::span<const double> theta,
                         AngleDerivatives& out) const override;

 private:
  struct Workspace;
  int channels(int layer) const { return layer == 0 ? 2 * hyper_.fourier_modes : hidden_channels_; }
  cplx forward(std::span<const cplx> alpha, std::span<const double> theta, Workspace& ws) const;
  // Reverse pass; fills parameter derivatives when `out` is non-empty and
  // always fills the angle gradient.
  void backward(std::span<const cplx> alpha, std::span<const double> theta, Workspace& ws,
                std::span<cplx> out, std::span<cplx> grad) const;

  CnnHyper hyper_;
  int hidden_channels_ = 0;
  int taps_ = 0;
  double prefactor_ = 0.0;
  std::vector<int> neighbor_;  // [site][tap] -> site or -1
  std::vector<std::size_t> w_offset_, b_offset_;  // per layer 1..D (index by layer)
  std::size_t num_params_ = 0;
  // active_[k][d]: sites whose layer-d activations depend on theta_k.
  std::vector<std::vector<std::vector<int>>> active_;
};

/// Conv neighbor table shared by the CNN and the convolutional RBM.
std::vector<int> conv_neighbors(const Lattice& lattice, int kernel_size, int& taps);

}  // namespace qrotor
