#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qrotor/ansatz.hpp"

namespace qrotor {

/// Configurations with chain structure. Rows are chain-major: chain c owns
/// rows [c * per_chain, (c + 1) * per_chain). When `weights` is empty every
/// row has weight 1/size(); otherwise weights are normalized to sum to 1
/// (quadrature grids use this).
struct SampleSet {
  std::size_t n_sites = 0;
  std::size_t n_chains = 1;
  std::size_t per_chain = 0;
  std::vector<double> theta;
  std::vector<double> weights;

  std::size_t size() const { return n_sites ? theta.size() / n_sites : 0; }
  bool weighted() const { return !weights.empty(); }
  std::span<const double> row(std::size_t i) const {
    return {theta.data() + i * n_sites, n_sites};
  }
  double weight(std::size_t i) const {
    return weights.empty() ? 1.0 / static_cast<double>(size()) : weights[i];
  }
  /// Normalized weight vector (materialized for unweighted sets).
  std::vector<double> normalized_weights() const;
};

/// Tensor-product uniform grid with q points per site, weighted by |psi|^2.
/// The periodic trapezoid rule is spectrally accurate for smooth periodic
/// integrands, so averages over this set serve as the noiseless reference
/// for Monte Carlo estimates. Guarded at q^N <= 1e7.
SampleSet quadrature_grid(const VariationalState& state, std::size_t q);

/// Same grid with uniform weights (|psi|^2 ignored).
SampleSet uniform_grid(std::size_t n_sites, std::size_t q);

}  // namespace qrotor
