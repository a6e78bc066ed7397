#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "qrotor/ansatz.hpp"
#include "qrotor/sampling.hpp"

namespace qrotor {

struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

inline constexpr int kDefaultResamples = 200;
inline constexpr std::uint64_t kBootstrapSeed = 0x5eed'b007ULL;

/// Standard deviation of the bootstrap distribution of the mean, resampling
/// whole contiguous blocks (chains) with replacement. values.size() must be
/// a multiple of n_blocks. With fewer than two blocks the data are cut into
/// min(n, 20) contiguous batches instead.
double bootstrap_sigma(std::span<const double> values, std::size_t n_blocks,
                       int n_resamples = kDefaultResamples, std::uint64_t seed = kBootstrapSeed);

/// Mean of per-sample values over a sample set. Weighted (quadrature) sets
/// give the weighted mean with sigma 0; Monte Carlo sets use the chain-block
/// bootstrap.
Estimate sample_mean(std::span<const double> values, const SampleSet& samples,
                     int n_resamples = kDefaultResamples);

/// -(J/N) sum over bonds of cos(theta_k - theta_l), per sample.
std::vector<double> potential_energy_values(const SampleSet& samples, const Lattice& lattice,
                                            double J);
Estimate potential_energy_density(const SampleSet& samples, const Lattice& lattice, double J);

struct Magnetization {
  Estimate M;  ///< mean over samples of |sum_k n_k| / N
  Estimate Mx, My;  ///< components of the sample-averaged n, site-averaged
};
Magnetization magnetization(const SampleSet& samples);

/// Site average of the circular variance -2 ln R_k. +inf if any R_k = 0.
double mean_circular_variance(const SampleSet& samples);

/// v(A) = (1/l^2) sum over the directed edges of the loop of wrap(theta_next - theta_cur).
double loop_vorticity(const Plaquette& loop, std::span<const double> theta, int ell);

/// v_l averaged over all l x l loops, then over samples. 2D only.
Estimate vorticity(const SampleSet& samples, const Lattice& lattice, int ell);

struct FidelityEstimate {
  double F = 0.0;   ///< Re of the product, clamped to [0, 1]
  double sigma = 0.0;
  std::complex<double> raw{0.0, 0.0};
  bool clamped = false;
  bool overlap_loss = false;
};

/// log of the (weighted) mean of exp(z_i), without overflow.
std::complex<double> log_mean_exp(std::span<const std::complex<double>> z,
                                  std::span<const double> weights = {});

/// F = <psi_t / psi_0>_{|psi_0|^2} <psi_0 / psi_t>_{|psi_t|^2}, both factors
/// accumulated in log space.
FidelityEstimate fidelity(const VariationalState& state0, const VariationalState& state_t,
                          const SampleSet& samples0, const SampleSet& samples_t,
                          int n_resamples = kDefaultResamples);

/// First time F crosses 0.5, by linear interpolation. nullopt if it never
/// does. Throws if the series starts below 0.5.
std::optional<double> half_fidelity_time(std::span<const double> t, std::span<const double> F);

struct ObservableRow {
  double t = 0.0;
  Estimate e_pot;
  Magnetization mag;
  double var_mean = 0.0;
  std::map<int, Estimate> vort;
  FidelityEstimate fidelity;
};

}  // namespace qrotor
