#include "qrotor/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "qrotor/error.hpp"
#include "qrotor/rng.hpp"

namespace qrotor {

double bootstrap_sigma(std::span<const double> values, std::size_t n_blocks, int n_resamples,
                       std::uint64_t seed) {
  const std::size_t n = values.size();
  if (n < 2) throw ConfigError("bootstrap: need at least two values");
  if (n_resamples < 2) throw ConfigError("bootstrap: need at least two resamples");
  if (n_blocks >= 2 && n % n_blocks != 0)
    throw ConfigError("bootstrap: values do not split evenly into chain blocks");
  if (n_blocks < 2) n_blocks = std::min<std::size_t>(n, 20);
  const std::size_t per = n / n_blocks;
  if (per == 0) throw ConfigError("bootstrap: more blocks than values");

  std::vector<double> block_mean(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < per; ++i) s += values[b * per + i];
    block_mean[b] = s / static_cast<double>(per);
  }

  auto rng = keyed_rng(seed, {n, n_blocks});
  std::uniform_int_distribution<std::size_t> pick(0, n_blocks - 1);
  double m1 = 0.0, m2 = 0.0;
  for (int r = 0; r < n_resamples; ++r) {
    double s = 0.0;
    for (std::size_t b = 0; b < n_blocks; ++b) s += block_mean[pick(rng)];
    s /= static_cast<double>(n_blocks);
    m1 += s;
    m2 += s * s;
  }
  const double R = n_resamples;
  const double var = (m2 - m1 * m1 / R) / (R - 1.0);
  return std::sqrt(std::max(var, 0.0));
}

Estimate sample_mean(std::span<const double> values, const SampleSet& samples, int n_resamples) {
  if (values.size() != samples.size()) throw ConfigError("sample_mean: size mismatch");
  Estimate e;
  if (samples.weighted()) {
    for (std::size_t i = 0; i < values.size(); ++i) e.value += samples.weights[i] * values[i];
    return e;
  }
  double s = 0.0;
  for (double v : values) s += v;
  e.value = s / static_cast<double>(values.size());
  if (values.size() >= 2) e.sigma = bootstrap_sigma(values, samples.n_chains, n_resamples);
  return e;
}

std::vector<double> potential_energy_values(const SampleSet& samples, const Lattice& lattice,
                                            double J) {
  const double N = static_cast<double>(lattice.num_sites());
  std::vector<double> v(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) v[i] = bond_energy(lattice, samples.row(i), J) / N;
  return v;
}

Estimate potential_energy_density(const SampleSet& samples, const Lattice& lattice, double J) {
  return sample_mean(potential_energy_values(samples, lattice, J), samples);
}

Magnetization magnetization(const SampleSet& samples) {
  const std::size_t n = samples.size(), N = samples.n_sites;
  std::vector<double> m(n), mx(n), my(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto th = samples.row(i);
    double cx = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      cx += std::cos(th[k]);
      sy += std::sin(th[k]);
    }
    mx[i] = cx / static_cast<double>(N);
    my[i] = sy / static_cast<double>(N);
    m[i] = std::hypot(mx[i], my[i]);
  }
  return {sample_mean(m, samples), sample_mean(mx, samples), sample_mean(my, samples)};
}

double mean_circular_variance(const SampleSet& samples) {
  const SiteCircularStats st = circular_site_stats(samples.theta, samples.n_sites, samples.weights);
  double s = 0.0;
  for (double v : st.variance) s += v;
  return s / static_cast<double>(samples.n_sites);
}

double loop_vorticity(const Plaquette& loop, std::span<const double> theta, int ell) {
  double circ = 0.0;
  for (std::size_t e = 0; e + 1 < loop.sites.size(); ++e)
    circ += wrap_angle(theta[loop.sites[e + 1]] - theta[loop.sites[e]]);
  return circ / static_cast<double>(ell * ell);
}

Estimate vorticity(const SampleSet& samples, const Lattice& lattice, int ell) {
  if (lattice.num_dims() != 2) throw ConfigError("vorticity: needs a 2D lattice");
  const auto& loops = lattice.plaquettes(ell);
  if (loops.empty()) throw ConfigError("vorticity: no loops of the requested size");
  std::vector<double> v(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double s = 0.0;
    for (const auto& loop : loops) s += loop_vorticity(loop, samples.row(i), ell);
    v[i] = s / static_cast<double>(loops.size());
  }
  return sample_mean(v, samples);
}

std::complex<double> log_mean_exp(std::span<const std::complex<double>> z,
                                  std::span<const double> weights) {
  if (z.empty()) throw ConfigError("log_mean_exp: empty input");
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& x : z) top = std::max(top, x.real());
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double w = weights.empty() ? 1.0 / static_cast<double>(z.size()) : weights[i];
    acc += w * std::exp(z[i] - top);
  }
  return top + std::log(acc);
}

namespace {

constexpr double kOverlapLossLog = -700.0;

std::vector<std::complex<double>> log_ratio(const VariationalState& num,
                                            const VariationalState& den, const SampleSet& s) {
  std::vector<std::complex<double>> z(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) z[i] = log_psi(num, s.row(i)) - log_psi(den, s.row(i));
  return z;
}

// Per-block log-mean-exp values so the bootstrap can resample chains.
std::vector<std::complex<double>> block_log_means(std::span<const std::complex<double>> z,
                                                  std::size_t n_blocks) {
  if (n_blocks < 2) n_blocks = std::min<std::size_t>(z.size(), 20);
  const std::size_t per = z.size() / n_blocks;
  std::vector<std::complex<double>> out(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) out[b] = log_mean_exp(z.subspan(b * per, per));
  return out;
}

// log of the mean of exp over a resampled multiset of equally sized blocks.
std::complex<double> combine_blocks(std::span<const std::complex<double>> block_logs,
                                    std::span<const std::size_t> pick) {
  std::vector<std::complex<double>> chosen(pick.size());
  for (std::size_t i = 0; i < pick.size(); ++i) chosen[i] = block_logs[pick[i]];
  return log_mean_exp(chosen);
}

}  // namespace

FidelityEstimate fidelity(const VariationalState& state0, const VariationalState& state_t,
                          const SampleSet& samples0, const SampleSet& samples_t,
                          int n_resamples) {
  const auto za = log_ratio(state_t, state0, samples0);
  const auto zb = log_ratio(state0, state_t, samples_t);
  const auto la = log_mean_exp(za, samples0.weights);
  const auto lb = log_mean_exp(zb, samples_t.weights);

  FidelityEstimate f;
  if (la.real() < kOverlapLossLog && lb.real() < kOverlapLossLog) {
    f.overlap_loss = true;
    f.clamped = true;
    return f;
  }
  f.raw = std::exp(la + lb);
  f.F = std::clamp(f.raw.real(), 0.0, 1.0);
  f.clamped = f.F != f.raw.real();

  if (samples0.weighted() || samples_t.weighted()) return f;

  const auto ba = block_log_means(za, samples0.n_chains);
  const auto bb = block_log_means(zb, samples_t.n_chains);
  auto rng = keyed_rng(kBootstrapSeed, {ba.size(), bb.size(), 0xf1de});
  std::uniform_int_distribution<std::size_t> pa(0, ba.size() - 1), pb(0, bb.size() - 1);
  std::vector<std::size_t> ia(ba.size()), ib(bb.size());
  double m1 = 0.0, m2 = 0.0;
  for (int r = 0; r < n_resamples; ++r) {
    for (auto& i : ia) i = pa(rng);
    for (auto& i : ib) i = pb(rng);
    const double v = std::exp(combine_blocks(ba, ia) + combine_blocks(bb, ib)).real();
    m1 += v;
    m2 += v * v;
  }
  const double R = n_resamples;
  f.sigma = std::sqrt(std::max((m2 - m1 * m1 / R) / (R - 1.0), 0.0));
  return f;
}

std::optional<double> half_fidelity_time(std::span<const double> t, std::span<const double> F) {
  if (t.size() != F.size() || t.empty()) throw ConfigError("half_fidelity_time: bad series");
  if (F[0] < 0.5) throw ConfigError("half_fidelity_time: series starts below 0.5");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (F[i] < 0.5) {
      const double s = (F[i - 1] - 0.5) / (F[i - 1] - F[i]);
      return t[i - 1] + s * (t[i] - t[i - 1]);
    }
  }
  return std::nullopt;
}

}  // namespace qrotor
