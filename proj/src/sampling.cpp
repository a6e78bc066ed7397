#include "qrotor/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qrotor/error.hpp"

namespace qrotor {

std::vector<double> SampleSet::normalized_weights() const {
  if (weights.empty()) return std::vector<double>(size(), 1.0 / static_cast<double>(size()));
  return weights;
}

SampleSet uniform_grid(std::size_t n_sites, std::size_t q) {
  if (q < 1) throw ConfigError("grid: need at least one point per site");
  double total = 1.0;
  for (std::size_t k = 0; k < n_sites; ++k) total *= static_cast<double>(q);
  if (total > 1e7) throw GuardExceeded("grid: q^N exceeds 1e7 points");
  const auto count = static_cast<std::size_t>(total);

  SampleSet set;
  set.n_sites = n_sites;
  set.n_chains = 1;
  set.per_chain = count;
  set.theta.resize(count * n_sites);
  std::vector<std::size_t> idx(n_sites, 0);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t k = 0; k < n_sites; ++k)
      set.theta[i * n_sites + k] = -kPi + kTwoPi * static_cast<double>(idx[k]) / static_cast<double>(q);
    for (std::size_t k = n_sites; k-- > 0;) {
      if (++idx[k] < q) break;
      idx[k] = 0;
    }
  }
  return set;
}

SampleSet quadrature_grid(const VariationalState& state, std::size_t q) {
  SampleSet set = uniform_grid(state.num_sites(), q);
  const std::size_t n = set.size();
  std::vector<double> logp(n);
  for (std::size_t i = 0; i < n; ++i) logp[i] = 2.0 * log_psi(state, set.row(i)).real();
  const double top = *std::max_element(logp.begin(), logp.end());
  set.weights.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += set.weights[i] = std::exp(logp[i] - top);
  for (auto& w : set.weights) w /= total;
  return set;
}

}  // namespace qrotor
