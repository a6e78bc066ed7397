#include "qrotor/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/bessel.hpp>

#include "qrotor/error.hpp"
#include "qrotor/kernels.hpp"
#include "qrotor/parallel.hpp"
#include "qrotor/rng.hpp"

namespace qrotor {

void HmcConfig::validate() const {
  if (L0 < 1 || Nw < 1 || Np < 1 || Ns < 1 || Nc < 1 || workers < 1)
    throw ConfigError("hmc: L0, Nw, Np, Ns, Nc and workers must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("hmc: gamma must lie in [0, 1)");
  if (!(delta_target > 0.0 && delta_target < 1.0))
    throw ConfigError("hmc: delta_target must lie in (0, 1)");
  if (!(eps0 > 0.0) || !(eps_max >= eps0)) throw ConfigError("hmc: need 0 < eps0 <= eps_max");
  if (!(variance_floor > 0.0) || !(variance_ceiling >= variance_floor))
    throw ConfigError("hmc: need 0 < variance_floor <= variance_ceiling");
  if (!(divergence_threshold > 0.0)) throw ConfigError("hmc: divergence_threshold must be > 0");
}

double StateTarget::log_prob(std::span<const double> theta, std::span<double> grad) const {
  thread_local std::vector<cplx> g;
  g.resize(theta.size());
  const cplx lp = state_.model->angle_gradient(state_.alpha, theta, g);
  for (std::size_t k = 0; k < theta.size(); ++k) grad[k] = 2.0 * g[k].real();
  return 2.0 * lp.real();
}

VonMisesTarget::VonMisesTarget(std::vector<double> kappa, std::vector<double> mu)
    : kappa_(std::move(kappa)), mu_(std::move(mu)) {
  if (mu_.empty()) mu_.assign(kappa_.size(), 0.0);
  if (mu_.size() != kappa_.size()) throw ConfigError("von Mises: kappa/mu length mismatch");
  for (double k : kappa_)
    if (!(k >= 0.0)) throw ConfigError("von Mises: kappa must be >= 0");
}

double VonMisesTarget::log_prob(std::span<const double> theta, std::span<double> grad) const {
  double lp = 0.0;
  for (std::size_t k = 0; k < kappa_.size(); ++k) {
    const double d = theta[k] - mu_[k];
    lp += kappa_[k] * std::cos(d);
    grad[k] = -kappa_[k] * std::sin(d);
  }
  return lp;
}

double VonMisesTarget::circular_variance(std::size_t k) const {
  const double kap = kappa_.at(k);
  if (kap == 0.0) return std::numeric_limits<double>::infinity();
  const double r = boost::math::cyl_bessel_i(1, kap) / boost::math::cyl_bessel_i(0, kap);
  return -2.0 * std::log(r);
}

LeapfrogResult leapfrog(std::span<double> theta, std::span<double> pi, std::span<double> grad,
                        double eps, int L, std::span<const double> mass, const Target& target) {
  const auto& kt = kernels::active();
  const std::size_t n = theta.size();
  thread_local std::vector<double> inv_mass, ones;
  inv_mass.resize(n);
  ones.assign(n, 1.0);
  for (std::size_t k = 0; k < n; ++k) inv_mass[k] = 1.0 / mass[k];

  // grad holds d ln p / d theta = -dV/dtheta, so kicks add it.
  LeapfrogResult res;
  kt.scaled_axpy(0.5 * eps, ones.data(), grad.data(), pi.data(), n);
  for (int step = 0; step < L; ++step) {
    kt.scaled_axpy(eps, inv_mass.data(), pi.data(), theta.data(), n);
    res.log_prob = target.log_prob(theta, grad);
    bool finite = std::isfinite(res.log_prob);
    for (std::size_t k = 0; finite && k < n; ++k) finite = std::isfinite(grad[k]);
    if (!finite) {
      res.finite = false;
      return res;
    }
    const double kick = step + 1 < L ? eps : 0.5 * eps;
    kt.scaled_axpy(kick, ones.data(), grad.data(), pi.data(), n);
  }
  return res;
}

namespace {

double kinetic(std::span<const double> pi, std::span<const double> mass) {
  thread_local std::vector<double> inv_mass;
  inv_mass.resize(mass.size());
  for (std::size_t k = 0; k < mass.size(); ++k) inv_mass[k] = 1.0 / mass[k];
  return 0.5 * kernels::active().weighted_sumsq(pi.data(), inv_mass.data(), pi.size());
}

}  // namespace

Transition propose_and_accept(ChainState& chain, int L, const Target& target,
                              const HmcConfig& cfg) {
  const std::size_t n = chain.theta.size();
  thread_local std::vector<double> theta, pi, grad;
  theta = chain.theta;
  grad = chain.grad;
  pi.resize(n);
  std::normal_distribution<double> normal;
  for (std::size_t k = 0; k < n; ++k) pi[k] = std::sqrt(chain.mass[k]) * normal(chain.rng);

  const double h0 = kinetic(pi, chain.mass) - chain.log_prob;
  const LeapfrogResult lf = leapfrog(theta, pi, grad, chain.eps, L, chain.mass, target);
  ++chain.proposals;

  Transition tr;
  const double dh = lf.finite ? kinetic(pi, chain.mass) - lf.log_prob - h0
                              : std::numeric_limits<double>::infinity();
  // The uniform draw is consumed on every path so the stream position does
  // not depend on whether a proposal diverged.
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(chain.rng);
  if (!std::isfinite(dh) || std::abs(dh) > cfg.divergence_threshold) {
    tr.divergent = true;
    ++chain.divergences;
    return tr;
  }
  tr.accept_prob = dh <= 0.0 ? 1.0 : std::exp(-dh);
  if (u < tr.accept_prob) {
    tr.accepted = true;
    ++chain.accepted;
    for (std::size_t k = 0; k < n; ++k) chain.theta[k] = wrap_angle(theta[k]);
    chain.log_prob = lf.log_prob;
    chain.grad = grad;
  }
  return tr;
}

int jittered_length(std::mt19937_64& rng, int L0, double gamma) {
  const int lo = std::max(1, static_cast<int>(std::lround((1.0 - gamma) * L0)));
  const int hi = std::max(lo, static_cast<int>(std::lround((1.0 + gamma) * L0)));
  if (lo == hi) return lo;
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::vector<WarmupWindow> warmup_schedule(int Nw, int Np) {
  std::vector<WarmupWindow> w;
  w.push_back({Nw / 12, false});
  for (int j = 0; j < Np; ++j) w.push_back({(Nw / 36) << j, true});
  w.push_back({Nw / 18, false});
  for (auto& win : w) win.length = std::max(win.length, 1);
  return w;
}

DualAverage::DualAverage(double eps_init, double delta, double gamma, double t0, double kappa,
                         double eps_max)
    : mu_(std::log(10.0 * eps_init)),
      log_eps_(std::log(eps_init)),
      delta_(delta),
      gamma_(gamma),
      t0_(t0),
      kappa_(kappa),
      log_eps_max_(std::log(eps_max)) {}

void DualAverage::update(double accept_prob) {
  const double w = 1.0 / (m_ + t0_);
  h_bar_ = (1.0 - w) * h_bar_ + w * (delta_ - accept_prob);
  log_eps_ = std::min(mu_ - std::sqrt(m_) / gamma_ * h_bar_, log_eps_max_);
  const double eta = std::pow(m_, -kappa_);
  log_eps_bar_ = eta * log_eps_ + (1.0 - eta) * log_eps_bar_;
  m_ += 1.0;
}

double DualAverage::iterate() const { return std::exp(log_eps_); }

double DualAverage::averaged() const {
  return m_ > 1.0 ? std::exp(log_eps_bar_) : std::exp(log_eps_);
}

ChainState init_chain(const Target& target, const HmcConfig& cfg, std::mt19937_64 rng) {
  ChainState c;
  c.rng = std::move(rng);
  const std::size_t n = target.dim();
  c.theta.resize(n);
  std::uniform_real_distribution<double> uni(-kPi, kPi);
  for (auto& t : c.theta) t = wrap_angle(uni(c.rng));
  c.mass.assign(n, 1.0);
  c.eps = cfg.eps0;
  c.grad.resize(n);
  c.log_prob = target.log_prob(c.theta, c.grad);
  if (!std::isfinite(c.log_prob))
    throw NumericalError("hmc: non-finite log density at the initial point", "hmc_init");
  return c;
}

void warmup(ChainState& chain, const HmcConfig& cfg, const Target& target) {
  const std::size_t n = chain.theta.size();
  std::vector<double> draws;
  // One dual-averaging run spans the whole warmup; restarting it per window
  // leaves the short final window dominated by the restart transient.
  auto fresh = [&](double eps) {
    return DualAverage(eps, cfg.delta_target, cfg.da_gamma, cfg.da_t0, cfg.da_kappa, cfg.eps_max);
  };
  DualAverage da = fresh(chain.eps);
  for (const WarmupWindow& win : warmup_schedule(cfg.Nw, cfg.Np)) {
    double eps_start = chain.eps;
    for (int attempt = 0;; ++attempt) {
      draws.clear();
      std::size_t accepted = 0;
      for (int i = 0; i < win.length; ++i) {
        chain.eps = da.iterate();
        const int L = jittered_length(chain.rng, cfg.L0, cfg.gamma);
        const Transition tr = propose_and_accept(chain, L, target, cfg);
        accepted += tr.accepted;
        da.update(tr.accept_prob);
        if (win.slow) draws.insert(draws.end(), chain.theta.begin(), chain.theta.end());
      }
      if (accepted > 0) {
        chain.eps = std::min(da.averaged(), cfg.eps_max);
        break;
      }
      if (attempt == 1) {
        std::ostringstream msg;
        msg << "hmc: warmup window of " << win.length
            << " transitions rejected every proposal twice (eps=" << eps_start << ")";
        throw NumericalError(msg.str(), "hmc_warmup_stuck");
      }
      eps_start *= 0.5;
      da = fresh(eps_start);
    }
    if (win.slow) {
      const SiteCircularStats st = circular_site_stats(draws, n);
      for (std::size_t k = 0; k < n; ++k) {
        // The variance estimate is the inverse mass (standard adaptive HMC).
        const double v = st.variance[k];
        const double var = std::isfinite(v)
                               ? std::clamp(v, cfg.variance_floor, cfg.variance_ceiling)
                               : cfg.variance_ceiling;
        chain.mass[k] = 1.0 / var;
      }
    }
  }
  chain.proposals = chain.accepted = chain.divergences = 0;
}

double split_rhat(std::span<const double> values, std::size_t n_chains, std::size_t per_chain) {
  const std::size_t half = per_chain / 2;
  if (half < 2) return 1.0;
  const std::size_t m = 2 * n_chains;
  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < n_chains; ++c) {
    for (std::size_t h = 0; h < 2; ++h) {
      // Odd chain lengths drop the middle draw.
      const double* x = values.data() + c * per_chain + (h ? per_chain - half : 0);
      double mean = 0.0;
      for (std::size_t i = 0; i < half; ++i) mean += x[i];
      mean /= static_cast<double>(half);
      double var = 0.0;
      for (std::size_t i = 0; i < half; ++i) var += (x[i] - mean) * (x[i] - mean);
      means[2 * c + h] = mean;
      vars[2 * c + h] = var / static_cast<double>(half - 1);
    }
  }
  double grand = 0.0, W = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    grand += means[j];
    W += vars[j];
  }
  grand /= static_cast<double>(m);
  W /= static_cast<double>(m);
  double B_over_n = 0.0;
  for (std::size_t j = 0; j < m; ++j) B_over_n += (means[j] - grand) * (means[j] - grand);
  B_over_n /= static_cast<double>(m - 1);
  if (W <= 0.0) return B_over_n > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double nd = static_cast<double>(half);
  return std::sqrt(((nd - 1.0) / nd * W + B_over_n) / W);
}

HmcRun sample(std::vector<ChainState> chains, int Ns, const Target& target, const HmcConfig& cfg) {
  if (chains.empty()) throw ConfigError("hmc: no chains to sample");
  if (Ns < 1) throw ConfigError("hmc: Ns must be >= 1");
  const std::size_t n = target.dim();
  const std::size_t nc = chains.size(), ns = static_cast<std::size_t>(Ns);

  HmcRun run;
  run.samples.n_sites = n;
  run.samples.n_chains = nc;
  run.samples.per_chain = ns;
  run.samples.theta.resize(nc * ns * n);

  parallel_for(nc, static_cast<std::size_t>(cfg.workers), [&](std::size_t c) {
    ChainState& ch = chains[c];
    ch.proposals = ch.accepted = ch.divergences = 0;
    double* out = run.samples.theta.data() + c * ns * n;
    for (std::size_t i = 0; i < ns; ++i) {
      const int L = jittered_length(ch.rng, cfg.L0, cfg.gamma);
      propose_and_accept(ch, L, target, cfg);
      std::copy(ch.theta.begin(), ch.theta.end(), out + i * n);
    }
  });

  HmcDiagnostics& d = run.diagnostics;
  double acc = 0.0;
  for (const ChainState& ch : chains) {
    ChainDiagnostics cd;
    cd.acceptance = static_cast<double>(ch.accepted) / static_cast<double>(ch.proposals);
    cd.divergences = ch.divergences;
    cd.eps = ch.eps;
    cd.mass = ch.mass;
    acc += cd.acceptance;
    d.divergences += cd.divergences;
    d.chains.push_back(std::move(cd));
  }
  d.mean_acceptance = acc / static_cast<double>(nc);

  if (nc >= 1 && ns >= 4) {
    std::vector<double> cs(nc * ns), sn(nc * ns);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < nc * ns; ++i) {
        cs[i] = std::cos(run.samples.theta[i * n + k]);
        sn[i] = std::sin(run.samples.theta[i * n + k]);
      }
      for (const auto* v : {&cs, &sn}) {
        const double r = split_rhat(*v, nc, ns);
        d.max_rhat = std::max(d.max_rhat, r);
        if (!(r <= 1.1)) {
          std::ostringstream msg;
          msg << "split R-hat " << r << " on " << (v == &cs ? "cos" : "sin") << " theta_" << k;
          d.warnings.push_back(msg.str());
        }
      }
    }
  }
  run.chains = std::move(chains);
  return run;
}

HmcRun run_hmc(const Target& target, const HmcConfig& cfg, std::uint64_t seed,
               const std::vector<std::uint64_t>& stream) {
  cfg.validate();
  const std::size_t nc = static_cast<std::size_t>(cfg.Nc);
  std::vector<ChainState> chains(nc);
  parallel_for(nc, static_cast<std::size_t>(cfg.workers), [&](std::size_t c) {
    std::vector<std::uint64_t> key = stream;
    key.push_back(c);
    chains[c] = init_chain(target, cfg, keyed_rng(seed, key));
    warmup(chains[c], cfg, target);
  });
  return sample(std::move(chains), cfg.Ns, target, cfg);
}

}  // namespace qrotor
