#include "qrotor/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "qrotor/error.hpp"
#include "qrotor/exact.hpp"
#include "qrotor/rng.hpp"

namespace qrotor {

namespace {

constexpr std::size_t kMaxWarnings = 50;

void add_warning(std::vector<std::string>& w, std::string msg) {
  if (w.size() < kMaxWarnings) w.push_back(std::move(msg));
}

std::vector<std::uint64_t> stream_key(StreamTag tag, const StageContext& ctx) {
  return {static_cast<std::uint64_t>(tag), ctx.step, ctx.attempt,
          static_cast<std::uint64_t>(ctx.stage)};
}

std::vector<double> real_parts(const std::vector<cplx>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
  return out;
}

Eigen::VectorXcd to_eigen(const std::vector<cplx>& v) {
  return Eigen::Map<const Eigen::VectorXcd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<cplx> to_std(const Eigen::VectorXcd& v) {
  return std::vector<cplx>(v.data(), v.data() + v.size());
}

}  // namespace

StageEvaluator::StageEvaluator(std::shared_ptr<const Ansatz> model, EvalOptions opt)
    : model_(std::move(model)), opt_(std::move(opt)) {
  opt_.hmc.workers = static_cast<int>(std::max<std::size_t>(1, opt_.workers));
  opt_.hmc.validate();
  opt_.regularization.validate();
}

SampleSet StageEvaluator::draw(const VariationalState& state, const StageContext& ctx) const {
  if (opt_.sampling.kind == SamplerKind::Quadrature)
    return quadrature_grid(state, opt_.sampling.quadrature_points);
  StateTarget target(state);
  return run_hmc(target, opt_.hmc, opt_.seed, stream_key(opt_.tag, ctx)).samples;
}

StageEval StageEvaluator::evaluate(const std::vector<cplx>& alpha, const StageContext& ctx) {
  const VariationalState state{model_, alpha};
  StageEval out;
  const bool reuse = !opt_.sampling.per_stage && ctx.stage > 0 && step_samples_ &&
                     step_samples_->first == ctx.step;
  if (reuse) {
    out.samples = step_samples_->second;
  } else if (opt_.sampling.kind == SamplerKind::Quadrature) {
    out.samples = quadrature_grid(state, opt_.sampling.quadrature_points);
  } else {
    StateTarget target(state);
    HmcRun run = run_hmc(target, opt_.hmc, opt_.seed, stream_key(opt_.tag, ctx));
    out.samples = std::move(run.samples);
    out.hmc = std::move(run.diagnostics);
  }
  if (!opt_.sampling.per_stage && ctx.stage == 0) step_samples_.emplace(ctx.step, out.samples);

  out.qgt = estimate_qgt(state, out.samples, opt_.g, opt_.J, opt_.workers);
  out.sol = tdvp_rhs(out.qgt, opt_.regularization, opt_.mode);
  return out;
}

VariationalState uniform_state(std::shared_ptr<const Ansatz> model, double stddev,
                               std::uint64_t seed) {
  if (model->kind() != AnsatzKind::CNN) return zero_state(std::move(model));
  auto rng = keyed_rng(seed, {static_cast<std::uint64_t>(StreamTag::Init), 1});
  VariationalState s = random_state(std::move(model), stddev, rng);
  for (std::size_t i : s.model->output_layer_params()) s.alpha[i] = 0.0;
  return s;
}

namespace {

TrajectoryRow make_row(const StageEval& ev, const VariationalState& state,
                       const VariationalState& ref_state, const SampleSet& ref_samples, double t,
                       const Lattice& lattice, const std::vector<int>& vort_sizes, double J) {
  TrajectoryRow row;
  row.obs.t = t;
  row.obs.e_pot = potential_energy_density(ev.samples, lattice, J);
  row.obs.mag = magnetization(ev.samples);
  row.obs.var_mean = mean_circular_variance(ev.samples);
  if (lattice.num_dims() == 2)
    for (int l : vort_sizes) row.obs.vort[l] = vorticity(ev.samples, lattice, l);
  row.obs.fidelity = fidelity(ref_state, state, ref_samples, ev.samples);
  row.energy = ev.qgt.e_mean.real();
  row.energy_sigma = sample_mean(real_parts(ev.qgt.e_local), ev.samples).sigma;
  row.e_var = ev.qgt.e_var;
  row.rho = ev.sol.rho;
  row.lambda2 = ev.sol.lambda2;
  row.sigma2_max = ev.sol.sigma2_max;
  row.r2 = ev.sol.r2.r2;
  row.r2_clamped = ev.sol.r2.clamped;
  if (ev.hmc) {
    row.acceptance = ev.hmc->mean_acceptance;
    row.divergences = ev.hmc->divergences;
    row.max_rhat = ev.hmc->max_rhat;
    double eps = 0.0, mass = 0.0;
    std::size_t nm = 0;
    for (const auto& c : ev.hmc->chains) {
      eps += c.eps;
      for (double m : c.mass) {
        mass += m;
        ++nm;
      }
    }
    row.eps_mean = eps / static_cast<double>(ev.hmc->chains.size());
    row.mass_mean = nm ? mass / static_cast<double>(nm) : 0.0;
  }
  return row;
}

void note_row_warnings(const TrajectoryRow& row, const StageEval& ev,
                       std::vector<std::string>& warnings) {
  std::ostringstream where;
  where << "t=" << format_double(row.obs.t) << ": ";
  if (row.r2_clamped)
    add_warning(warnings, where.str() + "r2 clamped from " + format_double(ev.sol.r2.raw));
  constexpr double kClampNoise = 1e-9;
  const double f_raw = row.obs.fidelity.raw.real();
  if (row.obs.fidelity.clamped && (f_raw < -kClampNoise || f_raw > 1.0 + kClampNoise))
    add_warning(warnings, where.str() + "fidelity clamped from " +
                              format_double(row.obs.fidelity.raw.real()));
  if (row.obs.fidelity.overlap_loss) add_warning(warnings, where.str() + "fidelity overlap lost");
  if (ev.hmc)
    for (const auto& w : ev.hmc->warnings) add_warning(warnings, where.str() + w);
}

}  // namespace

Trajectory run_tvmc(const VariationalState& initial, const TvmcOptions& opts,
                    const std::function<void(const TrajectoryRow&)>& on_row,
                    const Checkpoint* resume) {
  if (!(opts.t_end > 0.0)) throw ConfigError("tvmc: t_end must be > 0");
  EvalOptions eo = opts.eval;
  eo.mode = TimeMode::Real;
  const auto model = initial.model;
  const Lattice& lattice = model->lattice();
  StageEvaluator ev(model, eo);
  const bool fsal = eo.sampling.kind == SamplerKind::Quadrature;
  Rk32Integrator integ(opts.ode, fsal);

  Trajectory traj;
  if (!eo.sampling.per_stage && eo.sampling.kind == SamplerKind::Hmc)
    traj.warnings.push_back(
        "per_stage = false: RK stages 1-3 reuse the stage-0 samples, so stage noise is "
        "correlated and the step is biased toward the stage-0 estimate");
  VariationalState ref_state = initial;
  std::vector<cplx> alpha = initial.alpha;
  double t = 0.0, dt = opts.ode.dt0, dt_last = 0.0, R2 = 0.0, r2_prev = 0.0;
  std::uint64_t step = 0;
  if (resume) {
    if (resume->alpha_ref.size() != initial.alpha.size())
      throw ConfigError("tvmc: checkpoint reference parameters do not match the ansatz");
    ref_state.alpha = resume->alpha_ref;
    alpha = resume->alpha;
    t = resume->t;
    dt = resume->dt_next;
    dt_last = resume->dt_last;
    step = resume->step;
    R2 = resume->R2;
    r2_prev = resume->r2_last;
  }

  StageEval cur = ev.evaluate(alpha, StageContext{step, 0, 0});
  SampleSet ref_samples =
      resume ? ev.evaluate(ref_state.alpha, StageContext{0, 0, 0}).samples : cur.samples;

  auto save = [&](const std::vector<cplx>& a) {
    if (opts.checkpoint_path.empty()) return;
    Checkpoint ck = make_checkpoint(VariationalState{model, a}, "quench");
    ck.alpha_ref = ref_state.alpha;
    ck.t = t;
    ck.step = step;
    ck.dt_next = dt;
    ck.dt_last = dt_last;
    ck.R2 = R2;
    ck.r2_last = r2_prev;
    save_checkpoint(opts.checkpoint_path, ck);
  };

  // R2 already covers the step that led to a resumed row.
  auto emit = [&](double dt_used, bool accumulate) {
    TrajectoryRow row = make_row(cur, VariationalState{model, alpha}, ref_state, ref_samples, t,
                                 lattice, opts.vorticity_sizes, eo.J);
    row.step = step;
    row.dt = dt_used;
    if (accumulate) R2 += 0.5 * (r2_prev + row.r2) * dt_used;
    row.R2 = R2;
    r2_prev = row.r2;
    note_row_warnings(row, cur, traj.warnings);
    if (on_row) on_row(row);
    traj.rows.push_back(std::move(row));
  };
  emit(dt_last, false);

  constexpr double kTimeEps = 1e-12;
  while (t < opts.t_end - kTimeEps) {
    std::optional<StageEval> last_k4;
    Rhs rhs = [&](double, const Eigen::VectorXcd& y, const StageContext& ctx) {
      StageEval e = ev.evaluate(to_std(y), ctx);
      Eigen::VectorXcd out = e.sol.alpha_dot;
      if (ctx.stage == 3) last_k4 = std::move(e);
      return out;
    };
    Rk32Integrator::Step st;
    try {
      st = integ.advance(rhs, to_eigen(alpha), t, dt, opts.t_end, step, &cur.sol.alpha_dot);
    } catch (const NumericalError&) {
      save(alpha);
      throw;
    }
    alpha = to_std(st.y);
    t = st.t;
    dt = st.dt_next;
    dt_last = st.dt_used;
    ++step;
    if (fsal && last_k4) {
      cur = std::move(*last_k4);
    } else {
      cur = ev.evaluate(alpha, StageContext{step, 0, 0});
    }
    emit(st.dt_used, true);
    if (opts.checkpoint_every > 0 && step % static_cast<std::uint64_t>(opts.checkpoint_every) == 0)
      save(alpha);
  }
  save(alpha);
  traj.attempts = integ.attempts();
  traj.final_state = VariationalState{model, alpha};
  return traj;
}

GroundStateResult run_ground_state(const VariationalState& initial, const GroundStateOptions& opts,
                                   const std::function<void(const EnergyPoint&)>& on_point) {
  if (!(opts.dtau > 0.0) || opts.max_steps < 1 || opts.window < 2)
    throw ConfigError("ground state: invalid step settings");
  EvalOptions eo = opts.eval;
  eo.mode = TimeMode::Imaginary;
  StageEvaluator ev(initial.model, eo);
  const double N = static_cast<double>(initial.num_sites());

  GroundStateResult res;
  std::vector<cplx> alpha = initial.alpha;
  for (int step = 0; step < opts.max_steps; ++step) {
    const StageEval e = ev.evaluate(alpha, StageContext{static_cast<std::uint64_t>(step), 0, 0});
    EnergyPoint p;
    p.step = step;
    p.tau = step * opts.dtau;
    p.energy = e.qgt.e_mean.real();
    p.sigma = sample_mean(real_parts(e.qgt.e_local), e.samples).sigma;
    p.e_var = e.qgt.e_var;
    p.rho = e.sol.rho;
    p.lambda2 = e.sol.lambda2;
    if (e.hmc) {
      p.acceptance = e.hmc->mean_acceptance;
      for (const auto& w : e.hmc->warnings)
        add_warning(res.warnings, "step " + std::to_string(step) + ": " + w);
    }
    res.trace.push_back(p);
    if (on_point) on_point(p);

    const int n = static_cast<int>(res.trace.size());
    if (n >= std::max(opts.min_steps, opts.window)) {
      const int h = opts.window / 2;
      double ma = 0.0, mb = 0.0, va = 0.0, vb = 0.0;
      for (int i = 0; i < h; ++i) {
        const EnergyPoint& a = res.trace[n - 2 * h + i];
        const EnergyPoint& b = res.trace[n - h + i];
        ma += a.energy;
        mb += b.energy;
        va += a.sigma * a.sigma;
        vb += b.sigma * b.sigma;
      }
      const double diff = std::abs(ma - mb) / h;
      const double se = std::sqrt(va + vb) / h;
      if (diff <= std::max(opts.tolerance * N, 2.0 * se)) {
        res.converged = true;
        break;
      }
    }
    for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] += opts.dtau * e.sol.alpha_dot[i];
  }
  res.state = VariationalState{initial.model, alpha};
  return res;
}

OracleReport oracle_benchmark(const VariationalState& initial, const TvmcOptions& opts, int M,
                              std::size_t grid_points, bool from_variational,
                              const std::function<void(const OracleRow&)>& on_row) {
  const Lattice& lattice = initial.model->lattice();
  const double g = opts.eval.g, J = opts.eval.J;
  const TruncatedBasis basis(lattice.num_sites(), M);
  const SparseMatrix H = build_hamiltonian(basis, lattice, g, J);
  const SparseMatrix B = build_bond_operator(basis, lattice);
  const ExactEvolver evolver(H);

  OracleReport rep;
  rep.basis_dim = basis.dim();
  const std::size_t Q = std::max<std::size_t>(grid_points, static_cast<std::size_t>(basis.local_dim()));
  const DenseConversion conv = vqs_to_dense(initial, basis, Q);
  rep.truncated_mass = conv.truncated_mass;
  DenseState c0 = from_variational ? conv.coefficients : initial_product_state(basis);
  c0.normalize();
  rep.initial_overlap = exact_fidelity(c0, conv.coefficients);

  rep.trajectory = run_tvmc(initial, opts, [&](const TrajectoryRow& r) {
    const DenseState ct = evolver.evolve(c0, r.obs.t);
    const ExactObservables ex = exact_observables(ct, basis, H, B, J);
    OracleRow o;
    o.t = r.obs.t;
    o.e_pot = r.obs.e_pot.value;
    o.e_pot_sigma = r.obs.e_pot.sigma;
    o.e_pot_exact = ex.e_pot;
    o.F = r.obs.fidelity.F;
    o.F_sigma = r.obs.fidelity.sigma;
    o.F_exact = exact_fidelity(c0, ct);
    o.mag_x = r.obs.mag.Mx.value;
    o.mag_x_exact = ex.mag_x;
    o.energy = r.energy;
    o.energy_sigma = r.energy_sigma;
    o.energy_exact = ex.energy;
    o.r2 = r.r2;
    o.R2 = r.R2;
    const double de = std::abs(o.e_pot - o.e_pot_exact);
    const double df = std::abs(o.F - o.F_exact);
    o.within = de <= std::max(kOracleEpotFloor * J, 3.0 * o.e_pot_sigma) &&
               df <= std::max(kOracleFidelityFloor, 3.0 * o.F_sigma);
    rep.max_e_pot_deviation = std::max(rep.max_e_pot_deviation, de);
    rep.max_fidelity_deviation = std::max(rep.max_fidelity_deviation, df);
    rep.within = rep.within && o.within;
    if (on_row) on_row(o);
    rep.rows.push_back(o);
  });
  return rep;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_slope: need two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

SamplerCheckReport sampler_check(const Target& target, const HmcConfig& hmc,
                                 const SamplerCheckConfig& cfg, std::uint64_t seed) {
  SamplerCheckReport rep;
  rep.ns_values = cfg.ns_values;
  rep.l_values = cfg.l_values;
  const auto tag = static_cast<std::uint64_t>(StreamTag::SamplerCheck);

  auto m_and_sigma = [&](const HmcRun& run) {
    const Magnetization m = magnetization(run.samples);
    return std::pair{m.M.value, m.M.sigma};
  };

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < cfg.ns_values.size(); ++i) {
    HmcConfig h = hmc;
    h.Ns = cfg.ns_values[i];
    double s = 0.0;
    for (int r = 0; r < cfg.repeats; ++r) {
      const HmcRun run = run_hmc(target, h, seed, {tag, 0, i, static_cast<std::uint64_t>(r)});
      s += m_and_sigma(run).second;
    }
    rep.sigma_m.push_back(s / cfg.repeats);
    lx.push_back(std::log(static_cast<double>(h.Ns)));
    ly.push_back(std::log(rep.sigma_m.back()));
  }
  rep.slope = lx.size() >= 2 ? fit_slope(lx, ly) : 0.0;

  std::vector<std::vector<double>> per_repeat;
  for (std::size_t j = 0; j < cfg.l_values.size(); ++j) {
    HmcConfig h = hmc;
    h.L0 = cfg.l_values[j];
    h.Ns = cfg.l_table_ns;
    std::vector<double> vars;
    double acc = 0.0;
    for (int r = 0; r < cfg.repeats; ++r) {
      const HmcRun run = run_hmc(target, h, seed, {tag, 1, j, static_cast<std::uint64_t>(r)});
      const double sig = m_and_sigma(run).second;
      vars.push_back(sig * sig);
      acc += run.diagnostics.mean_acceptance;
    }
    rep.var_m.push_back(std::accumulate(vars.begin(), vars.end(), 0.0) / cfg.repeats);
    rep.acceptance.push_back(acc / cfg.repeats);
    per_repeat.push_back(std::move(vars));
  }

  // Paired-free bootstrap over repeats of mean(var_L) <= mean(var_first).
  constexpr int kResamples = 2000;
  for (std::size_t j = 0; j < per_repeat.size(); ++j) {
    auto rng = keyed_rng(seed, {tag, 2, j});
    std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(cfg.repeats) - 1);
    int hits = 0;
    for (int b = 0; b < kResamples; ++b) {
      double a = 0.0, c = 0.0;
      for (int r = 0; r < cfg.repeats; ++r) {
        a += per_repeat[j][pick(rng)];
        c += per_repeat[0][pick(rng)];
      }
      hits += a <= c;
    }
    rep.confidence_vs_first.push_back(static_cast<double>(hits) / kResamples);
  }
  return rep;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trajectory_csv_header(const std::vector<int>& vort) {
  std::string h =
      "step,t,dt,e_pot,e_pot_sigma,M,M_sigma,Mx,Mx_sigma,My,My_sigma,var_mean";
  for (int l : vort) h += ",v" + std::to_string(l) + ",v" + std::to_string(l) + "_sigma";
  h += ",F,F_sigma,F_raw_re,F_raw_im,F_clamped,energy,energy_sigma,e_var,rho,lambda2,"
       "sigma2_max,r2,r2_clamped,R2,acceptance,divergences,max_rhat,eps_mean,mass_mean";
  return h;
}

std::string trajectory_csv_line(const TrajectoryRow& r, const std::vector<int>& vort) {
  std::ostringstream s;
  auto f = [&](double v) { s << ',' << format_double(v); };
  s << r.step;
  f(r.obs.t);
  f(r.dt);
  f(r.obs.e_pot.value);
  f(r.obs.e_pot.sigma);
  f(r.obs.mag.M.value);
  f(r.obs.mag.M.sigma);
  f(r.obs.mag.Mx.value);
  f(r.obs.mag.Mx.sigma);
  f(r.obs.mag.My.value);
  f(r.obs.mag.My.sigma);
  f(r.obs.var_mean);
  for (int l : vort) {
    auto it = r.obs.vort.find(l);
    f(it == r.obs.vort.end() ? std::nan("") : it->second.value);
    f(it == r.obs.vort.end() ? std::nan("") : it->second.sigma);
  }
  f(r.obs.fidelity.F);
  f(r.obs.fidelity.sigma);
  f(r.obs.fidelity.raw.real());
  f(r.obs.fidelity.raw.imag());
  s << ',' << (r.obs.fidelity.clamped ? 1 : 0);
  f(r.energy);
  f(r.energy_sigma);
  f(r.e_var);
  f(r.rho);
  f(r.lambda2);
  f(r.sigma2_max);
  f(r.r2);
  s << ',' << (r.r2_clamped ? 1 : 0);
  f(r.R2);
  f(r.acceptance);
  s << ',' << r.divergences;
  f(r.max_rhat);
  f(r.eps_mean);
  f(r.mass_mean);
  return s.str();
}

EvalOptions eval_options(const RunConfig& cfg, double g, TimeMode mode, StreamTag tag) {
  EvalOptions e;
  e.sampling = cfg.sampling;
  e.hmc = cfg.hmc;
  e.hmc.workers = cfg.workers;
  e.regularization = cfg.effective_regularization();
  e.g = g;
  e.J = cfg.physics.J;
  e.mode = mode;
  e.seed = cfg.seed;
  e.tag = tag;
  e.workers = static_cast<std::size_t>(cfg.workers);
  return e;
}

namespace {

std::filesystem::path out_dir(const RunConfig& cfg) {
  std::filesystem::path p(cfg.output_dir);
  std::filesystem::create_directories(p);
  return p;
}

std::ofstream open_csv(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  return out;
}

std::shared_ptr<const Ansatz> model_for(const RunConfig& cfg) {
  return make_ansatz(cfg.ansatz, build_lattice(cfg.dims, cfg.periodic));
}

std::vector<int> usable_vorticity_sizes(const RunConfig& cfg) {
  std::vector<int> out;
  if (cfg.dims.size() != 2) return out;
  const int limit = std::min(cfg.dims[0], cfg.dims[1]) - 1;
  for (int l : cfg.output.vorticity_sizes)
    if (l <= limit) out.push_back(l);
  return out;
}

double ground_state_coupling(const RunConfig& cfg) {
  return cfg.ground_state.g > 0.0 ? cfg.ground_state.g : cfg.physics.g_i;
}

GroundStateOptions ground_state_options(const RunConfig& cfg) {
  GroundStateOptions o;
  o.eval = eval_options(cfg, ground_state_coupling(cfg), TimeMode::Imaginary,
                        StreamTag::GroundState);
  o.dtau = cfg.ground_state.dtau;
  o.max_steps = cfg.ground_state.max_steps;
  o.min_steps = cfg.ground_state.min_steps;
  o.window = cfg.ground_state.window;
  o.tolerance = cfg.ground_state.tolerance;
  return o;
}

void check_matches(const Checkpoint& ck, const RunConfig& cfg) {
  if (ck.spec.kind != cfg.ansatz.kind || ck.dims != cfg.dims || ck.periodic != cfg.periodic)
    throw ConfigError("checkpoint lattice or ansatz kind does not match the configuration");
}

nlohmann::json hmc_summary(const Trajectory& traj) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& r : traj.rows)
    steps.push_back({{"t", r.obs.t},
                     {"acceptance", r.acceptance},
                     {"divergences", r.divergences},
                     {"max_rhat", r.max_rhat},
                     {"eps_mean", r.eps_mean},
                     {"mass_mean", r.mass_mean}});
  return steps;
}

GroundStateResult ground_state_to_files(const RunConfig& cfg, nlohmann::json& meta,
                                        const VariationalState* start = nullptr) {
  const auto dir = out_dir(cfg);
  VariationalState init;
  if (start) {
    init = *start;
  } else {
    auto rng = keyed_rng(cfg.seed, {static_cast<std::uint64_t>(StreamTag::Init), 0});
    init = random_state(model_for(cfg), cfg.ground_state.init_stddev, rng);
  }

  std::ofstream csv = open_csv(dir / "ground_state.csv");
  csv << "step,tau,energy,energy_sigma,e_var,rho,lambda2,acceptance\n";
  GroundStateResult res =
      run_ground_state(init, ground_state_options(cfg), [&](const EnergyPoint& p) {
        csv << p.step << ',' << format_double(p.tau) << ',' << format_double(p.energy) << ','
            << format_double(p.sigma) << ',' << format_double(p.e_var) << ','
            << format_double(p.rho) << ',' << format_double(p.lambda2) << ','
            << format_double(p.acceptance) << '\n';
        csv.flush();
      });
  save_checkpoint((dir / "ground_state.ckpt").string(), make_checkpoint(res.state, "ground-state"));

  nlohmann::json gs;
  gs["g"] = ground_state_coupling(cfg);
  gs["num_params"] = res.state.num_params();
  gs["steps"] = res.trace.size();
  gs["converged"] = res.converged;
  gs["final_energy"] = res.trace.back().energy;
  gs["final_energy_sigma"] = res.trace.back().sigma;
  gs["energy_per_site"] = res.trace.back().energy / static_cast<double>(res.state.num_sites());
  gs["warnings"] = res.warnings;
  gs["checkpoint"] = (dir / "ground_state.ckpt").string();
  meta["ground_state"] = gs;
  return res;
}

TvmcOptions tvmc_options(const RunConfig& cfg, double g, const std::filesystem::path& ckpt) {
  TvmcOptions o;
  o.eval = eval_options(cfg, g, TimeMode::Real, StreamTag::Quench);
  o.ode = cfg.ode;
  o.t_end = cfg.physics.t_max;
  o.vorticity_sizes = usable_vorticity_sizes(cfg);
  o.checkpoint_every = cfg.output.checkpoint_every;
  o.checkpoint_path = ckpt.string();
  return o;
}

void trajectory_meta(const Trajectory& traj, nlohmann::json& meta) {
  std::vector<double> ts, fs;
  for (const auto& r : traj.rows) {
    ts.push_back(r.obs.t);
    fs.push_back(r.obs.fidelity.F);
  }
  const auto tau = half_fidelity_time(ts, fs);
  meta["tau_half"] = tau ? nlohmann::json(*tau) : nlohmann::json(nullptr);
  meta["rows"] = traj.rows.size();
  meta["final_R2"] = traj.rows.back().R2;
  std::size_t rejected = 0;
  for (const auto& a : traj.attempts) rejected += !a.accepted;
  meta["ode_attempts"] = traj.attempts.size();
  meta["ode_rejections"] = rejected;
  meta["hmc_per_step"] = hmc_summary(traj);
  meta["warnings"] = traj.warnings;
}

// A ground-state checkpoint matching the configured lattice and ansatz.
VariationalState ground_state_checkpoint(const RunConfig& cfg, const std::string& path) {
  const Checkpoint ck = load_checkpoint(path);
  check_matches(ck, cfg);
  if (ck.stage != "ground-state")
    throw ConfigError("checkpoint " + path + " holds a '" + ck.stage +
                      "' state; a ground-state checkpoint is needed here");
  return restore_state(ck);
}

}  // namespace

void cli_ground_state(const RunConfig& cfg, const std::string& resume_path, nlohmann::json& meta) {
  std::optional<VariationalState> start;
  if (!resume_path.empty()) {
    start = ground_state_checkpoint(cfg, resume_path);
    meta["resumed_from"] = resume_path;
  }
  const GroundStateResult res = ground_state_to_files(cfg, meta, start ? &*start : nullptr);
  if (!res.converged)
    throw NumericalError("ground state did not converge within max_steps; partial checkpoint written",
                         "not_converged");
}

void cli_quench(const RunConfig& cfg, const std::string& resume_path, nlohmann::json& meta) {
  const auto dir = out_dir(cfg);
  VariationalState initial;
  std::optional<Checkpoint> resume;
  if (resume_path.empty()) {
    GroundStateResult gs = ground_state_to_files(cfg, meta);
    if (!gs.converged)
      meta["warnings_ground_state"] = "ground state not converged; quench started anyway";
    initial = std::move(gs.state);
  } else {
    Checkpoint ck = load_checkpoint(resume_path);
    check_matches(ck, cfg);
    if (ck.stage == "quench") {
      Checkpoint ref = ck;
      ref.alpha = ck.alpha_ref;
      initial = restore_state(ref);
      resume = std::move(ck);
    } else {
      initial = restore_state(ck);
    }
    meta["resumed_from"] = resume_path;
  }

  const auto vort = usable_vorticity_sizes(cfg);
  std::ofstream csv = open_csv(dir / "quench.csv");
  csv << trajectory_csv_header(vort) << '\n';
  const Trajectory traj =
      run_tvmc(initial, tvmc_options(cfg, cfg.physics.g_f, dir / "quench.ckpt"),
               [&](const TrajectoryRow& r) {
                 csv << trajectory_csv_line(r, vort) << '\n';
                 csv.flush();
               },
               resume ? &*resume : nullptr);
  nlohmann::json q;
  trajectory_meta(traj, q);
  q["checkpoint"] = (dir / "quench.ckpt").string();
  meta["quench"] = q;
}

void cli_oracle_benchmark(const RunConfig& cfg, const std::string& resume_path,
                          nlohmann::json& meta) {
  const auto dir = out_dir(cfg);
  VariationalState init;
  const bool from_variational = cfg.oracle.from_ground_state || !resume_path.empty();
  if (!resume_path.empty()) {
    init = ground_state_checkpoint(cfg, resume_path);
    meta["resumed_from"] = resume_path;
  } else if (cfg.oracle.from_ground_state) {
    GroundStateResult gs = ground_state_to_files(cfg, meta);
    init = std::move(gs.state);
  } else {
    init = uniform_state(model_for(cfg), cfg.ground_state.init_stddev, cfg.seed);
  }

  std::ofstream csv = open_csv(dir / "oracle_benchmark.csv");
  csv << "t,e_pot_tvmc,e_pot_sigma,e_pot_exact,F_tvmc,F_sigma,F_exact,Mx_tvmc,Mx_exact,"
         "energy_tvmc,energy_sigma,energy_exact,r2,R2,within\n";
  const OracleReport rep = oracle_benchmark(
      init, tvmc_options(cfg, cfg.physics.g_f, dir / "oracle_benchmark.ckpt"), cfg.oracle.M,
      cfg.oracle.grid_points, from_variational, [&](const OracleRow& r) {
        for (double v : {r.t, r.e_pot, r.e_pot_sigma, r.e_pot_exact, r.F, r.F_sigma, r.F_exact,
                         r.mag_x, r.mag_x_exact, r.energy, r.energy_sigma, r.energy_exact, r.r2,
                         r.R2})
          csv << format_double(v) << ',';
        csv << (r.within ? 1 : 0) << '\n';
        csv.flush();
      });
  nlohmann::json ob;
  trajectory_meta(rep.trajectory, ob);
  ob["basis_dim"] = rep.basis_dim;
  ob["initial_overlap"] = rep.initial_overlap;
  ob["truncated_mass"] = rep.truncated_mass;
  ob["max_abs_e_pot_deviation"] = rep.max_e_pot_deviation;
  ob["max_abs_fidelity_deviation"] = rep.max_fidelity_deviation;
  ob["within_tolerance"] = rep.within;
  meta["oracle_benchmark"] = ob;
}

void cli_sampler_check(const RunConfig& cfg, const std::string& resume_path, nlohmann::json& meta) {
  if (resume_path.empty())
    throw ConfigError("sampler-check needs a frozen state: pass --resume <checkpoint>");
  const auto dir = out_dir(cfg);
  const Checkpoint ck = load_checkpoint(resume_path);
  check_matches(ck, cfg);
  const VariationalState state = restore_state(ck);
  const StateTarget target(state);
  HmcConfig h = cfg.hmc;
  h.workers = cfg.workers;
  const SamplerCheckReport rep = sampler_check(target, h, cfg.sampler_check, cfg.seed);

  std::ofstream ns = open_csv(dir / "sampler_check_ns.csv");
  ns << "Ns,sigma_M\n";
  for (std::size_t i = 0; i < rep.ns_values.size(); ++i)
    ns << rep.ns_values[i] << ',' << format_double(rep.sigma_m[i]) << '\n';
  std::ofstream ls = open_csv(dir / "sampler_check_L.csv");
  ls << "L,var_M,acceptance,confidence_le_first\n";
  for (std::size_t j = 0; j < rep.l_values.size(); ++j)
    ls << rep.l_values[j] << ',' << format_double(rep.var_m[j]) << ','
       << format_double(rep.acceptance[j]) << ',' << format_double(rep.confidence_vs_first[j])
       << '\n';
  meta["sampler_check"] = {{"slope", rep.slope},
                           {"slope_within_expected", std::abs(rep.slope + 0.5) <= 0.1},
                           {"checkpoint", resume_path}};
}

}  // namespace qrotor
