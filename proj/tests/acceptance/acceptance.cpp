// Acceptance suite. One line per criterion; exit status reflects 1-8 only,
// criterion 9 is experimental and only reported.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "CLI11.hpp"
#include "../support/oracles.hpp"
#include "qrotor/config.hpp"
#include "qrotor/error.hpp"
#include "qrotor/exact.hpp"
#include "qrotor/ode.hpp"
#include "qrotor/rng.hpp"
#include "qrotor/runner.hpp"
#include "qrotor/tdvp.hpp"

using namespace qrotor;

namespace {

// Tolerances, pinned.
constexpr double kFdRel = 1e-5;
constexpr int kFdProbes = 100;
constexpr double kRegInverseMax = 1e-8;
constexpr double kOrderSlope = 3.0, kOrderSlopeTol = 0.2;
constexpr double kAcceptTarget = 0.8, kAcceptTol = 0.05;
constexpr double kSigmaSlope = -0.5, kSigmaSlopeTol = 0.1;
constexpr double kLConfidence = 0.95;
constexpr double kChi2Alpha = 0.01;
constexpr double kNullFidelity = 0.95;
constexpr double kDriftFactor = 10.0;
constexpr double kOracleRuntime = 600.0;  // seconds
constexpr double kExperimentalRuntime = 7200.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Report {
 public:
  void add(bool ok, const std::string& what) {
    out_.pass = out_.pass && ok;
    if (!out_.detail.empty()) out_.detail += "; ";
    out_.detail += std::string(ok ? "" : "FAIL ") + what;
  }
  Outcome done() const { return out_; }

 private:
  Outcome out_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::shared_ptr<const Ansatz> chain_model(AnsatzKind kind, int n) {
  AnsatzSpec spec;
  spec.kind = kind;
  return make_ansatz(spec, build_lattice({n}, {false}));
}

EvalOptions quadrature_eval(double g, std::size_t points, std::size_t dims) {
  EvalOptions e;
  e.sampling.kind = SamplerKind::Quadrature;
  e.sampling.quadrature_points = points;
  e.regularization = RegularizationPolicy::for_dims(dims);
  e.g = g;
  return e;
}

// VMC ground state in noiseless quadrature mode.
VariationalState prepared_ground_state(std::shared_ptr<const Ansatz> model, double g) {
  GroundStateOptions o;
  o.eval = quadrature_eval(g, 16, 1);
  o.eval.tag = StreamTag::GroundState;
  o.dtau = 0.02;
  o.max_steps = 3000;
  auto rng = keyed_rng(2024, {static_cast<std::uint64_t>(model->num_sites())});
  GroundStateResult res = run_ground_state(random_state(model, 0.1, rng), o);
  if (!res.converged) throw NumericalError("ground state did not converge", "not_converged");
  return std::move(res.state);
}

// ---------------------------------------------------------------------------

Outcome oracle_dynamics() {
  Report rep;
  const auto t0 = std::chrono::steady_clock::now();
  for (int n : {2, 3}) {
    const auto model = chain_model(AnsatzKind::CircularRBM, n);
    const VariationalState gs = prepared_ground_state(model, 3.0);
    TvmcOptions o;
    o.eval.regularization = RegularizationPolicy::for_dims(1);
    o.eval.g = 6.0;
    o.eval.seed = 11;
    o.t_end = 1.0;
    const OracleReport r = oracle_benchmark(gs, o, 5, 16, true);
    rep.add(r.within, "N=" + std::to_string(n) + " max|d e_p|=" +
                          fmt("%.3g", r.max_e_pot_deviation) + " max|dF|=" +
                          fmt("%.3g", r.max_fidelity_deviation) + " rows=" +
                          std::to_string(r.rows.size()));
  }
  const double secs = seconds_since(t0);
  rep.add(secs <= kOracleRuntime, "runtime " + fmt("%.0f", secs) + " s");
  return rep.done();
}

Outcome matrix_elements() {
  Report rep;
  const double g = 2.5, J = 0.8;
  struct Setup {
    int n, M;
    bool ring;
  };
  for (const Setup s : {Setup{3, 1, true}, Setup{3, 2, true}, Setup{2, 5, false}, Setup{3, 5, true}}) {
    const Lattice lat = build_lattice({s.n}, {s.ring});
    const TruncatedBasis b(s.n, s.M);
    const Eigen::MatrixXd B = Eigen::MatrixXd(build_bond_operator(b, lat));
    const Eigen::MatrixXd H = Eigen::MatrixXd(build_hamiltonian(b, lat, g, J));
    std::size_t bad = 0;
    for (std::size_t i = 0; i < b.dim(); ++i) {
      const auto mi = oracle::digits(i, s.n, s.M);
      for (std::size_t j = 0; j < b.dim(); ++j) {
        const auto mj = oracle::digits(j, s.n, s.M);
        double bond = 0.0;
        for (auto [k, l] : lat.bonds()) bond += oracle::bond_element(mi, mj, k, l);
        double diag = 0.0;
        if (i == j)
          for (int m : mi) diag += 0.5 * g * J * m * m;
        if (B(i, j) != bond || H(i, j) != diag - J * bond) ++bad;
      }
    }
    rep.add(bad == 0, "N=" + std::to_string(s.n) + " M=" + std::to_string(s.M) + " dim=" +
                          std::to_string(b.dim()) + " mismatches=" + std::to_string(bad));
  }
  return rep.done();
}

Outcome gradient_suite() {
  Report rep;
  struct Case {
    const char* name;
    AnsatzSpec spec;
    Lattice lattice;
  };
  AnsatzSpec cnn, rbm, jas;
  rbm.kind = AnsatzKind::CircularRBM;
  jas.kind = AnsatzKind::Jastrow;
  const std::vector<Case> cases{{"cnn", cnn, build_lattice({3, 3}, {true, true})},
                                {"rbm", rbm, build_lattice({4}, {true})},
                                {"jastrow", jas, build_lattice({2, 3}, {false, false})}};
  for (const Case& c : cases) {
    const auto model = make_ansatz(c.spec, c.lattice);
    auto rng = keyed_rng(31, {static_cast<std::uint64_t>(c.spec.kind)});
    double worst_O = 0.0, worst_glp = 0.0, worst_lap = 0.0;
    for (int p = 0; p < kFdProbes; ++p) {
      const VariationalState s = random_state(model, 0.3, rng);
      const auto theta = oracle::random_angles(s.num_sites(), rng);
      worst_O = std::max(worst_O, oracle::rel_error(log_derivatives(s, theta),
                                                    oracle::fd_log_derivatives(s, theta)));
      const auto g_fd = oracle::fd_angle_gradient(s, theta);
      std::vector<double> glp_fd(g_fd.size());
      for (std::size_t k = 0; k < g_fd.size(); ++k) glp_fd[k] = 2.0 * g_fd[k].real();
      worst_glp = std::max(worst_glp, oracle::rel_error(grad_log_prob(s, theta), glp_fd));
      // Kinetic part of E_L alone: remove the bond term, which is exact on both sides.
      const double gJ = 1.0;
      const cplx lap = (local_energy(s, theta, gJ, 1.0) - bond_energy(model->lattice(), theta, 1.0)) /
                       (-0.5 * gJ);
      const cplx lap_fd = oracle::fd_laplacian_over_psi(s, theta);
      worst_lap = std::max(worst_lap, std::abs(lap - lap_fd) / std::max(1.0, std::abs(lap_fd)));
    }
    const bool ok = worst_O <= kFdRel && worst_glp <= kFdRel && worst_lap <= kFdRel;
    rep.add(ok, std::string(c.name) + " O " + fmt("%.1e", worst_O) + " dlnp " +
                    fmt("%.1e", worst_glp) + " lap " + fmt("%.1e", worst_lap));
  }
  return rep.done();
}

Outcome regularization_algebra() {
  Report rep;
  bool half = true;
  for (double x : {1e-8, 1e-3, 0.5, 7.0, 1e4}) half = half && cutoff_factor(x, x) == 0.5;
  rep.add(half, "f(lambda2) = 1/2");

  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  const int P = 12;
  Eigen::MatrixXcd A(P, P);
  for (int i = 0; i < P; ++i)
    for (int j = 0; j < P; ++j) A(i, j) = cplx(nd(rng), nd(rng));
  const Eigen::MatrixXcd S = A * A.adjoint() / P + Eigen::MatrixXcd::Identity(P, P);
  const RegularizedInverse inv = regularized_pseudoinverse(S, 1e-12);
  const double dev = (inv.matrix() * S - Eigen::MatrixXcd::Identity(P, P)).cwiseAbs().maxCoeff();
  rep.add(dev <= kRegInverseMax, "||S_reg^-1 S - I||_max " + fmt("%.1e", dev));

  // Wide spectrum so the sweep crosses every eigenvalue.
  Eigen::MatrixXcd Q = Eigen::MatrixXcd(Eigen::HouseholderQR<Eigen::MatrixXcd>(A).householderQ());
  Eigen::VectorXd spec(P);
  for (int i = 0; i < P; ++i) spec[i] = std::pow(10.0, -6.0 + 6.0 * i / (P - 1));
  const Eigen::MatrixXcd W = Q * spec.cast<cplx>().asDiagonal() * Q.adjoint();
  const Eigensystem eig = hermitian_eigensystem(W);
  double prev = INFINITY;
  bool mono = true;
  for (int i = 0; i < 20; ++i) {
    const double l2 = std::pow(10.0, -8.0 + 9.0 * i / 19.0);
    const double rho = regularize(eig, l2).rho;
    mono = mono && rho <= prev;
    prev = rho;
  }
  rep.add(mono, "rho non-increasing over 20 lambda2 values");
  return rep.done();
}

Outcome integrator_order() {
  Report rep;
  const Rhs rot = [](double, const Eigen::VectorXcd& y, const StageContext&) -> Eigen::VectorXcd {
    return cplx(0, -1) * y;
  };
  std::vector<double> lx, ly;
  for (int n : {10, 20, 40, 80, 160}) {
    Eigen::VectorXcd y = Eigen::VectorXcd::Ones(1);
    const double dt = 1.0 / n;
    for (int i = 0; i < n; ++i) y = rk32_step(rot, y, i * dt, dt, {}, 1e-3, 1e-3).y3;
    lx.push_back(std::log(dt));
    ly.push_back(std::log(std::abs(y[0] - std::exp(cplx(0, -1)))));
  }
  const double slope = fit_slope(lx, ly);
  rep.add(std::abs(slope - kOrderSlope) <= kOrderSlopeTol, "slope " + fmt("%.3f", slope));
  StepController c;
  c.dt_min = 1e-9;
  c.dt_max = 10.0;
  const double ratio = c.next_dt(0.01, 8.0) / 0.01;
  rep.add(std::abs(ratio - 0.45) <= 1e-12, "err=8 gives dt x " + fmt("%.6f", ratio));
  return rep.done();
}

// |psi|^2 = exp(beta sum_<ij> cos(theta_i - theta_j)): a Jastrow state with
// nearest-neighbour couplings beta/2, i.e. the classical XY weight.
VariationalState xy_jastrow(const Lattice& lat, double beta) {
  AnsatzSpec spec;
  spec.kind = AnsatzKind::Jastrow;
  VariationalState s = zero_state(make_ansatz(spec, lat));
  const std::size_t n = lat.num_sites();
  std::set<std::pair<int, int>> nn;
  for (auto [k, l] : lat.bonds()) nn.insert({std::min(k, l), std::max(k, l)});
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j, ++p)
      if (nn.count({static_cast<int>(i), static_cast<int>(j)})) s.alpha[p] = 0.5 * beta;
  return s;
}

Outcome sampler_statistics() {
  Report rep;
  HmcConfig h;  // production defaults
  auto accept = [&](const Target& t, const std::string& name, std::uint64_t key) {
    const double acc = run_hmc(t, h, 41, {key}).diagnostics.mean_acceptance;
    rep.add(std::abs(acc - kAcceptTarget) <= kAcceptTol, name + " acc " + fmt("%.3f", acc));
  };
  accept(VonMisesTarget(std::vector<double>(4, 2.0)), "von Mises kappa=2", 1);
  const VariationalState gs = prepared_ground_state(chain_model(AnsatzKind::CircularRBM, 3), 3.0);
  accept(StateTarget(gs), "N=3 RBM ground state", 2);
  const VariationalState xy = xy_jastrow(build_lattice({4, 4}, {false, false}), 1.0);
  const StateTarget target(xy);
  accept(target, "4x4 XY Jastrow", 3);

  SamplerCheckConfig sc;
  sc.l_values = {1, 10};
  const SamplerCheckReport s = sampler_check(target, h, sc, 43);
  rep.add(std::abs(s.slope - kSigmaSlope) <= kSigmaSlopeTol, "sigma_M slope " + fmt("%.3f", s.slope));
  rep.add(s.confidence_vs_first[1] >= kLConfidence,
          "P(var L=10 <= var L=1) " + fmt("%.3f", s.confidence_vs_first[1]) + " (var " +
              fmt("%.2e", s.var_m[1]) + " vs " + fmt("%.2e", s.var_m[0]) + ")");
  {
    const VonMisesTarget flat(std::vector<double>(2, 0.0));
    HmcConfig u = h;
    u.Nc = 4;
    u.Ns = 1000;
    const HmcRun run = run_hmc(flat, u, 47, {3});
    const int bins = 16;
    std::vector<double> counts(bins, 0.0);
    for (double t : run.samples.theta) {
      const int b = static_cast<int>(std::floor((t + kPi) / kTwoPi * bins));
      counts[std::clamp(b, 0, bins - 1)] += 1.0;
    }
    const double expected = static_cast<double>(run.samples.theta.size()) / bins;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(bins - 1), chi2));
    rep.add(p > kChi2Alpha, "uniform chi2 p=" + fmt("%.3f", p));
  }
  return rep.done();
}

Outcome conservation() {
  Report rep;
  // Null quench with HMC sampling.
  {
    const auto model = chain_model(AnsatzKind::CircularRBM, 3);
    const VariationalState gs = prepared_ground_state(model, 3.0);
    TvmcOptions o;
    o.eval.regularization = RegularizationPolicy::for_dims(1);
    o.eval.g = 3.0;
    o.eval.seed = 12;
    o.t_end = 2.0;
    const Trajectory t = run_tvmc(gs, o);
    const auto& first = t.rows.front().obs;
    double worst = 0.0, minF = 1.0;
    for (const auto& r : t.rows) {
      const double s = std::hypot(r.obs.e_pot.sigma, first.e_pot.sigma);
      if (s > 0.0) worst = std::max(worst, std::abs(r.obs.e_pot.value - first.e_pot.value) / s);
      minF = std::min(minF, r.obs.fidelity.F);
    }
    rep.add(worst <= 3.0, "null quench max|d e_p|/sigma " + fmt("%.2f", worst));
    rep.add(minF >= kNullFidelity, "null quench min F " + fmt("%.4f", minF));
  }
  // Noiseless energy drift.
  {
    const auto model = chain_model(AnsatzKind::CircularRBM, 3);
    const VariationalState gs = prepared_ground_state(model, 3.0);
    TvmcOptions o;
    o.eval = quadrature_eval(6.0, 16, 1);
    o.t_end = 2.0;
    const Trajectory t = run_tvmc(gs, o);
    double drift = 0.0;
    for (const auto& r : t.rows) drift = std::max(drift, std::abs(r.energy - t.rows.front().energy));
    const double bound = kDriftFactor * o.ode.atol;
    rep.add(drift <= bound, "quadrature energy drift " + fmt("%.2e", drift) + " <= " + fmt("%.0e", bound));
  }
  // Residual ordering: benchmarks from the uniform state at g = 2 and g = 8.
  {
    const auto model = chain_model(AnsatzKind::Jastrow, 4);
    double R2[2];
    int i = 0;
    for (double g : {2.0, 8.0}) {
      TvmcOptions o;
      o.eval = quadrature_eval(g, 12, 1);
      o.t_end = 2.0;
      R2[i++] = run_tvmc(uniform_state(model, 0.0, 1), o).rows.back().R2;
    }
    rep.add(R2[0] > R2[1], "R2(g=2)=" + fmt("%.3e", R2[0]) + " > R2(g=8)=" + fmt("%.3e", R2[1]));
  }
  return rep.done();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome reproducibility() {
  Report rep;
  const auto base = std::filesystem::temp_directory_path() / "qrotor_acceptance_repro";
  std::filesystem::remove_all(base);
  std::string csv[2];
  int i = 0;
  for (int workers : {1, 4}) {
    RunConfig cfg = parse_config(R"(
[run]
seed = 7
[lattice]
dims = 3
periodic = false
[ansatz]
kind = rbm
[hmc]
Nc = 6
Ns = 200
Nw = 200
[physics]
g_i = 3
g_f = 6
t_max = 0.2
[ground_state]
dtau = 0.05
max_steps = 60
min_steps = 10
tolerance = 1
)");
    cfg.workers = workers;
    cfg.output_dir = (base / ("w" + std::to_string(workers))).string();
    nlohmann::json meta;
    cli_quench(cfg, "", meta);
    csv[i++] = slurp(std::filesystem::path(cfg.output_dir) / "quench.csv");
  }
  rep.add(!csv[0].empty() && csv[0] == csv[1],
          "quench.csv at 1 and 4 workers: " + std::to_string(csv[0].size()) + " bytes, " +
              (csv[0] == csv[1] ? "identical" : "different"));
  std::filesystem::remove_all(base);
  return rep.done();
}

Outcome qualitative_2d() {
  Report rep;
  const auto t0 = std::chrono::steady_clock::now();
  AnsatzSpec spec;
  const auto model = make_ansatz(spec, build_lattice({4, 4}, {false, false}));
  GroundStateOptions go;
  go.eval.regularization = RegularizationPolicy::for_dims(2);
  go.eval.g = 3.0;
  go.eval.tag = StreamTag::GroundState;
  go.eval.hmc.Nc = 8;
  go.eval.hmc.Ns = 500;
  go.eval.hmc.Nw = 400;
  go.dtau = 0.02;
  go.max_steps = 600;
  auto rng = keyed_rng(9, {16});
  const GroundStateResult gs = run_ground_state(random_state(model, 0.05, rng), go);
  rep.add(gs.converged, "4x4 ground state e=" + fmt("%.4f", gs.trace.back().energy / 16.0));
  for (double gf : {4.5, 9.0}) {
    TvmcOptions o;
    o.eval = go.eval;
    o.eval.tag = StreamTag::Quench;
    o.eval.g = gf;
    o.t_end = 3.0;
    o.vorticity_sizes = {1};
    const Trajectory t = run_tvmc(gs.state, o);
    double minM = INFINITY, maxv = 0.0;
    for (const auto& r : t.rows) {
      minM = std::min(minM, r.obs.mag.M.value);
      maxv = std::max(maxv, std::abs(r.obs.vort.at(1).value));
    }
    if (gf < 5.0) {
      rep.add(maxv <= 0.05 && minM > 0.5,
              "g_f=4.5 max|v1|=" + fmt("%.3f", maxv) + " min M=" + fmt("%.3f", minM));
    } else {
      rep.add(minM < 0.3 && maxv >= 0.1,
              "g_f=9 max|v1|=" + fmt("%.3f", maxv) + " min M=" + fmt("%.3f", minM));
    }
  }
  const double secs = seconds_since(t0);
  rep.add(secs <= kExperimentalRuntime, "runtime " + fmt("%.0f", secs) + " s");
  return rep.done();
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
  bool experimental = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qrotor acceptance suite"};
  std::vector<int> only;
  bool experimental = false;
  app.add_option("--only", only, "run just these criteria");
  app.add_flag("--experimental", experimental, "also run criterion 9 (hours)");
  CLI11_PARSE(app, argc, argv);
  if (std::getenv("QROTOR_ACCEPTANCE_EXPERIMENTAL")) experimental = true;

  const std::vector<Criterion> all{
      {1, "oracle dynamics agreement", oracle_dynamics},
      {2, "matrix-element fidelity", matrix_elements},
      {3, "gradient suite", gradient_suite},
      {4, "regularization algebra", regularization_algebra},
      {5, "integrator order", integrator_order},
      {6, "sampler statistics", sampler_statistics},
      {7, "conservation and residuals", conservation},
      {8, "reproducibility", reproducibility},
      {9, "qualitative 2D behavior (experimental)", qualitative_2d, true},
  };
  const std::set<int> pick(only.begin(), only.end());
  int hard_failures = 0;
  for (const Criterion& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    if (c.experimental && !experimental && !pick.count(c.id)) {
      std::printf("[SKIP] %d %s: not run (pass --experimental)\n", c.id, c.name);
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const char* tag = o.pass ? "PASS" : (c.experimental ? "WARN" : "FAIL");
    std::printf("[%s] %d %s: %s (%.1f s)\n", tag, c.id, c.name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    if (!o.pass && !c.experimental) ++hard_failures;
  }
  return hard_failures == 0 ? 0 : 1;
}
