#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "qrotor/checkpoint.hpp"
#include "qrotor/config.hpp"
#include "qrotor/error.hpp"
#include "qrotor/rng.hpp"

using namespace qrotor;

namespace {

const char* kMinimal = R"(
[lattice]
dims = 4, 4
periodic = false, false
)";

}  // namespace

TEST_CASE("defaults survive a minimal file") {
  const RunConfig c = parse_config(kMinimal);
  CHECK(c.dims == std::vector<int>{4, 4});
  CHECK(c.periodic == std::vector<bool>{false, false});
  CHECK(c.hmc.L0 == 20);
  CHECK(c.hmc.gamma == 0.2);
  CHECK(c.hmc.eps0 == 0.1);
  CHECK(c.hmc.delta_target == 0.8);
  CHECK(c.hmc.Nw == 800);
  CHECK(c.hmc.Np == 5);
  CHECK(c.hmc.Ns == 2000);
  CHECK(c.hmc.Nc == 20);
  CHECK(c.ode.atol == 1e-3);
  CHECK(c.ode.rtol == 1e-3);
  CHECK(c.ode.dt_min == 1e-5);
  CHECK(c.ode.dt_max == 0.1);
  CHECK(c.ansatz.kind == AnsatzKind::CNN);
  CHECK(c.sampling.per_stage);
  CHECK(c.effective_regularization().a_c == 1e-4);
  CHECK(c.effective_regularization().r_c == 1e-2);
  const RunConfig chain = parse_config("[lattice]\ndims = 8\nperiodic = true\n");
  CHECK(chain.effective_regularization().a_c == 1e-5);
  CHECK(chain.effective_regularization().r_c == 1e-4);
  CHECK(c.ansatz.cnn.fourier_modes == 1);
  CHECK(parse_config("[lattice]\ndims = 8, 8\nperiodic = false, false\n").ansatz.cnn.fourier_modes == 4);
  CHECK(parse_config("[lattice]\ndims = 8, 8\nperiodic = false, false\n[ansatz]\nfourier_modes = 2\n")
            .ansatz.cnn.fourier_modes == 2);
}

TEST_CASE("values, comments and echo") {
  const RunConfig c = parse_config(R"(
# a comment
[run]
mode = sampler-check
seed = 42  ; inline
workers = 3
[lattice]
dims = 3
periodic = true
[ansatz]
kind = rbm
hidden = 5
visible_bias = false
[hmc]
L0 = 10
Nc = 4
[sampling]
sampler = quadrature
quadrature_points = 12
per_stage = false
[regularization]
a_c = 1e-3
r_c = 1e-1
[physics]
g_i = 2
g_f = 8
t_max = 2.5
[output]
vorticity_sizes = 1, 2
)");
  CHECK(c.mode == RunMode::SamplerCheck);
  CHECK(c.seed == 42);
  CHECK(c.workers == 3);
  CHECK(c.ansatz.kind == AnsatzKind::CircularRBM);
  CHECK(c.ansatz.rbm.hidden == 5);
  CHECK(!c.ansatz.rbm.visible_bias);
  CHECK(c.hmc.L0 == 10);
  CHECK(c.hmc.Nc == 4);
  CHECK(c.sampling.kind == SamplerKind::Quadrature);
  CHECK(c.sampling.quadrature_points == 12);
  CHECK(!c.sampling.per_stage);
  CHECK(c.effective_regularization().a_c == 1e-3);
  CHECK(c.physics.g_f == 8.0);
  CHECK(c.output.vorticity_sizes == std::vector<int>{1, 2});
  const auto j = config_to_json(c);
  CHECK(j["hmc"]["L0"] == 10);
  CHECK(j["hmc"]["Ns"] == 2000);
  CHECK(j["physics"]["t_max"] == 2.5);
  CHECK(j["sampling"]["sampler"] == "quadrature");
}

TEST_CASE("config errors") {
  const std::string lat = "[lattice]\ndims = 4\nperiodic = true\n";
  CHECK_THROWS_AS(parse_config("[lattice]\ndims = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(lat + "[hmc]\nL = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(lat + "[bogus]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(lat + "[hmc]\nL0 = ten\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(lat + "[physics]\ng_f = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(lat + "[regularization]\na_c = 1e-3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(lat + "[ansatz]\nkind = mps\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(lat + "[sampling]\nsampler = gibbs\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[lattice]\ndims = 2\nperiodic = true\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/run.ini"), ConfigError);
}

TEST_CASE("checkpoint round trip") {
  AnsatzSpec spec;
  spec.kind = AnsatzKind::CircularRBM;
  spec.rbm = {0, true, 2, 3, false, true};
  auto model = make_ansatz(spec, build_lattice({3, 3}, {true, true}));
  auto rng = keyed_rng(1, {1});
  const VariationalState s = random_state(model, 0.3, rng);
  Checkpoint ck = make_checkpoint(s, "quench");
  ck.alpha_ref = random_state(model, 0.3, rng).alpha;
  ck.t = 0.25;
  ck.step = 17;
  ck.dt_next = 0.0125;
  ck.dt_last = 0.01;
  ck.R2 = 0.003;
  ck.r2_last = 0.01;
  const auto path = (std::filesystem::temp_directory_path() / "qrotor_ck_test.bin").string();
  save_checkpoint(path, ck);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.stage == "quench");
  CHECK(back.alpha == ck.alpha);
  CHECK(back.alpha_ref == ck.alpha_ref);
  CHECK(back.t == ck.t);
  CHECK(back.step == 17);
  CHECK(back.dt_next == ck.dt_next);
  CHECK(back.dt_last == ck.dt_last);
  CHECK(back.R2 == ck.R2);
  CHECK(back.r2_last == ck.r2_last);
  CHECK(back.dims == ck.dims);
  CHECK(back.periodic == ck.periodic);
  CHECK(back.spec.rbm.convolutional);
  CHECK(!back.spec.rbm.visible_bias);
  const VariationalState r = restore_state(back);
  CHECK(r.alpha == s.alpha);
  CHECK(r.model->num_params() == model->num_params());

  Checkpoint wrong = back;
  wrong.layout[0].shape[0] += 1;
  CHECK_THROWS_AS(restore_state(wrong), ConfigError);

  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("not a checkpoint", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_checkpoint(path), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("shipped configs load") {
  int n = 0;
  for (const auto& e : std::filesystem::directory_iterator(QROTOR_CONFIG_DIR)) {
    if (e.path().extension() != ".ini") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(load_config(e.path().string()));
    ++n;
  }
  CHECK(n >= 4);
}
