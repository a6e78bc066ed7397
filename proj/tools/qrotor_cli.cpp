// qrotor_cli: t-VMC runs for the quantum rotor model.
//
//   qrotor_cli <ground-state|quench|oracle-benchmark|sampler-check>
//              --config run.ini [--seed N] [--out DIR] [--resume CKPT]
//
// Exit codes: 0 ok, 2 bad configuration, 3 numerical failure, 4 size guard.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "qrotor/config.hpp"
#include "qrotor/error.hpp"
#include "qrotor/kernels.hpp"
#include "qrotor/runner.hpp"

namespace {

void write_meta(const qrotor::RunConfig& cfg, const std::string& verb, const nlohmann::json& meta) {
  try {
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream out(std::filesystem::path(cfg.output_dir) / (verb + "_meta.json"));
    out << meta.dump(2) << '\n';
  } catch (const std::exception& e) {
    std::cerr << "warning: could not write metadata: " << e.what() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"t-VMC for the quantum rotor model"};
  app.require_subcommand(1);

  std::string config_path, out_dir, resume;
  std::optional<std::uint64_t> seed;
  struct Verb {
    std::string name;
    qrotor::RunMode mode;
    std::string help, resume_help;
  };
  const std::vector<Verb> verbs = {
      {"ground-state", qrotor::RunMode::GroundState, "imaginary-time VMC ground state at g_i",
       "continue from a ground-state checkpoint"},
      {"quench", qrotor::RunMode::Quench,
       "real-time t-VMC at g_f, after a ground-state run unless resumed",
       "ground-state or quench checkpoint to start from"},
      {"oracle-benchmark", qrotor::RunMode::OracleBenchmark,
       "t-VMC next to exact evolution in the truncated basis",
       "ground-state checkpoint used as the initial state"},
      {"sampler-check", qrotor::RunMode::SamplerCheck,
       "HMC statistics against N_s and trajectory length", "frozen state to sample (required)"}};
  for (const Verb& v : verbs) {
    CLI::App* sub = app.add_subcommand(v.name, v.help);
    sub->add_option("--config", config_path, "INI run configuration")->required();
    sub->add_option("--seed", seed, "overrides [run] seed");
    sub->add_option("--out", out_dir, "overrides [run] output");
    sub->add_option("--resume", resume, v.resume_help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::string verb;
  qrotor::RunMode mode{};
  for (const Verb& v : verbs)
    if (app.got_subcommand(v.name)) {
      verb = v.name;
      mode = v.mode;
    }

  qrotor::RunConfig cfg;
  nlohmann::json meta;
  meta["command"] = verb;
  int rc = 0;
  const auto t0 = std::chrono::steady_clock::now();
  bool loaded = false;
  try {
    cfg = qrotor::load_config(config_path);
    cfg.mode = mode;
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    cfg.validate();
    loaded = true;
    meta["config"] = qrotor::config_to_json(cfg);
    meta["kernels"] = qrotor::kernels::to_string(qrotor::kernels::active().isa);

    switch (mode) {
      case qrotor::RunMode::GroundState: qrotor::cli_ground_state(cfg, resume, meta); break;
      case qrotor::RunMode::Quench: qrotor::cli_quench(cfg, resume, meta); break;
      case qrotor::RunMode::OracleBenchmark: qrotor::cli_oracle_benchmark(cfg, resume, meta); break;
      case qrotor::RunMode::SamplerCheck: qrotor::cli_sampler_check(cfg, resume, meta); break;
    }
    meta["status"] = "ok";
  } catch (const qrotor::NumericalError& e) {
    rc = 3;
    meta["status"] = "numerical_failure";
    meta["reason"] = e.reason();
    meta["message"] = e.what();
  } catch (const qrotor::GuardExceeded& e) {
    rc = 4;
    meta["status"] = "guard_exceeded";
    meta["message"] = e.what();
  } catch (const qrotor::ConfigError& e) {
    rc = 2;
    meta["status"] = "config_error";
    meta["message"] = e.what();
  } catch (const std::exception& e) {
    rc = 3;
    meta["status"] = "error";
    meta["message"] = e.what();
  }
  meta["exit_code"] = rc;
  meta["elapsed_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (rc != 0) std::cerr << verb << ": " << meta["message"].get<std::string>() << '\n';
  if (loaded) write_meta(cfg, verb, meta);
  return rc;
}
