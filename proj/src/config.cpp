#include "qrotor/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "qrotor/error.hpp"

namespace qrotor {

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::GroundState: return "ground-state";
    case RunMode::Quench: return "quench";
    case RunMode::OracleBenchmark: return "oracle-benchmark";
    case RunMode::SamplerCheck: return "sampler-check";
  }
  return "?";
}

RunMode run_mode_from_string(const std::string& name) {
  for (RunMode m : {RunMode::GroundState, RunMode::Quench, RunMode::OracleBenchmark,
                    RunMode::SamplerCheck})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown run mode '" + name + "'");
}

namespace {

template <class T>
T parse_value(const std::string& key, const std::string& raw) {
  try {
    return boost::lexical_cast<T>(boost::trim_copy(raw));
  } catch (const boost::bad_lexical_cast&) {
    throw ConfigError("config: cannot parse '" + raw + "' for key " + key);
  }
}

template <>
bool parse_value<bool>(const std::string& key, const std::string& raw) {
  const std::string v = boost::to_lower_copy(boost::trim_copy(raw));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: expected a boolean for key " + key + ", got '" + raw + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
  std::vector<std::string> parts;
  boost::split(parts, raw, boost::is_any_of(", "), boost::token_compress_on);
  std::vector<T> out;
  for (const auto& p : parts)
    if (!boost::trim_copy(p).empty()) out.push_back(parse_value<T>(key, p));
  return out;
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;

template <class T>
Setter set(T& field) {
  return [&field](const std::string& k, const std::string& v) { field = parse_value<T>(k, v); };
}

template <class T>
Setter set_list(std::vector<T>& field) {
  return [&field](const std::string& k, const std::string& v) { field = parse_list<T>(k, v); };
}

std::string strip_comments(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find_first_of("#;");
    if (pos != std::string::npos) line.erase(pos);
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(strip_comments(text));
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  RunConfig c;
  std::vector<bool> periodic_raw;
  bool have_dims = false, have_periodic = false;
  std::string mode = to_string(c.mode), ansatz = to_string(c.ansatz.kind), sampler = "hmc";
  int quad_points = static_cast<int>(c.sampling.quadrature_points);
  int grid_points = static_cast<int>(c.oracle.grid_points);
  std::string oracle_initial = c.oracle.from_ground_state ? "ground-state" : "uniform";
  double a_c = 0.0, r_c = 0.0;

  std::map<std::string, std::map<std::string, Setter>> table{
      {"run",
       {{"mode", set(mode)},
        {"seed", set(c.seed)},
        {"output", set(c.output_dir)},
        {"workers", set(c.workers)}}},
      {"lattice",
       {{"dims", [&](const std::string& k, const std::string& v) {
           c.dims = parse_list<int>(k, v);
           have_dims = true;
         }},
        {"periodic", [&](const std::string& k, const std::string& v) {
           periodic_raw = parse_list<bool>(k, v);
           have_periodic = true;
         }}}},
      {"ansatz",
       {{"kind", set(ansatz)},
        {"depth", set(c.ansatz.cnn.depth)},
        {"fourier_modes", set(c.ansatz.cnn.fourier_modes)},
        {"kernel_size", set(c.ansatz.cnn.kernel_size)},
        {"channels", set(c.ansatz.cnn.channels)},
        {"hidden", set(c.ansatz.rbm.hidden)},
        {"convolutional", set(c.ansatz.rbm.convolutional)},
        {"conv_channels", set(c.ansatz.rbm.conv_channels)},
        {"rbm_kernel_size", set(c.ansatz.rbm.kernel_size)},
        {"visible_bias", set(c.ansatz.rbm.visible_bias)},
        {"hidden_bias", set(c.ansatz.rbm.hidden_bias)}}},
      {"hmc",
       {{"L0", set(c.hmc.L0)},
        {"gamma", set(c.hmc.gamma)},
        {"eps0", set(c.hmc.eps0)},
        {"delta", set(c.hmc.delta_target)},
        {"Nw", set(c.hmc.Nw)},
        {"Np", set(c.hmc.Np)},
        {"Ns", set(c.hmc.Ns)},
        {"Nc", set(c.hmc.Nc)},
        {"variance_floor", set(c.hmc.variance_floor)},
        {"variance_ceiling", set(c.hmc.variance_ceiling)},
        {"eps_max", set(c.hmc.eps_max)},
        {"divergence_threshold", set(c.hmc.divergence_threshold)}}},
      {"sampling",
       {{"sampler", set(sampler)},
        {"quadrature_points", set(quad_points)},
        {"per_stage", set(c.sampling.per_stage)}}},
      {"regularization", {{"a_c", set(a_c)}, {"r_c", set(r_c)}}},
      {"ode",
       {{"atol", set(c.ode.atol)},
        {"rtol", set(c.ode.rtol)},
        {"dt_min", set(c.ode.dt_min)},
        {"dt_max", set(c.ode.dt_max)},
        {"dt0", set(c.ode.dt0)}}},
      {"physics",
       {{"g_i", set(c.physics.g_i)},
        {"g_f", set(c.physics.g_f)},
        {"J", set(c.physics.J)},
        {"t_max", set(c.physics.t_max)}}},
      {"ground_state",
       {{"g", set(c.ground_state.g)},
        {"dtau", set(c.ground_state.dtau)},
        {"max_steps", set(c.ground_state.max_steps)},
        {"min_steps", set(c.ground_state.min_steps)},
        {"tolerance", set(c.ground_state.tolerance)},
        {"window", set(c.ground_state.window)},
        {"init_stddev", set(c.ground_state.init_stddev)}}},
      {"oracle",
       {{"M", set(c.oracle.M)}, {"grid_points", set(grid_points)}, {"initial", set(oracle_initial)}}},
      {"sampler_check",
       {{"ns_values", set_list(c.sampler_check.ns_values)},
        {"l_values", set_list(c.sampler_check.l_values)},
        {"l_table_ns", set(c.sampler_check.l_table_ns)},
        {"repeats", set(c.sampler_check.repeats)}}},
      {"output",
       {{"checkpoint_every", set(c.output.checkpoint_every)},
        {"vorticity_sizes", set_list(c.output.vorticity_sizes)}}},
  };

  bool have_ac = false, have_rc = false;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config: key '" + section + "' must be inside a [section]");
    auto sec = table.find(section);
    if (sec == table.end()) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, node] : body) {
      auto it = sec->second.find(key);
      if (it == sec->second.end())
        throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
      it->second(section + "." + key, node.data());
      if (section == "regularization") (key == "a_c" ? have_ac : have_rc) = true;
    }
  }

  c.mode = run_mode_from_string(boost::trim_copy(mode));
  c.ansatz.kind = ansatz_kind_from_string(boost::trim_copy(ansatz));
  if (sampler == "hmc") {
    c.sampling.kind = SamplerKind::Hmc;
  } else if (sampler == "quadrature") {
    c.sampling.kind = SamplerKind::Quadrature;
  } else {
    throw ConfigError("config: sampling.sampler must be 'hmc' or 'quadrature'");
  }
  if (quad_points < 1 || grid_points < 1) throw ConfigError("config: grid sizes must be >= 1");
  c.sampling.quadrature_points = static_cast<std::size_t>(quad_points);
  c.oracle.grid_points = static_cast<std::size_t>(grid_points);
  boost::trim(oracle_initial);
  if (oracle_initial == "ground-state")
    c.oracle.from_ground_state = true;
  else if (oracle_initial == "uniform")
    c.oracle.from_ground_state = false;
  else
    throw ConfigError("config: oracle.initial must be uniform or ground-state");

  if (!have_dims) throw ConfigError("config: lattice.dims is required");
  if (!have_periodic)
    throw ConfigError("config: lattice.periodic is required; boundaries are never defaulted");
  c.periodic.assign(periodic_raw.begin(), periodic_raw.end());
  if (have_ac != have_rc)
    throw ConfigError("config: set both regularization.a_c and regularization.r_c, or neither");
  if (have_ac) {
    c.regularization = {a_c, r_c};
    c.regularization_set = true;
  }
  // K = 4 at production size (8x8 and up), K = 1 below, unless given.
  bool have_k = false;
  if (auto a = tree.get_child_optional("ansatz")) have_k = a->count("fourier_modes") > 0;
  if (!have_k) {
    long n = 1;
    for (int d : c.dims) n *= d;
    c.ansatz.cnn.fourier_modes = n >= 64 ? 4 : 1;
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

RegularizationPolicy RunConfig::effective_regularization() const {
  if (regularization_set) return regularization;
  return RegularizationPolicy::for_dims(dims.size());
}

void RunConfig::validate() const {
  if (dims.empty() || dims.size() > 2) throw ConfigError("config: lattice.dims needs 1 or 2 entries");
  if (periodic.size() != dims.size())
    throw ConfigError("config: lattice.periodic needs one entry per dimension");
  build_lattice(dims, periodic);  // extent and flag checks live in the lattice
  if (workers < 1) throw ConfigError("config: run.workers must be >= 1");
  if (!(physics.g_i > 0.0) || !(physics.g_f > 0.0) || !(physics.J > 0.0))
    throw ConfigError("config: g_i, g_f and J must be > 0");
  if (!(physics.t_max > 0.0)) throw ConfigError("config: physics.t_max must be > 0");
  if (!(ground_state.dtau > 0.0) || ground_state.max_steps < 1 || ground_state.window < 2 ||
      !(ground_state.tolerance > 0.0) || ground_state.min_steps < 0 ||
      !(ground_state.init_stddev >= 0.0) || ground_state.g < 0.0)
    throw ConfigError("config: invalid [ground_state] settings");
  if (oracle.M < 0) throw ConfigError("config: oracle.M must be >= 0");
  if (sampler_check.l_table_ns < 1) throw ConfigError("config: sampler_check.l_table_ns must be >= 1");
  if (sampler_check.repeats < 2) throw ConfigError("config: sampler_check.repeats must be >= 2");
  for (int v : sampler_check.ns_values)
    if (v < 1) throw ConfigError("config: sampler_check.ns_values must be >= 1");
  for (int v : sampler_check.l_values)
    if (v < 1) throw ConfigError("config: sampler_check.l_values must be >= 1");
  if (output.checkpoint_every < 0) throw ConfigError("config: output.checkpoint_every must be >= 0");
  for (int l : output.vorticity_sizes)
    if (l < 1) throw ConfigError("config: output.vorticity_sizes must be >= 1");
  hmc.validate();
  ode.validate();
  effective_regularization().validate();
}

nlohmann::json config_to_json(const RunConfig& c) {
  using nlohmann::json;
  const RegularizationPolicy reg = c.effective_regularization();
  json j;
  j["run"] = {{"mode", to_string(c.mode)},
              {"seed", c.seed},
              {"output", c.output_dir},
              {"workers", c.workers}};
  j["lattice"] = {{"dims", c.dims}, {"periodic", c.periodic}};
  j["ansatz"] = {{"kind", to_string(c.ansatz.kind)},
                 {"depth", c.ansatz.cnn.depth},
                 {"fourier_modes", c.ansatz.cnn.fourier_modes},
                 {"kernel_size", c.ansatz.cnn.kernel_size},
                 {"channels", c.ansatz.cnn.channels},
                 {"hidden", c.ansatz.rbm.hidden},
                 {"convolutional", c.ansatz.rbm.convolutional},
                 {"conv_channels", c.ansatz.rbm.conv_channels},
                 {"rbm_kernel_size", c.ansatz.rbm.kernel_size},
                 {"visible_bias", c.ansatz.rbm.visible_bias},
                 {"hidden_bias", c.ansatz.rbm.hidden_bias}};
  j["hmc"] = {{"L0", c.hmc.L0},
              {"gamma", c.hmc.gamma},
              {"eps0", c.hmc.eps0},
              {"delta", c.hmc.delta_target},
              {"Nw", c.hmc.Nw},
              {"Np", c.hmc.Np},
              {"Ns", c.hmc.Ns},
              {"Nc", c.hmc.Nc},
              {"variance_floor", c.hmc.variance_floor},
              {"variance_ceiling", c.hmc.variance_ceiling},
              {"eps_max", c.hmc.eps_max},
              {"divergence_threshold", c.hmc.divergence_threshold},
              {"dual_averaging", {{"gamma", c.hmc.da_gamma},
                                  {"t0", c.hmc.da_t0},
                                  {"kappa", c.hmc.da_kappa}}}};
  j["sampling"] = {{"sampler", c.sampling.kind == SamplerKind::Hmc ? "hmc" : "quadrature"},
                   {"quadrature_points", c.sampling.quadrature_points},
                   {"per_stage", c.sampling.per_stage}};
  j["regularization"] = {{"a_c", reg.a_c}, {"r_c", reg.r_c}, {"exponent", reg.exponent},
                         {"from_file", c.regularization_set}};
  j["ode"] = {{"atol", c.ode.atol},     {"rtol", c.ode.rtol},     {"safety", c.ode.safety},
              {"dt_min", c.ode.dt_min}, {"dt_max", c.ode.dt_max}, {"dt0", c.ode.dt0},
              {"method", "bogacki-shampine rk3(2)"}, {"error_norm", "max over re/im parts"}};
  j["physics"] = {{"g_i", c.physics.g_i},
                  {"g_f", c.physics.g_f},
                  {"J", c.physics.J},
                  {"t_max", c.physics.t_max}};
  j["ground_state"] = {{"g", c.ground_state.g > 0.0 ? c.ground_state.g : c.physics.g_i},
                       {"dtau", c.ground_state.dtau},
                       {"max_steps", c.ground_state.max_steps},
                       {"min_steps", c.ground_state.min_steps},
                       {"tolerance", c.ground_state.tolerance},
                       {"window", c.ground_state.window},
                       {"init_stddev", c.ground_state.init_stddev}};
  j["oracle"] = {{"M", c.oracle.M},
                 {"grid_points", c.oracle.grid_points},
                 {"initial", c.oracle.from_ground_state ? "ground-state" : "uniform"}};
  j["sampler_check"] = {{"ns_values", c.sampler_check.ns_values},
                        {"l_values", c.sampler_check.l_values},
                        {"l_table_ns", c.sampler_check.l_table_ns},
                        {"repeats", c.sampler_check.repeats}};
  j["output"] = {{"checkpoint_every", c.output.checkpoint_every},
                 {"vorticity_sizes", c.output.vorticity_sizes}};
  return j;
}

}  // namespace qrotor
