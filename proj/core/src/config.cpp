#include "abrlab/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "abrlab/baselines.hpp"

namespace abrlab {

namespace {

using nlohmann::json;

double to_d(const std::string& path, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigInvalid(path, "expected a number, got '" + v + "'");
  }
}

long to_l(const std::string& path, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigInvalid(path, "expected an integer, got '" + v + "'");
  }
}

int to_i(const std::string& path, const std::string& v) {
  return static_cast<int>(to_l(path, v));
}

std::uint64_t to_u64(const std::string& path, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigInvalid(path, "expected an unsigned integer, got '" + v + "'");
  }
}

bool to_b(const std::string& path, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigInvalid(path, "expected a boolean, got '" + v + "'");
}

std::vector<double> to_dlist(const std::string& path, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(to_d(path, item));
  }
  if (out.empty()) throw ConfigInvalid(path, "expected a comma-separated list");
  return out;
}

std::vector<std::uint64_t> to_ulist(const std::string& path, const std::string& v) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(to_u64(path, item));
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

void RunConfig::validate() const {
  ppo.validate();
  agent.validate();
  if (env.schedule != "dln" && env.schedule != "fixed") {
    throw ConfigInvalid("env.schedule", "must be 'dln' or 'fixed'");
  }
  if (env.n_chunks < 1) throw ConfigInvalid("env.n_chunks", "must be >= 1");
  if (env.regime_steps < 1) throw ConfigInvalid("env.regime_steps", "must be >= 1");
  if (env.beta <= 0) throw ConfigInvalid("env.beta", "must be > 0");
  if (protocol.episodes < 2) throw ConfigInvalid("protocol.episodes", "must be >= 2");
  if (protocol.split != "train" && protocol.split != "test") {
    throw ConfigInvalid("protocol.split", "must be 'train' or 'test'");
  }
  if (!baseline.empty()) baseline_from_string(baseline);
}

void apply_preset(RunConfig& config, const std::string& preset) {
  if (preset == "desk") {
    config.ppo.iterations = 100;
    config.ppo.ckpt_interval = 50;
    config.env.regime_steps = 16000;
  } else if (preset == "paper") {
    config.ppo.iterations = 1000;
    config.ppo.ckpt_interval = 100;
    config.env.regime_steps = 200000;
  } else {
    throw ConfigInvalid("preset", "unknown preset '" + preset + "'");
  }
  config.preset = preset;
}

void set_field(RunConfig& c, const std::string& path, const std::string& value) {
  const std::string v = trim(value);
  if (path == "command") c.command = v;
  else if (path == "seed") c.seed = to_u64(path, v);
  else if (path == "seeds") c.seeds = to_ulist(path, v);
  else if (path == "preset") apply_preset(c, v);
  else if (path == "out_dir") c.out_dir = v;
  else if (path == "checkpoint") c.checkpoint = v;
  else if (path == "baseline") c.baseline = v;
  else if (path == "theory_grid") c.theory_grid = v;
  else if (path == "sweep_gammas") c.sweep_gammas = to_dlist(path, v);
  else if (path == "sweep_lrs") c.sweep_lrs = to_dlist(path, v);
  else if (path == "traces_validate_dir") c.traces_validate_dir = v;
  else if (path == "env.n_chunks") c.env.n_chunks = to_i(path, v);
  else if (path == "env.chunk_duration_s") c.env.chunk_duration_s = to_d(path, v);
  else if (path == "env.buffer_max_s") c.env.buffer_max_s = to_d(path, v);
  else if (path == "env.rtt_s") c.env.rtt_s = to_d(path, v);
  else if (path == "env.bitrates_kbps") c.env.bitrates_kbps = to_dlist(path, v);
  else if (path == "env.video_seed") c.env.video_seed = to_u64(path, v);
  else if (path == "env.net_noise") c.env.net_noise = to_b(path, v);
  else if (path == "env.schedule") c.env.schedule = v;
  else if (path == "env.beta") c.env.beta = to_d(path, v);
  else if (path == "env.regime_steps") c.env.regime_steps = to_l(path, v);
  else if (path == "env.cyclic") c.env.cyclic = to_b(path, v);
  else if (path == "env.mu1") c.env.mu1 = to_d(path, v);
  else if (path == "env.mu2") c.env.mu2 = to_d(path, v);
  else if (path == "env.mu3") c.env.mu3 = to_d(path, v);
  else if (path == "env.traces_dir") c.env.traces_dir = v;
  else if (path == "env.trace_seed") c.env.trace_seed = to_u64(path, v);
  else if (path == "env.synth_train") c.env.synth_train = to_i(path, v);
  else if (path == "env.synth_test") c.env.synth_test = to_i(path, v);
  else if (path == "env.synth_duration_s") c.env.synth_duration_s = to_d(path, v);
  else if (path == "agent.n_experts") c.agent.n_experts = to_i(path, v);
  else if (path == "agent.expert_hidden") c.agent.expert_hidden = to_i(path, v);
  else if (path == "agent.top_k") c.agent.top_k = to_i(path, v);
  else if (path == "agent.router_noise_sigma") c.agent.router_noise_sigma = to_d(path, v);
  else if (path == "agent.plasticity_gamma") c.agent.plasticity_gamma = to_d(path, v);
  else if (path == "agent.variant") c.agent.variant = moe_variant_from_string(v);
  else if (path == "ppo.lr") c.ppo.lr = to_d(path, v);
  else if (path == "ppo.batch") { c.ppo.batch = to_i(path, v); c.ppo.rollout_steps = c.ppo.batch; }
  else if (path == "ppo.minibatch") c.ppo.minibatch = to_i(path, v);
  else if (path == "ppo.iterations") c.ppo.iterations = to_i(path, v);
  else if (path == "ppo.epochs") c.ppo.epochs = to_i(path, v);
  else if (path == "ppo.gae_gamma") c.ppo.gae_gamma = to_d(path, v);
  else if (path == "ppo.gae_lambda") c.ppo.gae_lambda = to_d(path, v);
  else if (path == "ppo.clip_eps") c.ppo.clip_eps = to_d(path, v);
  else if (path == "ppo.entropy_coef") c.ppo.entropy_coef = to_d(path, v);
  else if (path == "ppo.value_coef") c.ppo.value_coef = to_d(path, v);
  else if (path == "ppo.ckpt_interval") c.ppo.ckpt_interval = to_i(path, v);
  else if (path == "protocol.episodes") c.protocol.episodes = to_i(path, v);
  else if (path == "protocol.split") c.protocol.split = v;
  else if (path == "protocol.deterministic_policy") c.protocol.deterministic_policy = to_b(path, v);
  else if (path == "protocol.cdf_bins") c.protocol.cdf_bins = to_i(path, v);
  else throw ConfigInvalid(path, "unknown config field");
}

void load_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid(path.string(), "cannot open config file");
  std::string line, section;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigInvalid(path.string() + ":" + std::to_string(lineno),
                          "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    set_field(config, section.empty() ? key : section + "." + key, value);
  }
}

namespace {

json config_to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["seed"] = c.seed;
  j["seeds"] = c.seeds;
  j["preset"] = c.preset;
  j["out_dir"] = c.out_dir;
  j["checkpoint"] = c.checkpoint;
  j["baseline"] = c.baseline;
  j["theory_grid"] = c.theory_grid;
  j["sweep_gammas"] = c.sweep_gammas;
  j["sweep_lrs"] = c.sweep_lrs;
  j["traces_validate_dir"] = c.traces_validate_dir;
  j["env"] = {{"n_chunks", c.env.n_chunks},
              {"chunk_duration_s", c.env.chunk_duration_s},
              {"buffer_max_s", c.env.buffer_max_s},
              {"rtt_s", c.env.rtt_s},
              {"bitrates_kbps", c.env.bitrates_kbps},
              {"video_seed", c.env.video_seed},
              {"net_noise", c.env.net_noise},
              {"schedule", c.env.schedule},
              {"beta", c.env.beta},
              {"regime_steps", c.env.regime_steps},
              {"cyclic", c.env.cyclic},
              {"mu1", c.env.mu1},
              {"mu2", c.env.mu2},
              {"mu3", c.env.mu3},
              {"traces_dir", c.env.traces_dir},
              {"trace_seed", c.env.trace_seed},
              {"synth_train", c.env.synth_train},
              {"synth_test", c.env.synth_test},
              {"synth_duration_s", c.env.synth_duration_s}};
  j["agent"] = {{"n_experts", c.agent.n_experts},
                {"expert_hidden", c.agent.expert_hidden},
                {"top_k", c.agent.top_k},
                {"router_noise_sigma", c.agent.router_noise_sigma},
                {"plasticity_gamma", c.agent.plasticity_gamma},
                {"variant", to_string(c.agent.variant)}};
  j["ppo"] = {{"lr", c.ppo.lr},
              {"batch", c.ppo.batch},
              {"minibatch", c.ppo.minibatch},
              {"iterations", c.ppo.iterations},
              {"epochs", c.ppo.epochs},
              {"gae_gamma", c.ppo.gae_gamma},
              {"gae_lambda", c.ppo.gae_lambda},
              {"clip_eps", c.ppo.clip_eps},
              {"entropy_coef", c.ppo.entropy_coef},
              {"value_coef", c.ppo.value_coef},
              {"ckpt_interval", c.ppo.ckpt_interval}};
  j["protocol"] = {{"episodes", c.protocol.episodes},
                   {"split", c.protocol.split},
                   {"deterministic_policy", c.protocol.deterministic_policy},
                   {"cdf_bins", c.protocol.cdf_bins}};
  return j;
}

void config_from_json(const json& j, RunConfig& c) {
  j.at("command").get_to(c.command);
  j.at("seed").get_to(c.seed);
  j.at("seeds").get_to(c.seeds);
  j.at("preset").get_to(c.preset);
  j.at("out_dir").get_to(c.out_dir);
  j.at("checkpoint").get_to(c.checkpoint);
  j.at("baseline").get_to(c.baseline);
  j.at("theory_grid").get_to(c.theory_grid);
  j.at("sweep_gammas").get_to(c.sweep_gammas);
  j.at("sweep_lrs").get_to(c.sweep_lrs);
  j.at("traces_validate_dir").get_to(c.traces_validate_dir);
  const json& e = j.at("env");
  e.at("n_chunks").get_to(c.env.n_chunks);
  e.at("chunk_duration_s").get_to(c.env.chunk_duration_s);
  e.at("buffer_max_s").get_to(c.env.buffer_max_s);
  e.at("rtt_s").get_to(c.env.rtt_s);
  e.at("bitrates_kbps").get_to(c.env.bitrates_kbps);
  e.at("video_seed").get_to(c.env.video_seed);
  e.at("net_noise").get_to(c.env.net_noise);
  e.at("schedule").get_to(c.env.schedule);
  e.at("beta").get_to(c.env.beta);
  e.at("regime_steps").get_to(c.env.regime_steps);
  e.at("cyclic").get_to(c.env.cyclic);
  e.at("mu1").get_to(c.env.mu1);
  e.at("mu2").get_to(c.env.mu2);
  e.at("mu3").get_to(c.env.mu3);
  e.at("traces_dir").get_to(c.env.traces_dir);
  e.at("trace_seed").get_to(c.env.trace_seed);
  e.at("synth_train").get_to(c.env.synth_train);
  e.at("synth_test").get_to(c.env.synth_test);
  e.at("synth_duration_s").get_to(c.env.synth_duration_s);
  const json& a = j.at("agent");
  a.at("n_experts").get_to(c.agent.n_experts);
  a.at("expert_hidden").get_to(c.agent.expert_hidden);
  a.at("top_k").get_to(c.agent.top_k);
  a.at("router_noise_sigma").get_to(c.agent.router_noise_sigma);
  a.at("plasticity_gamma").get_to(c.agent.plasticity_gamma);
  c.agent.variant = moe_variant_from_string(a.at("variant").get<std::string>());
  const json& p = j.at("ppo");
  p.at("lr").get_to(c.ppo.lr);
  p.at("batch").get_to(c.ppo.batch);
  c.ppo.rollout_steps = c.ppo.batch;
  p.at("minibatch").get_to(c.ppo.minibatch);
  p.at("iterations").get_to(c.ppo.iterations);
  p.at("epochs").get_to(c.ppo.epochs);
  p.at("gae_gamma").get_to(c.ppo.gae_gamma);
  p.at("gae_lambda").get_to(c.ppo.gae_lambda);
  p.at("clip_eps").get_to(c.ppo.clip_eps);
  p.at("entropy_coef").get_to(c.ppo.entropy_coef);
  p.at("value_coef").get_to(c.ppo.value_coef);
  p.at("ckpt_interval").get_to(c.ppo.ckpt_interval);
  const json& pr = j.at("protocol");
  pr.at("episodes").get_to(c.protocol.episodes);
  pr.at("split").get_to(c.protocol.split);
  pr.at("deterministic_policy").get_to(c.protocol.deterministic_policy);
  pr.at("cdf_bins").get_to(c.protocol.cdf_bins);
}

}  // namespace

std::string to_manifest_json(const RunConfig& config) {
  json j;
  j["schema"] = "abrlab.manifest.v1";
  j["command"] = config.command;
  j["config_hash"] = config_hash(config);
  j["config"] = config_to_json(config);
  return j.dump(2) + "\n";
}

RunConfig from_manifest_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  if (j.at("schema").get<std::string>() != "abrlab.manifest.v1") {
    throw ConfigInvalid("schema", "unsupported manifest schema");
  }
  RunConfig c;
  config_from_json(j.at("config"), c);
  return c;
}

std::string config_hash(const RunConfig& config) {
  const std::string canonical = config_to_json(config).dump();
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical)));
  return std::string("fnv1a:") + buf;
}

std::string default_out_dir(const RunConfig& config) {
  std::string dir = "runs/" + config.command;
  if (config.command == "train" || config.command == "eval") {
    dir += "-" + std::string(to_string(config.agent.variant));
  }
  dir += "-s" + std::to_string(config.seed);
  return dir;
}

VideoSpec make_video(const EnvBlock& env) {
  VideoSpec v;
  v.n_chunks = env.n_chunks;
  v.chunk_duration_s = env.chunk_duration_s;
  v.buffer_max_s = env.buffer_max_s;
  v.rtt_s = env.rtt_s;
  v.bitrates_kbps = env.bitrates_kbps;
  RngStream rng(env.video_seed, "chunk_size");
  v.chunk_sizes_bits.resize(static_cast<std::size_t>(v.n_chunks));
  for (auto& row : v.chunk_sizes_bits) {
    const double complexity = rng.uniform(0.85, 1.15);
    row.resize(v.bitrates_kbps.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = v.bitrates_kbps[j] * 1000.0 * v.chunk_duration_s * complexity;
    }
  }
  v.validate();
  return v;
}

ShiftSchedule make_schedule(const EnvBlock& env) {
  if (env.schedule == "fixed") {
    return fixed_schedule({env.mu1, env.mu2, env.mu3});
  }
  return dln_schedule(env.beta, env.regime_steps, env.cyclic);
}

EnvConfig make_env_config(const EnvBlock& env) {
  EnvConfig cfg;
  cfg.net_noise = env.net_noise;
  return cfg;
}

TraceSet load_or_synth_traces(const EnvBlock& env) {
  if (!env.traces_dir.empty()) return load_trace_dir(env.traces_dir);
  return synth_corpus(env.trace_seed, env.synth_train, env.synth_test,
                      env.synth_duration_s);
}

TrainInputs make_train_inputs(const RunConfig& config) {
  config.validate();
  TrainInputs in;
  in.video = make_video(config.env);
  in.schedule = make_schedule(config.env);
  in.env_cfg = make_env_config(config.env);
  in.traces = load_or_synth_traces(config.env).train;
  in.moe = config.agent;
  in.moe.obs_dim = kObsDim;
  in.moe.n_actions = static_cast<int>(config.env.bitrates_kbps.size());
  in.ppo = config.ppo;
  in.seed = config.seed;
  return in;
}

}  // namespace abrlab
