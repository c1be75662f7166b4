// Run configuration: defaults, presets, the plain-text key-value config file,
// dotted-path overrides (CLI flags win), and the JSON manifest round trip
// that makes every artifact directory reproducible.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "abrlab/env.hpp"
#include "abrlab/moe.hpp"
#include "abrlab/ppo.hpp"

namespace abrlab {

class ConfigInvalid : public std::runtime_error {
 public:
  ConfigInvalid(const std::string& field, const std::string& reason)
      : std::runtime_error("config: " + field + ": " + reason), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct EnvBlock {
  int n_chunks = 49;
  double chunk_duration_s = 4.0;
  double buffer_max_s = 60.0;
  double rtt_s = 0.08;
  std::vector<double> bitrates_kbps = {300, 750, 1200, 1850, 2850, 4300};
  std::uint64_t video_seed = 77;
  bool net_noise = true;
  std::string schedule = "dln";  // dln | fixed
  double beta = 6.0;
  long regime_steps = 16000;
  bool cyclic = true;
  double mu1 = 1.0, mu2 = 1.0, mu3 = 1.0;  // fixed-schedule weights
  std::string traces_dir;                  // empty: synthetic corpus
  std::uint64_t trace_seed = 1234;
  int synth_train = 12;
  int synth_test = 6;
  double synth_duration_s = 600.0;
};

struct ProtocolBlock {
  int episodes = 300;
  std::string split = "test";
  bool deterministic_policy = true;
  int cdf_bins = 500;
};

struct RunConfig {
  std::string command = "train";
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;  // optional multi-seed expansion
  std::string preset = "desk";       // desk | paper
  std::string out_dir;               // defaulted from command/variant/seed
  EnvBlock env;
  MoEConfig agent;
  PPOConfig ppo;
  ProtocolBlock protocol;
  std::string checkpoint;  // eval: checkpoint path
  std::string baseline;    // eval: buffer-based | rate-based | robust-mpc
  std::string theory_grid = "default";
  std::vector<double> sweep_gammas = {0, 0.001, 0.005, 0.01, 0.05, 0.1};
  std::vector<double> sweep_lrs = {1e-5, 5e-5, 1e-4, 5e-4, 1e-3};
  std::string traces_validate_dir;

  void validate() const;
};

// Applies a named preset. `desk` (default) runs 100 iterations with 16k-step
// regimes; `paper` runs the full 1000 iterations with 200k-step regimes.
void apply_preset(RunConfig& config, const std::string& preset);

// Key-value config file: `[section]` headers, `key = value` lines, `#`
// comments. Sections map to dotted paths (e.g. [env] beta -> env.beta).
void load_config_file(RunConfig& config, const std::filesystem::path& path);

// Applies one dotted-path override, e.g. set_field(cfg, "ppo.lr", "3e-4").
void set_field(RunConfig& config, const std::string& path, const std::string& value);

std::string to_manifest_json(const RunConfig& config);
RunConfig from_manifest_json(const std::string& json_text);

// FNV-1a hash of the canonical manifest serialization.
std::string config_hash(const RunConfig& config);

// Default artifact directory: runs/<command>-<variant>-s<seed>.
std::string default_out_dir(const RunConfig& config);

// Materialized pieces shared by the runner and tests.
VideoSpec make_video(const EnvBlock& env);
ShiftSchedule make_schedule(const EnvBlock& env);
EnvConfig make_env_config(const EnvBlock& env);
TraceSet load_or_synth_traces(const EnvBlock& env);
TrainInputs make_train_inputs(const RunConfig& config);

}  // namespace abrlab
