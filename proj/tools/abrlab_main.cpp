// abrlab command line: trace-driven ABR streaming experiments with a
// plasticity-aware mixture-of-experts PPO agent, rule-based baselines,
// plasticity diagnostics, and the tracking-error theory bench.
//
// Exit codes: 0 ok, 2 config error, 3 runtime error, 4 check failure.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "abrlab/runner.hpp"

namespace {

using abrlab::RunConfig;

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> overrides;  // key=value, applied after the file
  std::string out_dir;
  std::string seeds;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_file, "key-value config file");
  cmd->add_option("--set", args.overrides, "dotted-path override, key=value (repeatable)");
  cmd->add_option("--out", args.out_dir, "artifact directory");
  cmd->add_option("--seeds", args.seeds, "comma-separated seed list");
}

void apply_common(RunConfig& config, const CommonArgs& args) {
  if (!args.config_file.empty()) abrlab::load_config_file(config, args.config_file);
  for (const std::string& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw abrlab::ConfigInvalid(kv, "expected key=value");
    }
    abrlab::set_field(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  if (!args.seeds.empty()) abrlab::set_field(config, "seeds", args.seeds);
  if (const char* env_out = std::getenv("ABRLAB_OUT"); env_out != nullptr && config.out_dir.empty()) {
    config.out_dir = env_out;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"abrlab: adaptive-bitrate streaming lab"};
  app.require_subcommand(1);

  RunConfig config;
  CommonArgs common;

  std::string variant = "pa-moe";
  std::string preset = "desk";
  std::uint64_t seed = 1;
  double gamma = -1.0, lr = -1.0;

  auto* train = app.add_subcommand("train", "train an agent");
  add_common(train, common);
  train->add_option("--variant", variant, "pa-moe | moe | smoe | mlp");
  train->add_option("--preset", preset, "desk | paper");
  train->add_option("--seed", seed, "run seed");
  train->add_option("--gamma", gamma, "plasticity noise gain override");
  train->add_option("--lr", lr, "learning rate override");

  std::string checkpoint, baseline, weights, split = "test";
  int episodes = -1;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint or baseline");
  add_common(eval, common);
  eval->add_option("--checkpoint", checkpoint, "parameter checkpoint");
  eval->add_option("--baseline", baseline, "buffer-based | rate-based | robust-mpc");
  eval->add_option("--variant", variant, "agent variant of the checkpoint");
  eval->add_option("--seed", seed, "protocol seed");
  eval->add_option("--episodes", episodes, "episode count");
  eval->add_option("--split", split, "train | test");
  eval->add_option("--weights", weights, "fixed QoE weights mu1,mu2,mu3");

  std::string grid = "default";
  auto* theory = app.add_subcommand("theory", "tracking-error theory bench");
  add_common(theory, common);
  theory->add_option("--grid", grid, "bound-check grid name");
  theory->add_option("--seed", seed, "bench seed");

  std::string gammas, lrs;
  auto* sweep_gamma = app.add_subcommand("sweep-gamma", "noise-gain sensitivity sweep");
  add_common(sweep_gamma, common);
  sweep_gamma->add_option("--gammas", gammas, "comma-separated gamma list");
  sweep_gamma->add_option("--preset", preset, "desk | paper");
  sweep_gamma->add_option("--seed", seed, "base seed");

  auto* sweep_lr = app.add_subcommand("sweep-lr", "learning-rate sensitivity sweep");
  add_common(sweep_lr, common);
  sweep_lr->add_option("--lrs", lrs, "comma-separated learning-rate list");
  sweep_lr->add_option("--preset", preset, "desk | paper");
  sweep_lr->add_option("--seed", seed, "base seed");

  std::string traces_dir;
  auto* traces_validate = app.add_subcommand("traces-validate", "validate a trace directory");
  traces_validate->add_option("--dir", traces_dir, "directory with train/ and test/")->required();

  std::vector<std::string> run_dirs;
  std::string metric = "episode_qoe_iqm";
  auto* compare = app.add_subcommand("compare", "compare run directories");
  compare->add_option("--runs", run_dirs, "run directories")->required()->expected(-2);
  compare->add_option("--metric", metric, "summary metric name");

  std::string manifest_path;
  auto* rerun = app.add_subcommand("rerun", "re-execute a run from its manifest");
  rerun->add_option("--manifest", manifest_path, "manifest.json path")->required();
  rerun->add_option("--out", common.out_dir, "artifact directory override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      config.command = "train";
      abrlab::apply_preset(config, preset);
      config.seed = seed;
      config.agent.variant = abrlab::moe_variant_from_string(variant);
      if (gamma >= 0.0) config.agent.plasticity_gamma = gamma;
      if (lr > 0.0) config.ppo.lr = lr;
      apply_common(config, common);
      return abrlab::dispatch(config);
    }
    if (eval->parsed()) {
      config.command = "eval";
      config.seed = seed;
      config.checkpoint = checkpoint;
      config.baseline = baseline;
      config.agent.variant = abrlab::moe_variant_from_string(variant);
      if (episodes > 0) config.protocol.episodes = episodes;
      config.protocol.split = split;
      config.env.schedule = "fixed";
      if (!weights.empty()) {
        std::stringstream ss(weights);
        std::string item;
        const char* names[3] = {"env.mu1", "env.mu2", "env.mu3"};
        for (int i = 0; i < 3 && std::getline(ss, item, ','); ++i) {
          abrlab::set_field(config, names[i], item);
        }
      }
      apply_common(config, common);
      return abrlab::dispatch(config);
    }
    if (theory->parsed()) {
      config.command = "theory";
      config.seed = seed;
      config.theory_grid = grid;
      apply_common(config, common);
      return abrlab::dispatch(config);
    }
    if (sweep_gamma->parsed()) {
      config.command = "sweep-gamma";
      abrlab::apply_preset(config, preset);
      config.seed = seed;
      if (!gammas.empty()) abrlab::set_field(config, "sweep_gammas", gammas);
      apply_common(config, common);
      return abrlab::dispatch(config);
    }
    if (sweep_lr->parsed()) {
      config.command = "sweep-lr";
      abrlab::apply_preset(config, preset);
      config.seed = seed;
      if (!lrs.empty()) abrlab::set_field(config, "sweep_lrs", lrs);
      apply_common(config, common);
      return abrlab::dispatch(config);
    }
    if (traces_validate->parsed()) {
      config.command = "traces-validate";
      config.traces_validate_dir = traces_dir;
      return abrlab::dispatch(config);
    }
    if (compare->parsed()) {
      return abrlab::run_compare(run_dirs, metric);
    }
    if (rerun->parsed()) {
      return abrlab::run_from_manifest(manifest_path, common.out_dir);
    }
  } catch (const abrlab::ConfigInvalid& e) {
    std::cerr << "{\"error\":\"config\",\"detail\":\"" << e.what() << "\"}\n";
    return abrlab::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"runtime\",\"detail\":\"" << e.what() << "\"}\n";
    return abrlab::kExitRuntime;
  }
  return abrlab::kExitConfig;
}
