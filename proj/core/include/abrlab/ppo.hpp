// PPO training loop: rollout collection, GAE, clipped surrogate plus value
// loss over minibatch epochs, and the plasticity-aware parameter update.
//
// Hyperparameter defaults: lr 1e-4, batch = rollout 2000, minibatch 62,
// 5 epochs, GAE gamma 0.99 / lambda 0.95, clip 0.2, entropy coef 0,
// value coef 5, 1000 iterations (2M steps).

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "abrlab/env.hpp"
#include "abrlab/moe.hpp"

namespace abrlab {

struct PPOConfig {
  double lr = 1e-4;
  int batch = 2000;
  int minibatch = 62;
  int iterations = 1000;
  int rollout_steps = 2000;
  int epochs = 5;
  double gae_gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double entropy_coef = 0.0;
  double value_coef = 5.0;
  int ckpt_interval = 25;

  long total_timesteps() const {
    return static_cast<long>(iterations) * rollout_steps;
  }
  void validate() const;
};

class NonFiniteLoss : public std::runtime_error {
 public:
  explicit NonFiniteLoss(const std::string& what) : std::runtime_error(what) {}
};

struct Transition {
  Observation obs;
  int action = 0;
  double reward = 0.0;
  bool done = false;
  double log_prob_old = 0.0;
  double value_old = 0.0;
  int actor_expert = 0;
  int critic_expert = 0;
  int regime = 0;
};

struct EpisodeSummary {
  double qoe_total = 0.0;
  double bitrate_sum = 0.0;
  double smooth_sum = 0.0;
  double rebuffer_sum = 0.0;
  int chunks = 0;
  int regime = 0;  // at episode end
};

struct RolloutBuffer {
  std::vector<Transition> steps;
  std::vector<double> advantage;
  std::vector<double> ret;
  double bootstrap_value = 0.0;
  std::vector<EpisodeSummary> episodes;  // episodes finished during this rollout
};

// Uniform episode trace selection from a split.
class TraceProvider {
 public:
  TraceProvider(std::vector<Trace> traces, std::uint64_t seed)
      : traces_(std::move(traces)), rng_(seed, "trace_select") {
    if (traces_.empty()) throw std::invalid_argument("TraceProvider: no traces");
  }
  const Trace& next() {
    return traces_[static_cast<std::size_t>(rng_.uniform_int(static_cast<int>(traces_.size())))];
  }
  const std::vector<Trace>& traces() const { return traces_; }

 private:
  std::vector<Trace> traces_;
  RngStream rng_;
};

// Owns the acting RNG streams and the running episode, which may span
// several rollouts; episodes auto-reset on done.
class RolloutCollector {
 public:
  RolloutCollector(AbrEnv& env, TraceProvider& traces, std::uint64_t seed);
  RolloutBuffer collect(const ParamSet& params, const MoEConfig& cfg, int steps);

 private:
  AbrEnv& env_;
  TraceProvider& traces_;
  RngStream action_rng_;
  RngStream router_rng_;
  Observation obs_;
  bool episode_open_ = false;
  std::vector<StepOutcome> episode_outcomes_;
  Tape scratch_;
};

// Backward GAE recursion; fills advantage and ret (= advantage + value).
void compute_gae(RolloutBuffer& buffer, double gamma, double lambda);

struct LossStats {
  double total = 0.0;
  double policy = 0.0;   // -mean clipped surrogate
  double value = 0.0;    // mean squared value error (before value_coef)
  double entropy = 0.0;  // mean policy entropy
  double clip_frac = 0.0;
};

// Builds the minibatch loss on the tape and returns the loss node.
// Advantages are normalized across the minibatch (mean 0, std 1, 1e-8 guard).
// Expert selections of the minibatch forwards are recorded into `selected`.
int ppo_loss_node(Tape& tape, const ParamSet& params, const MoEConfig& moe_cfg,
                  const PPOConfig& cfg, const RolloutBuffer& buffer,
                  std::span<const int> indices, SelectedExperts* selected,
                  LossStats* stats);

struct PlasticityRow {
  char network = 'a';  // 'a' actor, 'c' critic
  int expert = 0;
  int layer = 0;  // 1-based fc index
  double dormant = 0.0;
  int rank = 0;
  double eff_rank = 0.0;
  int approx_rank = 0;
  double weight_mean_abs = 0.0;
};

struct MetricsRecord {
  int iteration = 0;
  long env_steps = 0;  // cumulative, end of iteration
  int regime = 0;      // at iteration start
  int episodes = 0;
  int updates = 0;  // parameter updates this iteration
  double ep_qoe_mean = 0.0;      // mean total episode QoE this iteration
  double ep_bitrate_mean = 0.0;  // per-chunk means
  double ep_smooth_mean = 0.0;
  double ep_rebuffer_mean = 0.0;
  double mean_action = 0.0;
  double mean_reward = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_frac = 0.0;
  std::vector<double> actor_freq;   // rollout-time expert selection frequencies
  std::vector<double> critic_freq;
  double dormant_ratio = 0.0;  // aggregate over networks, experts, layers
  double batch_rank_mean = 0.0;
  double eff_rank_mean = 0.0;
  double approx_rank_mean = 0.0;
  double weight_mean_abs = 0.0;
  std::vector<PlasticityRow> layers;
  std::vector<EpisodeSummary> episode_list;
};

struct TrainInputs {
  VideoSpec video;
  ShiftSchedule schedule;
  EnvConfig env_cfg;
  std::vector<Trace> traces;
  MoEConfig moe;
  PPOConfig ppo;
  std::uint64_t seed = 1;
  int diag_batch = 256;  // diagnostic activation batch size
  double dormant_tau = 0.025;
  // Called after each checkpoint interval and once at the end.
  std::function<void(int iteration, const ParamSet&)> checkpoint_hook;
};

struct TrainResult {
  ParamSet params;
  std::vector<MetricsRecord> metrics;
};

TrainResult train(const TrainInputs& inputs);

// Value estimate with clean routing (no tape side effects kept).
double value_estimate(const Observation& obs, const ParamSet& params, const MoEConfig& cfg);

}  // namespace abrlab
