// Fixed-policy evaluation: episode rollouts for learned policies and
// rule-based controllers, per-episode QoE component records, and the
// IQM / CDF / t-interval reporting protocol.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "abrlab/baselines.hpp"
#include "abrlab/env.hpp"
#include "abrlab/moe.hpp"
#include "abrlab/stats.hpp"

namespace abrlab {

enum class Split { train, test };

struct EvalProtocol {
  int episodes = 300;
  Split split = Split::test;
  bool deterministic_policy = true;  // argmax action, router noise off
  int cdf_bins = 500;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DecisionContext {
  const VideoSpec& video;
  int chunk_index;
  double buffer_s;
  int last_action;
  std::span<const double> throughput_history;  // measured Mbps, oldest first
  QoEWeights weights;
  const Observation& obs;
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual int act(const DecisionContext& ctx) = 0;
  virtual const char* name() const = 0;
};

class PolicyController : public Controller {
 public:
  PolicyController(const ParamSet& params, MoEConfig cfg, bool deterministic,
                   std::uint64_t seed);
  int act(const DecisionContext& ctx) override;
  const char* name() const override { return "policy"; }

 private:
  const ParamSet& params_;
  MoEConfig cfg_;
  bool deterministic_;
  RngStream action_rng_;
  RngStream router_rng_;
  Tape tape_;
};

class BufferBasedController : public Controller {
 public:
  explicit BufferBasedController(BaselineConfig cfg) : cfg_(cfg) { cfg_.kind = BaselineKind::BufferBased; }
  int act(const DecisionContext& ctx) override {
    return buffer_based_action(ctx.buffer_s, cfg_, ctx.video.n_bitrates());
  }
  const char* name() const override { return "buffer-based"; }

 private:
  BaselineConfig cfg_;
};

class RateBasedController : public Controller {
 public:
  explicit RateBasedController(BaselineConfig cfg) : cfg_(cfg) { cfg_.kind = BaselineKind::RateBased; }
  int act(const DecisionContext& ctx) override {
    return rate_based_action(ctx.throughput_history, cfg_, ctx.video);
  }
  const char* name() const override { return "rate-based"; }

 private:
  BaselineConfig cfg_;
};

class RobustMPCController : public Controller {
 public:
  explicit RobustMPCController(BaselineConfig cfg) : cfg_(cfg) { cfg_.kind = BaselineKind::RobustMPC; }
  int act(const DecisionContext& ctx) override {
    return robust_mpc_action(ctx.video, ctx.chunk_index, ctx.buffer_s, ctx.last_action,
                             ctx.throughput_history, cfg_, ctx.weights);
  }
  const char* name() const override { return "robust-mpc"; }

 private:
  BaselineConfig cfg_;
};

struct EpisodeRecord {
  std::string trace_id;
  double qoe_mean = 0.0;      // episode QoE total / chunks, active weights
  double qoe_total = 0.0;
  double bitrate_mbps = 0.0;  // mean q over chunks
  double rebuffer_s = 0.0;    // mean stall seconds per chunk
  double smooth_mbps = 0.0;   // mean |dq| over transitions
  int chunks = 0;
};

// Runs protocol.episodes episodes with per-episode trace selection and
// RNG substreams; the controller never mutates the policy parameters.
std::vector<EpisodeRecord> evaluate(Controller& controller, const EvalProtocol& protocol,
                                    std::span<const Trace> traces, const VideoSpec& video,
                                    const QoEWeights& weights,
                                    const EnvConfig& env_cfg = {});

struct EvalSummary {
  double qoe_mean = 0.0;
  double qoe_iqm = 0.0;
  TInterval qoe_interval;
  double bitrate_mean = 0.0;
  TInterval bitrate_interval;
  double rebuffer_mean = 0.0;
  TInterval rebuffer_interval;
  double smooth_mean = 0.0;
  TInterval smooth_interval;
};

EvalSummary summarize(std::span<const EpisodeRecord> records, double level = 0.95);

}  // namespace abrlab
