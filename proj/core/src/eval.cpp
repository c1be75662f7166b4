#include "abrlab/eval.hpp"

#include <cmath>

namespace abrlab {

void EvalProtocol::validate() const {
  if (episodes < 2) throw std::invalid_argument("EvalProtocol: episodes >= 2");
  if (cdf_bins < 2) throw std::invalid_argument("EvalProtocol: cdf_bins >= 2");
}

PolicyController::PolicyController(const ParamSet& params, MoEConfig cfg, bool deterministic,
                                   std::uint64_t seed)
    : params_(params),
      cfg_(cfg),
      deterministic_(deterministic),
      action_rng_(seed, "action_sample"),
      router_rng_(seed, "router_noise") {}

int PolicyController::act(const DecisionContext& ctx) {
  tape_.reset(params_);
  RngStream* rrng = deterministic_ ? nullptr : &router_rng_;
  const PolicyOutput out = forward(ctx.obs.flat(), params_, cfg_, rrng, tape_);
  if (deterministic_) return argmax_action(out);
  return select_action(out, action_rng_).first;
}

std::vector<EpisodeRecord> evaluate(Controller& controller, const EvalProtocol& protocol,
                                    std::span<const Trace> traces, const VideoSpec& video,
                                    const QoEWeights& weights, const EnvConfig& env_cfg) {
  protocol.validate();
  if (traces.empty()) throw std::invalid_argument("evaluate: no traces");

  RngStream trace_rng(protocol.seed, "trace_select");
  std::vector<EpisodeRecord> records;
  records.reserve(static_cast<std::size_t>(protocol.episodes));

  for (int ep = 0; ep < protocol.episodes; ++ep) {
    const Trace& trace =
        traces[static_cast<std::size_t>(trace_rng.uniform_int(static_cast<int>(traces.size())))];
    AbrEnv env(video, fixed_schedule(weights), env_cfg,
               mix64(protocol.seed) ^ static_cast<std::uint64_t>(ep));
    Observation obs = env.reset(trace);
    std::vector<StepOutcome> outcomes;
    outcomes.reserve(static_cast<std::size_t>(video.n_chunks));
    while (!env.episode_done()) {
      DecisionContext ctx{video,
                          env.state().chunk_index,
                          env.state().buffer_s,
                          env.state().last_action,
                          env.throughput_history(),
                          weights,
                          obs};
      const int action = controller.act(ctx);
      auto result = env.step(action);
      obs = result.obs;
      outcomes.push_back(result.outcome);
    }
    const EpisodeQoE q = episode_qoe(outcomes);
    EpisodeRecord rec;
    rec.trace_id = trace.id;
    rec.chunks = static_cast<int>(outcomes.size());
    rec.qoe_total = q.total;
    rec.qoe_mean = q.total / rec.chunks;
    rec.bitrate_mbps = q.bitrate / rec.chunks;
    rec.rebuffer_s = q.rebuffer / rec.chunks;
    rec.smooth_mbps = rec.chunks > 1 ? q.smooth / (rec.chunks - 1) : 0.0;
    records.push_back(std::move(rec));
  }
  return records;
}

EvalSummary summarize(std::span<const EpisodeRecord> records, double level) {
  if (records.size() < 2) throw TooFewValues("summarize: need >= 2 episodes");
  std::vector<double> qoe, bitrate, rebuffer, smooth;
  qoe.reserve(records.size());
  for (const EpisodeRecord& r : records) {
    qoe.push_back(r.qoe_mean);
    bitrate.push_back(r.bitrate_mbps);
    rebuffer.push_back(r.rebuffer_s);
    smooth.push_back(r.smooth_mbps);
  }
  EvalSummary s;
  s.qoe_mean = mean_of(qoe);
  s.qoe_iqm = records.size() >= 4 ? iqm(qoe) : s.qoe_mean;
  s.qoe_interval = t_interval(qoe, level);
  s.bitrate_mean = mean_of(bitrate);
  s.bitrate_interval = t_interval(bitrate, level);
  s.rebuffer_mean = mean_of(rebuffer);
  s.rebuffer_interval = t_interval(rebuffer, level);
  s.smooth_mean = mean_of(smooth);
  s.smooth_interval = t_interval(smooth, level);
  return s;
}

}  // namespace abrlab
