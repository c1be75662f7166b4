#include "abrlab/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "abrlab/plasticity.hpp"

namespace abrlab {

void PPOConfig::validate() const {
  if (lr <= 0) throw std::invalid_argument("PPOConfig: lr > 0");
  if (minibatch < 1 || minibatch > batch) throw std::invalid_argument("PPOConfig: minibatch <= batch");
  if (rollout_steps != batch) throw std::invalid_argument("PPOConfig: rollout_steps == batch");
  if (iterations < 1 || epochs < 1) throw std::invalid_argument("PPOConfig: iterations, epochs >= 1");
  if (gae_gamma < 0 || gae_gamma > 1 || gae_lambda < 0 || gae_lambda > 1) {
    throw std::invalid_argument("PPOConfig: gae parameters in [0,1]");
  }
  if (clip_eps <= 0) throw std::invalid_argument("PPOConfig: clip_eps > 0");
  if (value_coef < 0 || entropy_coef < 0) throw std::invalid_argument("PPOConfig: coefs >= 0");
}

RolloutCollector::RolloutCollector(AbrEnv& env, TraceProvider& traces, std::uint64_t seed)
    : env_(env),
      traces_(traces),
      action_rng_(seed, "action_sample"),
      router_rng_(seed, "router_noise") {}

RolloutBuffer RolloutCollector::collect(const ParamSet& params, const MoEConfig& cfg,
                                        int steps) {
  if (steps < 1) throw std::invalid_argument("collect: steps >= 1");
  RolloutBuffer buffer;
  buffer.steps.reserve(static_cast<std::size_t>(steps));

  if (!episode_open_) {
    obs_ = env_.reset(traces_.next());
    episode_open_ = true;
    episode_outcomes_.clear();
  }

  for (int t = 0; t < steps; ++t) {
    scratch_.reset(params);
    const PolicyOutput out = forward(obs_.flat(), params, cfg, &router_rng_, scratch_);
    const auto [action, log_prob] = select_action(out, action_rng_);

    Transition tr;
    tr.obs = obs_;
    tr.action = action;
    tr.log_prob_old = log_prob;
    tr.value_old = out.value;
    tr.actor_expert = out.actor_route.selected;
    tr.critic_expert = out.critic_route.selected;
    tr.regime = env_.current_regime();

    const auto result = env_.step(action);
    tr.reward = result.outcome.reward_qoe;
    tr.done = result.outcome.done;
    obs_ = result.obs;
    episode_outcomes_.push_back(result.outcome);
    buffer.steps.push_back(tr);

    if (result.outcome.done) {
      const EpisodeQoE q = episode_qoe(episode_outcomes_);
      EpisodeSummary summary;
      summary.qoe_total = q.total;
      summary.bitrate_sum = q.bitrate;
      summary.smooth_sum = q.smooth;
      summary.rebuffer_sum = q.rebuffer;
      summary.chunks = static_cast<int>(episode_outcomes_.size());
      summary.regime = env_.current_regime();
      buffer.episodes.push_back(summary);
      episode_outcomes_.clear();
      obs_ = env_.reset(traces_.next());
    }
  }

  scratch_.reset(params);
  buffer.bootstrap_value = forward(obs_.flat(), params, cfg, nullptr, scratch_).value;
  return buffer;
}

void compute_gae(RolloutBuffer& buffer, double gamma, double lambda) {
  const std::size_t n = buffer.steps.size();
  if (n == 0) throw std::invalid_argument("compute_gae: empty buffer");
  buffer.advantage.assign(n, 0.0);
  buffer.ret.assign(n, 0.0);
  double lastgaelam = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const Transition& tr = buffer.steps[i];
    const double next_nonterminal = tr.done ? 0.0 : 1.0;
    const double next_value =
        i + 1 < n ? buffer.steps[i + 1].value_old : buffer.bootstrap_value;
    const double delta =
        tr.reward + gamma * next_value * next_nonterminal - tr.value_old;
    lastgaelam = delta + gamma * lambda * next_nonterminal * lastgaelam;
    buffer.advantage[i] = lastgaelam;
    buffer.ret[i] = lastgaelam + tr.value_old;
  }
}

int ppo_loss_node(Tape& tape, const ParamSet& params, const MoEConfig& moe_cfg,
                  const PPOConfig& cfg, const RolloutBuffer& buffer,
                  std::span<const int> indices, SelectedExperts* selected,
                  LossStats* stats) {
  if (indices.empty()) throw std::invalid_argument("ppo_loss_node: empty minibatch");
  const double n = static_cast<double>(indices.size());

  double adv_mean = 0.0;
  for (int i : indices) adv_mean += buffer.advantage[static_cast<std::size_t>(i)];
  adv_mean /= n;
  double adv_var = 0.0;
  for (int i : indices) {
    const double d = buffer.advantage[static_cast<std::size_t>(i)] - adv_mean;
    adv_var += d * d;
  }
  const double adv_std = std::sqrt(adv_var / n) + 1e-8;

  std::vector<int> surr_nodes, vloss_nodes, ent_nodes;
  surr_nodes.reserve(indices.size());
  vloss_nodes.reserve(indices.size());
  ent_nodes.reserve(indices.size());
  double clip_hits = 0.0;

  for (int i : indices) {
    const Transition& tr = buffer.steps[static_cast<std::size_t>(i)];
    const PolicyOutput out = forward(tr.obs.flat(), params, moe_cfg, nullptr, tape);
    if (selected != nullptr) selected->mark(out);

    const double adv = (buffer.advantage[static_cast<std::size_t>(i)] - adv_mean) / adv_std;
    const int logp = tape.log(tape.pick(out.probs_node, tr.action));
    const int ratio = tape.exp(tape.add_const(logp, -tr.log_prob_old));
    const int unclipped = tape.scale(ratio, adv);
    const int clipped = tape.scale(tape.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps), adv);
    surr_nodes.push_back(tape.min2(unclipped, clipped));

    const int vdiff = tape.add_const(out.value_node, -buffer.ret[static_cast<std::size_t>(i)]);
    vloss_nodes.push_back(tape.square(vdiff));

    ent_nodes.push_back(tape.entropy(out.probs_node));

    if (std::abs(tape.scalar(ratio) - 1.0) > cfg.clip_eps) clip_hits += 1.0;
  }

  const int surr_sum = tape.sum_of(surr_nodes);
  const int vloss_sum = tape.sum_of(vloss_nodes);
  const int ent_sum = tape.sum_of(ent_nodes);
  int loss = tape.add(tape.scale(surr_sum, -1.0 / n),
                      tape.scale(vloss_sum, cfg.value_coef / n));
  loss = tape.add(loss, tape.scale(ent_sum, -cfg.entropy_coef / n));

  const double total = tape.scalar(loss);
  if (!std::isfinite(total)) {
    throw NonFiniteLoss("minibatch loss is not finite");
  }
  if (stats != nullptr) {
    stats->total = total;
    stats->policy = -tape.scalar(surr_sum) / n;
    stats->value = tape.scalar(vloss_sum) / n;
    stats->entropy = tape.scalar(ent_sum) / n;
    stats->clip_frac = clip_hits / n;
  }
  return loss;
}

double value_estimate(const Observation& obs, const ParamSet& params, const MoEConfig& cfg) {
  Tape tape;
  tape.reset(params);
  return forward(obs.flat(), params, cfg, nullptr, tape).value;
}

namespace {

// Forced forward through every expert of both networks, appending one row per
// observation to each (network, expert, layer) activation matrix.
void append_activations(std::span<const double> x, const ParamSet& params,
                        const MoEConfig& cfg, std::vector<ActivationBatch>& batches) {
  const ParamLayout& layout = *params.layout();
  const char* prefixes[2] = {"actor", "critic"};
  std::vector<double> h1(static_cast<std::size_t>(cfg.expert_hidden));
  std::vector<double> h2(static_cast<std::size_t>(cfg.expert_hidden));
  for (int net = 0; net < 2; ++net) {
    for (int e = 0; e < cfg.n_experts; ++e) {
      const std::string base =
          std::string(prefixes[net]) + ".expert" + std::to_string(e);
      const auto W1 = params.seg(layout.index_of(base + ".fc1.w"));
      const auto b1 = params.seg(layout.index_of(base + ".fc1.b"));
      const auto W2 = params.seg(layout.index_of(base + ".fc2.w"));
      const auto b2 = params.seg(layout.index_of(base + ".fc2.b"));
      for (int r = 0; r < cfg.expert_hidden; ++r) {
        double acc = b1[static_cast<std::size_t>(r)];
        const double* row = W1.data() + static_cast<long>(r) * cfg.obs_dim;
        for (int c = 0; c < cfg.obs_dim; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
        h1[static_cast<std::size_t>(r)] = acc > 0.0 ? acc : 0.0;
      }
      for (int r = 0; r < cfg.expert_hidden; ++r) {
        double acc = b2[static_cast<std::size_t>(r)];
        const double* row = W2.data() + static_cast<long>(r) * cfg.expert_hidden;
        for (int c = 0; c < cfg.expert_hidden; ++c) acc += row[c] * h1[static_cast<std::size_t>(c)];
        h2[static_cast<std::size_t>(r)] = acc > 0.0 ? acc : 0.0;
      }
      const std::size_t idx = (static_cast<std::size_t>(net) * cfg.n_experts +
                               static_cast<std::size_t>(e)) * 2;
      batches[idx].m.insert(batches[idx].m.end(), h1.begin(), h1.end());
      batches[idx].rows += 1;
      batches[idx + 1].m.insert(batches[idx + 1].m.end(), h2.begin(), h2.end());
      batches[idx + 1].rows += 1;
    }
  }
}

}  // namespace

TrainResult train(const TrainInputs& inputs) {
  inputs.ppo.validate();
  inputs.moe.validate();
  if (inputs.moe.obs_dim != kObsDim) {
    throw std::invalid_argument("train: moe.obs_dim must match the 6x8 observation");
  }

  AbrEnv env(inputs.video, inputs.schedule, inputs.env_cfg, inputs.seed);
  TraceProvider traces(inputs.traces, inputs.seed);
  RolloutCollector collector(env, traces, inputs.seed);

  RngStream init_rng(inputs.seed, "init");
  RngStream plasticity_rng(inputs.seed, "plasticity_noise");
  RngStream shuffle_rng(inputs.seed, "minibatch");

  ParamSet params = init_params(inputs.moe, init_rng);
  Tape tape;
  Gradient grad(params.layout());

  TrainResult result;
  result.metrics.reserve(static_cast<std::size_t>(inputs.ppo.iterations));

  std::vector<int> order(static_cast<std::size_t>(inputs.ppo.batch));

  for (int iter = 1; iter <= inputs.ppo.iterations; ++iter) {
    const int regime_at_start = env.current_regime();
    RolloutBuffer buffer = collector.collect(params, inputs.moe, inputs.ppo.rollout_steps);
    compute_gae(buffer, inputs.ppo.gae_gamma, inputs.ppo.gae_lambda);

    LossStats agg{};
    int updates = 0;
    for (int epoch = 0; epoch < inputs.ppo.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1],
                  order[static_cast<std::size_t>(shuffle_rng.uniform_int(static_cast<int>(i)))]);
      }
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(inputs.ppo.minibatch)) {
        const std::size_t count =
            std::min<std::size_t>(static_cast<std::size_t>(inputs.ppo.minibatch),
                                  order.size() - start);
        tape.reset(params);
        grad.zero();
        SelectedExperts selected(inputs.moe.n_experts);
        LossStats stats;
        const int loss = ppo_loss_node(tape, params, inputs.moe, inputs.ppo, buffer,
                                       std::span<const int>(order.data() + start, count),
                                       &selected, &stats);
        tape.backward(loss, grad);
        params = plasticity_update(params, grad, inputs.ppo.lr, inputs.moe, selected,
                                   plasticity_rng);
        agg.total += stats.total;
        agg.policy += stats.policy;
        agg.value += stats.value;
        agg.entropy += stats.entropy;
        agg.clip_frac += stats.clip_frac;
        ++updates;
      }
    }

    MetricsRecord rec;
    rec.iteration = iter;
    rec.env_steps = static_cast<long>(iter) * inputs.ppo.rollout_steps;
    rec.regime = regime_at_start;
    rec.episodes = static_cast<int>(buffer.episodes.size());
    rec.updates = updates;
    rec.episode_list = buffer.episodes;
    for (const EpisodeSummary& e : buffer.episodes) {
      rec.ep_qoe_mean += e.qoe_total;
      rec.ep_bitrate_mean += e.bitrate_sum / e.chunks;
      rec.ep_smooth_mean += e.smooth_sum / e.chunks;
      rec.ep_rebuffer_mean += e.rebuffer_sum / e.chunks;
    }
    if (!buffer.episodes.empty()) {
      const double ne = static_cast<double>(buffer.episodes.size());
      rec.ep_qoe_mean /= ne;
      rec.ep_bitrate_mean /= ne;
      rec.ep_smooth_mean /= ne;
      rec.ep_rebuffer_mean /= ne;
    }
    std::vector<int> actor_sel, critic_sel;
    actor_sel.reserve(buffer.steps.size());
    critic_sel.reserve(buffer.steps.size());
    for (const Transition& tr : buffer.steps) {
      rec.mean_action += tr.action;
      rec.mean_reward += tr.reward;
      actor_sel.push_back(tr.actor_expert);
      critic_sel.push_back(tr.critic_expert);
    }
    rec.mean_action /= static_cast<double>(buffer.steps.size());
    rec.mean_reward /= static_cast<double>(buffer.steps.size());
    rec.actor_freq = load_balance(actor_sel, inputs.moe.n_experts);
    rec.critic_freq = load_balance(critic_sel, inputs.moe.n_experts);
    const double nu = static_cast<double>(updates);
    rec.policy_loss = agg.policy / nu;
    rec.value_loss = agg.value / nu;
    rec.entropy = agg.entropy / nu;
    rec.clip_frac = agg.clip_frac / nu;

    // Plasticity diagnostics on a strided sample of this rollout's
    // observations, router noise off, every expert forced.
    const int nb = std::min<int>(inputs.diag_batch, static_cast<int>(buffer.steps.size()));
    std::vector<ActivationBatch> batches(
        static_cast<std::size_t>(2 * inputs.moe.n_experts * 2));
    for (auto& b : batches) {
      b.rows = 0;
      b.cols = inputs.moe.expert_hidden;
    }
    for (int k = 0; k < nb; ++k) {
      const std::size_t idx =
          static_cast<std::size_t>(static_cast<long>(k) * buffer.steps.size() / nb);
      append_activations(buffer.steps[idx].obs.flat(), params, inputs.moe, batches);
    }
    const ParamLayout& layout = *params.layout();
    double dorm_acc = 0.0, rank_acc = 0.0, eff_acc = 0.0, approx_acc = 0.0;
    for (int net = 0; net < 2; ++net) {
      for (int e = 0; e < inputs.moe.n_experts; ++e) {
        for (int l = 0; l < 2; ++l) {
          const std::size_t idx =
              (static_cast<std::size_t>(net) * inputs.moe.n_experts +
               static_cast<std::size_t>(e)) * 2 + static_cast<std::size_t>(l);
          PlasticityRow row;
          row.network = net == 0 ? 'a' : 'c';
          row.expert = e;
          row.layer = l + 1;
          row.dormant = dormant_ratio(batches[idx], inputs.dormant_tau);
          row.rank = batch_rank(batches[idx]);
          double eff = 0.0;
          int apx = 0;
          try {
            eff = effective_rank(batches[idx]);
            apx = approx_rank(batches[idx], 0.99);
          } catch (const ZeroMatrix&) {
            eff = 0.0;  // fully dead layer
            apx = 0;
          }
          row.eff_rank = eff;
          row.approx_rank = apx;
          const std::string seg = std::string(net == 0 ? "actor" : "critic") + ".expert" +
                                  std::to_string(e) + ".fc" + std::to_string(l + 1) + ".w";
          const auto w = params.seg(layout.index_of(seg));
          double acc = 0.0;
          for (double v : w) acc += std::abs(v);
          row.weight_mean_abs = acc / static_cast<double>(w.size());
          rec.layers.push_back(row);
          dorm_acc += row.dormant;
          rank_acc += row.rank;
          eff_acc += row.eff_rank;
          approx_acc += row.approx_rank;
        }
      }
    }
    const double nl = static_cast<double>(rec.layers.size());
    rec.dormant_ratio = dorm_acc / nl;
    rec.batch_rank_mean = rank_acc / nl;
    rec.eff_rank_mean = eff_acc / nl;
    rec.approx_rank_mean = approx_acc / nl;
    double wacc = 0.0;
    long wcount = 0;
    for (const double v : params.flat()) {
      wacc += std::abs(v);
      ++wcount;
    }
    rec.weight_mean_abs = wacc / static_cast<double>(wcount);

    result.metrics.push_back(std::move(rec));

    if (inputs.checkpoint_hook &&
        (iter % inputs.ppo.ckpt_interval == 0 || iter == inputs.ppo.iterations)) {
      inputs.checkpoint_hook(iter, params);
    }
  }

  result.params = std::move(params);
  return result;
}

}  // namespace abrlab
