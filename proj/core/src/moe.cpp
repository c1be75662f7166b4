#include "abrlab/moe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace abrlab {

const char* to_string(MoEVariant v) {
  switch (v) {
    case MoEVariant::MoE: return "moe";
    case MoEVariant::SMoE: return "smoe";
    case MoEVariant::PA_MoE: return "pa-moe";
    case MoEVariant::MLP: return "mlp";
  }
  return "?";
}

MoEVariant moe_variant_from_string(const std::string& s) {
  if (s == "moe") return MoEVariant::MoE;
  if (s == "smoe") return MoEVariant::SMoE;
  if (s == "pa-moe" || s == "pa_moe" || s == "pamoe") return MoEVariant::PA_MoE;
  if (s == "mlp") return MoEVariant::MLP;
  throw std::invalid_argument("unknown variant: " + s);
}

void MoEConfig::validate() const {
  if (n_experts < 1) throw std::invalid_argument("MoEConfig: n_experts >= 1");
  if (top_k < 1 || top_k > n_experts) throw std::invalid_argument("MoEConfig: 1 <= top_k <= n_experts");
  if (expert_hidden < 1) throw std::invalid_argument("MoEConfig: expert_hidden >= 1");
  if (router_noise_sigma < 0) throw std::invalid_argument("MoEConfig: router_noise_sigma >= 0");
  if (plasticity_gamma < 0) throw std::invalid_argument("MoEConfig: plasticity_gamma >= 0");
  if (obs_dim < 1 || n_actions < 2) throw std::invalid_argument("MoEConfig: bad dims");
}

namespace {

void add_network(ParamLayout& layout, const MoEConfig& cfg, Net net, const char* prefix,
                 int head_rows) {
  layout.add(std::string(prefix) + ".router.w", cfg.n_experts, cfg.obs_dim, net, -1);
  layout.add(std::string(prefix) + ".router.b", cfg.n_experts, 1, net, -1);
  for (int k = 0; k < cfg.n_experts; ++k) {
    const std::string e = std::string(prefix) + ".expert" + std::to_string(k);
    layout.add(e + ".fc1.w", cfg.expert_hidden, cfg.obs_dim, net, k);
    layout.add(e + ".fc1.b", cfg.expert_hidden, 1, net, k);
    layout.add(e + ".fc2.w", cfg.expert_hidden, cfg.expert_hidden, net, k);
    layout.add(e + ".fc2.b", cfg.expert_hidden, 1, net, k);
  }
  layout.add(std::string(prefix) + ".head.w", head_rows, cfg.expert_hidden, net, -1);
  layout.add(std::string(prefix) + ".head.b", head_rows, 1, net, -1);
}

}  // namespace

LayoutPtr make_moe_layout(const MoEConfig& cfg) {
  cfg.validate();
  auto layout = std::make_shared<ParamLayout>();
  add_network(*layout, cfg, Net::actor, "actor", cfg.n_actions);
  add_network(*layout, cfg, Net::critic, "critic", 1);
  return layout;
}

ParamSet init_params(const MoEConfig& cfg, RngStream& init) {
  ParamSet p(make_moe_layout(cfg));
  const ParamLayout& layout = *p.layout();
  for (int id = 0; id < layout.count(); ++id) {
    const SegmentSpec& s = layout.seg(id);
    auto dst = p.seg(id);
    if (s.cols == 1) continue;  // biases start at zero
    const double bound = std::sqrt(3.0 / s.cols);
    for (double& v : dst) v = init.uniform(-bound, bound);
  }
  return p;
}

namespace {

std::vector<double> plain_softmax(std::span<const double> x) {
  std::vector<double> y(x.size());
  double m = x[0];
  for (double v : x) m = std::max(m, v);
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - m);
    z += y[i];
  }
  for (double& v : y) v /= z;
  return y;
}

int argmax_lowest_tie(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

}  // namespace

RouteDecision route(std::span<const double> x, const ParamSet& params, int w_seg, int b_seg,
                    const MoEConfig& cfg, RngStream* noise_rng) {
  for (double v : x) {
    if (!std::isfinite(v)) throw NonFiniteInput("route");
  }
  const SegmentSpec& ws = params.layout()->seg(w_seg);
  if (ws.cols != static_cast<int>(x.size()) || ws.rows != cfg.n_experts) {
    throw ShapeMismatch("route: router shape mismatch");
  }
  RouteDecision d;
  d.clean_logits.resize(static_cast<std::size_t>(cfg.n_experts));
  const auto W = params.seg(w_seg);
  const auto b = params.seg(b_seg);
  for (int r = 0; r < cfg.n_experts; ++r) {
    double acc = b[static_cast<std::size_t>(r)];
    const double* wrow = W.data() + static_cast<long>(r) * ws.cols;
    for (int c = 0; c < ws.cols; ++c) acc += wrow[c] * x[static_cast<std::size_t>(c)];
    d.clean_logits[static_cast<std::size_t>(r)] = acc;
  }
  d.noise.assign(static_cast<std::size_t>(cfg.n_experts), 0.0);
  if (noise_rng != nullptr && cfg.router_noise_sigma > 0.0) {
    for (double& z : d.noise) z = cfg.router_noise_sigma * noise_rng->normal();
  }
  std::vector<double> noisy(static_cast<std::size_t>(cfg.n_experts));
  for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] = d.clean_logits[i] + d.noise[i];
  d.selected = argmax_lowest_tie(noisy);
  d.gate_probs = plain_softmax(d.clean_logits);
  return d;
}

namespace {

// dense -> relu -> dense -> relu
int expert_features(Tape& tape, int x_node, const ParamSet& params, const char* prefix,
                    int expert) {
  const ParamLayout& layout = *params.layout();
  const std::string e = std::string(prefix) + ".expert" + std::to_string(expert);
  const int h1 = tape.relu(tape.affine(x_node, layout.index_of(e + ".fc1.w"),
                                       layout.index_of(e + ".fc1.b")));
  return tape.relu(tape.affine(h1, layout.index_of(e + ".fc2.w"),
                               layout.index_of(e + ".fc2.b")));
}

// Combined expert features for one network on the tape; fills `decision`.
int network_features(Tape& tape, int x_node, std::span<const double> x,
                     const ParamSet& params, const MoEConfig& cfg, const char* prefix,
                     RngStream* router_rng, int forced_expert, RouteDecision* decision) {
  const ParamLayout& layout = *params.layout();
  const int rw = layout.index_of(std::string(prefix) + ".router.w");
  const int rb = layout.index_of(std::string(prefix) + ".router.b");

  if (cfg.variant == MoEVariant::MLP) {
    decision->clean_logits.assign(static_cast<std::size_t>(cfg.n_experts), 0.0);
    decision->noise.assign(static_cast<std::size_t>(cfg.n_experts), 0.0);
    decision->gate_probs.assign(static_cast<std::size_t>(cfg.n_experts), 0.0);
    decision->gate_probs[0] = 1.0;
    decision->selected = 0;
    return expert_features(tape, x_node, params, prefix, 0);
  }

  *decision = route(x, params, rw, rb, cfg, router_rng);
  if (forced_expert >= 0) decision->selected = forced_expert;

  switch (cfg.variant) {
    case MoEVariant::SMoE:
      return expert_features(tape, x_node, params, prefix, decision->selected);
    case MoEVariant::PA_MoE: {
      const int gate = tape.softmax(tape.affine(x_node, rw, rb));
      const int g_sel = tape.pick(gate, decision->selected);
      const int feat = expert_features(tape, x_node, params, prefix, decision->selected);
      return tape.scale_by(feat, g_sel);
    }
    case MoEVariant::MoE: {
      const int gate = tape.softmax(tape.affine(x_node, rw, rb));
      int mix = -1;
      for (int k = 0; k < cfg.n_experts; ++k) {
        const int term =
            tape.scale_by(expert_features(tape, x_node, params, prefix, k), tape.pick(gate, k));
        mix = (mix < 0) ? term : tape.add(mix, term);
      }
      return mix;
    }
    case MoEVariant::MLP:
      break;
  }
  throw std::logic_error("unreachable variant");
}

}  // namespace

PolicyOutput forward(std::span<const double> x, const ParamSet& params, const MoEConfig& cfg,
                     RngStream* router_rng, Tape& tape, ForcedRoute forced) {
  cfg.validate();
  if (static_cast<int>(x.size()) != cfg.obs_dim) throw ShapeMismatch("forward: obs dim");
  const ParamLayout& layout = *params.layout();

  PolicyOutput out;
  const int x_node = tape.input(x);

  const int actor_feat = network_features(tape, x_node, x, params, cfg, "actor", router_rng,
                                          forced.actor_expert, &out.actor_route);
  const int logits_node = tape.affine(actor_feat, layout.index_of("actor.head.w"),
                                      layout.index_of("actor.head.b"));
  out.probs_node = tape.softmax(logits_node);

  const int critic_feat = network_features(tape, x_node, x, params, cfg, "critic", router_rng,
                                           forced.critic_expert, &out.critic_route);
  out.value_node = tape.affine(critic_feat, layout.index_of("critic.head.w"),
                               layout.index_of("critic.head.b"));

  const auto logits = tape.value(logits_node);
  const auto probs = tape.value(out.probs_node);
  out.action_logits.assign(logits.begin(), logits.end());
  out.action_probs.assign(probs.begin(), probs.end());
  out.value = tape.value(out.value_node)[0];
  return out;
}

ParamSet plasticity_update(const ParamSet& params, const Gradient& grad, double lr,
                           const MoEConfig& cfg, const SelectedExperts& selected,
                           RngStream& noise) {
  if (lr <= 0.0) throw std::invalid_argument("plasticity_update: lr must be > 0");
  if (grad.layout != params.layout() ||
      grad.flat.size() != static_cast<std::size_t>(params.flat_len())) {
    throw ShapeMismatch("plasticity_update: gradient layout mismatch");
  }
  const double gamma = cfg.variant == MoEVariant::PA_MoE ? cfg.plasticity_gamma : 0.0;

  ParamSet next = params;
  const ParamLayout& layout = *params.layout();
  auto flat = next.flat();
  for (int id = 0; id < layout.count(); ++id) {
    const SegmentSpec& s = layout.seg(id);
    const bool noisy =
        gamma > 0.0 && s.expert >= 0 &&
        ((s.net == Net::actor && selected.actor[static_cast<std::size_t>(s.expert)] != 0) ||
         (s.net == Net::critic && selected.critic[static_cast<std::size_t>(s.expert)] != 0));
    const long off = s.offset;
    const long len = s.size();
    if (noisy) {
      for (long i = 0; i < len; ++i) {
        flat[static_cast<std::size_t>(off + i)] +=
            -lr * grad.flat[static_cast<std::size_t>(off + i)] + lr * gamma * noise.normal();
      }
    } else {
      for (long i = 0; i < len; ++i) {
        flat[static_cast<std::size_t>(off + i)] -=
            lr * grad.flat[static_cast<std::size_t>(off + i)];
      }
    }
  }
  return next;
}

std::pair<int, double> select_action(const PolicyOutput& out, RngStream& rng) {
  const double u = rng.uniform01();
  double cum = 0.0;
  const int n = static_cast<int>(out.action_probs.size());
  for (int a = 0; a < n; ++a) {
    cum += out.action_probs[static_cast<std::size_t>(a)];
    if (u < cum) return {a, std::log(out.action_probs[static_cast<std::size_t>(a)])};
  }
  // Rounding can leave cum fractionally below 1; take the last supported action.
  for (int a = n - 1; a >= 0; --a) {
    if (out.action_probs[static_cast<std::size_t>(a)] > 0.0) {
      return {a, std::log(out.action_probs[static_cast<std::size_t>(a)])};
    }
  }
  throw std::invalid_argument("select_action: no positive probability");
}

int argmax_action(const PolicyOutput& out) {
  return argmax_lowest_tie(out.action_probs);
}

}  // namespace abrlab
