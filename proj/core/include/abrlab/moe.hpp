// Mixture-of-experts actor-critic with noisy Top-1 routing and the
// plasticity-aware parameter update.
//
// Variants:
//   PA_MoE: noisy Top-1 routing; the selected expert's output is multiplied
//           by its softmax gate probability on the tape (so the router
//           learns), and selected experts receive the noisy update
//           w <- w - lr*g + lr*gamma*eps.
//   SMoE:   noisy Top-1 routing, no gate multiplication, no update noise.
//   MoE:    dense softmax mixture over all experts, no update noise.
//   MLP:    single expert (index 0), router unused.
//
// Router exploration noise applies during rollouts only; update-time and
// evaluation forwards route on clean logits.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "abrlab/diff.hpp"
#include "abrlab/rng.hpp"

namespace abrlab {

enum class MoEVariant { MoE, SMoE, PA_MoE, MLP };

const char* to_string(MoEVariant v);
MoEVariant moe_variant_from_string(const std::string& s);

struct MoEConfig {
  int n_experts = 3;
  int expert_hidden = 18;
  int top_k = 1;
  double router_noise_sigma = 1.0;
  double plasticity_gamma = 0.01;
  MoEVariant variant = MoEVariant::PA_MoE;
  int obs_dim = 48;
  int n_actions = 6;

  void validate() const;
};

struct RouteDecision {
  std::vector<double> clean_logits;  // g_n
  std::vector<double> noise;         // z_n (zeros when sigma == 0 or rng absent)
  std::vector<double> gate_probs;    // softmax(clean_logits)
  int selected = 0;                  // argmax(clean + noise), ties to lowest index
};

struct PolicyOutput {
  std::vector<double> action_logits;
  std::vector<double> action_probs;
  double value = 0.0;
  RouteDecision actor_route;
  RouteDecision critic_route;
  // Tape handles for loss construction.
  int probs_node = -1;
  int value_node = -1;
};

// Layout with segments: {actor,critic} x (router.w/b, expertK.fc1/fc2 w/b, head.w/b).
LayoutPtr make_moe_layout(const MoEConfig& cfg);

// Scaled-uniform fan-in init from the given stream; biases zero.
ParamSet init_params(const MoEConfig& cfg, RngStream& init);

// Routing on clean logits plus optional exploration noise.
RouteDecision route(std::span<const double> x, const ParamSet& params, int w_seg, int b_seg,
                    const MoEConfig& cfg, RngStream* noise_rng);

struct ForcedRoute {
  int actor_expert = -1;  // -1: route normally
  int critic_expert = -1;
};

PolicyOutput forward(std::span<const double> x, const ParamSet& params, const MoEConfig& cfg,
                     RngStream* router_rng, Tape& tape, ForcedRoute forced = {});

// Experts whose segments receive the plasticity noise in the next update.
struct SelectedExperts {
  std::vector<char> actor;  // size n_experts, nonzero = selected
  std::vector<char> critic;

  explicit SelectedExperts(int n_experts = 0)
      : actor(static_cast<std::size_t>(n_experts), 0),
        critic(static_cast<std::size_t>(n_experts), 0) {}
  void mark(const PolicyOutput& out) {
    actor.at(static_cast<std::size_t>(out.actor_route.selected)) = 1;
    critic.at(static_cast<std::size_t>(out.critic_route.selected)) = 1;
  }
};

// w <- w - lr*g everywhere; selected expert segments additionally get
// +lr*gamma*eps with eps ~ N(0, I) drawn from `noise` in segment order.
// Variants other than PA_MoE treat gamma as 0.
ParamSet plasticity_update(const ParamSet& params, const Gradient& grad, double lr,
                           const MoEConfig& cfg, const SelectedExperts& selected,
                           RngStream& noise);

// Categorical sample from action_probs; returns (action, log prob).
std::pair<int, double> select_action(const PolicyOutput& out, RngStream& rng);

int argmax_action(const PolicyOutput& out);

}  // namespace abrlab
