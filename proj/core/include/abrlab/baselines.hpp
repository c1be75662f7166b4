// Rule-based ABR controllers: buffer-based, rate-based, and robust MPC.
//
// Parameters follow the canonical settings of the control-theoretic ABR
// literature: reservoir 5 s, cushion 10 s, throughput window 5, MPC horizon 5.
// RobustMPC scores candidate bitrate sequences with the active QoE weights
// and deterministic dynamics (eta == 1), using a harmonic-mean throughput
// estimate discounted by the largest recent relative prediction error.

#pragma once

#include <span>

#include "abrlab/env.hpp"

namespace abrlab {

enum class BaselineKind { BufferBased, RateBased, RobustMPC };

const char* to_string(BaselineKind k);
BaselineKind baseline_from_string(const std::string& s);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::RobustMPC;
  double reservoir_s = 5.0;
  double cushion_s = 10.0;
  int past_window = 5;
  int mpc_horizon = 5;

  void validate() const;
};

// reservoir -> lowest, reservoir+cushion -> highest, linear (floored) between.
int buffer_based_action(double buffer_s, const BaselineConfig& cfg, int n_bitrates);

// Harmonic mean of the last past_window throughputs; largest bitrate that fits.
int rate_based_action(std::span<const double> past_throughputs_mbps,
                      const BaselineConfig& cfg, const VideoSpec& video);

// Exhaustive search over all bitrate sequences of length min(horizon, chunks
// left); ties resolve to the lower first bitrate.
int robust_mpc_action(const VideoSpec& video, int chunk_index, double buffer_s,
                      int last_action, std::span<const double> past_throughputs_mbps,
                      const BaselineConfig& cfg, const QoEWeights& weights);

// Robust throughput estimate used by MPC (exposed for tests).
double robust_throughput_estimate(std::span<const double> past_throughputs_mbps,
                                  int past_window);

}  // namespace abrlab
