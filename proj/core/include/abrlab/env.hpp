// Chunked video streaming MDP.
//
// One step downloads one chunk at the chosen bitrate, advances the buffer by
// the download/wait recursions, charges the QoE reward for that chunk under
// the currently active weight regime, and produces the 6x8 observation:
//   row 0: last bitrate / max bitrate, most recent 8 steps
//   row 1: buffer / buffer_max
//   row 2: measured throughput, Mbps
//   row 3: download delay / 10 s, capped at 1
//   row 4: next chunk sizes for all bitrates / largest size (slots 0..5)
//   row 5: remaining-chunks fraction (slot 0)
// History slots run oldest (0) to newest (7) and start zero-filled.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "abrlab/rng.hpp"
#include "abrlab/trace.hpp"

namespace abrlab {

constexpr int kObsRows = 6;
constexpr int kObsCols = 8;
constexpr int kObsDim = kObsRows * kObsCols;

struct VideoSpec {
  int n_chunks = 49;
  double chunk_duration_s = 4.0;
  std::vector<double> bitrates_kbps = {300, 750, 1200, 1850, 2850, 4300};
  std::vector<std::vector<double>> chunk_sizes_bits;  // [chunk][bitrate]
  double buffer_max_s = 60.0;
  double rtt_s = 0.08;

  int n_bitrates() const { return static_cast<int>(bitrates_kbps.size()); }
  double quality_mbps(int bitrate_index) const {
    return bitrates_kbps.at(static_cast<std::size_t>(bitrate_index)) / 1000.0;
  }
  double max_chunk_size_bits() const;
  void validate() const;
};

// Default 49x6 video; per-chunk complexity factors from substream `chunk_size`.
VideoSpec default_video_spec(std::uint64_t seed);

struct QoEWeights {
  double mu1 = 1.0;  // bitrate
  double mu2 = 1.0;  // smoothness
  double mu3 = 1.0;  // rebuffer
};

struct Regime {
  QoEWeights weights;
  long duration_steps = 1;
  char label = '?';  // D, L, N for the canonical schedule
};

struct ShiftSchedule {
  std::vector<Regime> regimes;
  bool cyclic = true;
  long cycle_steps() const;
};

// Piecewise-constant lookup; cyclic wrap, or hold-last when not cyclic.
QoEWeights active_weights(const ShiftSchedule& schedule, long env_step);
int active_regime_index(const ShiftSchedule& schedule, long env_step);

// D -> L -> N with the beta emphasis: (1,b,1), (1,1,b), (b,1,1).
ShiftSchedule dln_schedule(double beta, long regime_steps, bool cyclic = true);
ShiftSchedule fixed_schedule(QoEWeights weights);

struct Observation {
  std::array<double, kObsDim> m{};  // row-major
  double& at(int row, int col) { return m[static_cast<std::size_t>(row * kObsCols + col)]; }
  double at(int row, int col) const { return m[static_cast<std::size_t>(row * kObsCols + col)]; }
  std::span<const double> flat() const { return {m.data(), m.size()}; }
};

struct StepOutcome {
  double reward_qoe = 0.0;
  double qoe_bitrate = 0.0;   // q(V_i^b), Mbps
  double qoe_smooth = 0.0;    // |q_i - q_{i-1}|, Mbps (0 for the first chunk)
  double qoe_rebuffer = 0.0;  // seconds stalled, same as rebuffer_s
  double rebuffer_s = 0.0;
  double delay_s = 0.0;
  double wait_s = 0.0;
  double throughput_mbps = 0.0;  // measured: chunk bits / delay
  bool done = false;
};

struct EnvState {
  int chunk_index = 0;
  double buffer_s = 0.0;
  int last_action = -1;  // -1 before the first chunk
  double wall_clock_s = 0.0;
  double trace_cursor_s = 0.0;
  std::array<std::array<double, kObsCols>, 4> history{};  // rows 0..3
};

struct EnvConfig {
  bool net_noise = true;  // multiplicative eta(i) on the download delay
  double noise_lo = 0.9;
  double noise_hi = 1.1;
};

struct BufferTransition {
  double rebuffer_s = 0.0;
  double wait_s = 0.0;
  double buffer_after_s = 0.0;
};

// One chunk's buffer recursion:
//   rebuffer = (delay - buffer)_+
//   wait     = ((buffer - delay)_+ + chunk - buffer_max)_+
//   buffer'  = ((buffer - delay)_+ + chunk - wait)_+
BufferTransition buffer_transition(double buffer_s, double delay_s, double chunk_s,
                                   double buffer_max_s);

class EpisodeFinished : public std::logic_error {
 public:
  EpisodeFinished() : std::logic_error("step() called on a finished episode") {}
};
class ActionOutOfRange : public std::out_of_range {
 public:
  explicit ActionOutOfRange(int a)
      : std::out_of_range("action out of range: " + std::to_string(a)) {}
};

class AbrEnv {
 public:
  AbrEnv(VideoSpec video, ShiftSchedule schedule, EnvConfig cfg, std::uint64_t seed);

  // Starts a new episode on `trace`; the shift-schedule step counter carries over.
  Observation reset(const Trace& trace);

  struct StepResult {
    Observation obs;
    StepOutcome outcome;
  };
  StepResult step(int action);

  const EnvState& state() const { return state_; }
  const VideoSpec& video() const { return video_; }
  const ShiftSchedule& schedule() const { return schedule_; }
  bool episode_done() const;
  long global_step() const { return global_step_; }
  QoEWeights current_weights() const { return active_weights(schedule_, global_step_); }
  int current_regime() const { return active_regime_index(schedule_, global_step_); }
  // Measured chunk throughputs of the current episode, oldest to newest.
  const std::vector<double>& throughput_history() const { return measured_; }

 private:
  Observation make_observation() const;

  VideoSpec video_;
  ShiftSchedule schedule_;
  EnvConfig cfg_;
  RngStream net_noise_;
  const Trace* trace_ = nullptr;
  EnvState state_;
  long global_step_ = 0;
  std::vector<double> measured_;
};

struct EpisodeQoE {
  double total = 0.0;
  double bitrate = 0.0;
  double smooth = 0.0;
  double rebuffer = 0.0;
};

class EmptyEpisode : public std::invalid_argument {
 public:
  EmptyEpisode() : std::invalid_argument("episode_qoe: empty outcome list") {}
};

// Sums per-chunk components; `total` is the piecewise-weighted QoE aggregate.
EpisodeQoE episode_qoe(std::span<const StepOutcome> outcomes);

}  // namespace abrlab
