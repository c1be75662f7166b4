#include "abrlab/env.hpp"

#include <algorithm>
#include <cmath>

namespace abrlab {

double VideoSpec::max_chunk_size_bits() const {
  double m = 0.0;
  for (const auto& row : chunk_sizes_bits) {
    for (double v : row) m = std::max(m, v);
  }
  return m;
}

void VideoSpec::validate() const {
  if (n_chunks < 1) throw std::invalid_argument("VideoSpec: n_chunks must be >= 1");
  if (chunk_duration_s <= 0) throw std::invalid_argument("VideoSpec: chunk duration <= 0");
  if (buffer_max_s <= chunk_duration_s) {
    throw std::invalid_argument("VideoSpec: buffer_max_s must exceed chunk duration");
  }
  if (bitrates_kbps.size() < 2) throw std::invalid_argument("VideoSpec: need >= 2 bitrates");
  for (std::size_t j = 1; j < bitrates_kbps.size(); ++j) {
    if (bitrates_kbps[j] <= bitrates_kbps[j - 1]) {
      throw std::invalid_argument("VideoSpec: bitrates must be strictly ascending");
    }
  }
  if (chunk_sizes_bits.size() != static_cast<std::size_t>(n_chunks)) {
    throw std::invalid_argument("VideoSpec: chunk_sizes_bits must have n_chunks rows");
  }
  for (const auto& row : chunk_sizes_bits) {
    if (row.size() != bitrates_kbps.size()) {
      throw std::invalid_argument("VideoSpec: chunk size row width mismatch");
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] <= 0 || (j > 0 && row[j] <= row[j - 1])) {
        throw std::invalid_argument("VideoSpec: chunk sizes must ascend with bitrate");
      }
    }
  }
}

VideoSpec default_video_spec(std::uint64_t seed) {
  VideoSpec v;
  RngStream rng(seed, "chunk_size");
  v.chunk_sizes_bits.resize(static_cast<std::size_t>(v.n_chunks));
  for (auto& row : v.chunk_sizes_bits) {
    const double complexity = rng.uniform(0.85, 1.15);
    row.resize(v.bitrates_kbps.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = v.bitrates_kbps[j] * 1000.0 * v.chunk_duration_s * complexity;
    }
  }
  v.validate();
  return v;
}

long ShiftSchedule::cycle_steps() const {
  long total = 0;
  for (const Regime& r : regimes) total += r.duration_steps;
  return total;
}

int active_regime_index(const ShiftSchedule& schedule, long env_step) {
  if (schedule.regimes.empty()) throw std::invalid_argument("empty shift schedule");
  if (env_step < 0) throw std::invalid_argument("active_weights: env_step must be >= 0");
  const long cycle = schedule.cycle_steps();
  long s = env_step;
  if (s >= cycle) {
    if (schedule.cyclic) {
      s %= cycle;
    } else {
      return static_cast<int>(schedule.regimes.size()) - 1;  // hold last
    }
  }
  for (std::size_t i = 0; i < schedule.regimes.size(); ++i) {
    if (s < schedule.regimes[i].duration_steps) return static_cast<int>(i);
    s -= schedule.regimes[i].duration_steps;
  }
  return static_cast<int>(schedule.regimes.size()) - 1;
}

QoEWeights active_weights(const ShiftSchedule& schedule, long env_step) {
  return schedule.regimes[static_cast<std::size_t>(active_regime_index(schedule, env_step))]
      .weights;
}

ShiftSchedule dln_schedule(double beta, long regime_steps, bool cyclic) {
  if (regime_steps < 1) throw std::invalid_argument("regime_steps must be >= 1");
  ShiftSchedule s;
  s.cyclic = cyclic;
  s.regimes = {
      {{1.0, beta, 1.0}, regime_steps, 'D'},
      {{1.0, 1.0, beta}, regime_steps, 'L'},
      {{beta, 1.0, 1.0}, regime_steps, 'N'},
  };
  return s;
}

ShiftSchedule fixed_schedule(QoEWeights weights) {
  ShiftSchedule s;
  s.cyclic = true;
  s.regimes = {{weights, 1, 'F'}};
  return s;
}

BufferTransition buffer_transition(double buffer_s, double delay_s, double chunk_s,
                                   double buffer_max_s) {
  BufferTransition t;
  const double drained = std::max(0.0, buffer_s - delay_s);
  t.rebuffer_s = std::max(0.0, delay_s - buffer_s);
  t.wait_s = std::max(0.0, drained + chunk_s - buffer_max_s);
  t.buffer_after_s = std::max(0.0, drained + chunk_s - t.wait_s);
  return t;
}

AbrEnv::AbrEnv(VideoSpec video, ShiftSchedule schedule, EnvConfig cfg, std::uint64_t seed)
    : video_(std::move(video)),
      schedule_(std::move(schedule)),
      cfg_(cfg),
      net_noise_(seed, "net_noise") {
  video_.validate();
  if (schedule_.regimes.empty()) throw std::invalid_argument("empty shift schedule");
}

bool AbrEnv::episode_done() const {
  return trace_ == nullptr || state_.chunk_index >= video_.n_chunks;
}

Observation AbrEnv::reset(const Trace& trace) {
  if (trace.points.size() < 2) throw std::invalid_argument("reset: trace needs >= 2 points");
  trace_ = &trace;
  state_ = EnvState{};
  measured_.clear();
  return make_observation();
}

AbrEnv::StepResult AbrEnv::step(int action) {
  if (episode_done()) throw EpisodeFinished();
  if (action < 0 || action >= video_.n_bitrates()) throw ActionOutOfRange(action);

  const int chunk = state_.chunk_index;
  const double chunk_bits =
      video_.chunk_sizes_bits[static_cast<std::size_t>(chunk)][static_cast<std::size_t>(action)];
  const double chunk_mbit = chunk_bits / 1e6;

  // Effective download speed: mean trace throughput over the transfer
  // interval, found by two fixed-point passes on the interval length.
  const double t0 = state_.trace_cursor_s;
  double speed = throughput_at(*trace_, t0);
  double transfer_s = chunk_mbit / speed;
  for (int pass = 0; pass < 2; ++pass) {
    speed = mean_throughput(*trace_, t0, transfer_s);
    transfer_s = chunk_mbit / speed;
  }

  const double eta = cfg_.net_noise ? net_noise_.uniform(cfg_.noise_lo, cfg_.noise_hi) : 1.0;
  const double delay = (transfer_s + video_.rtt_s) * eta;

  const BufferTransition bt =
      buffer_transition(state_.buffer_s, delay, video_.chunk_duration_s, video_.buffer_max_s);
  const double rebuffer = bt.rebuffer_s;
  const double wait = bt.wait_s;
  const double buffer_after = bt.buffer_after_s;

  const QoEWeights w = active_weights(schedule_, global_step_);
  const double q = video_.quality_mbps(action);
  const double q_prev = state_.last_action >= 0 ? video_.quality_mbps(state_.last_action) : q;
  const double smooth = state_.last_action >= 0 ? std::abs(q - q_prev) : 0.0;

  StepOutcome out;
  out.qoe_bitrate = q;
  out.qoe_smooth = smooth;
  out.qoe_rebuffer = rebuffer;
  out.rebuffer_s = rebuffer;
  out.delay_s = delay;
  out.wait_s = wait;
  out.throughput_mbps = chunk_mbit / delay;
  out.reward_qoe = w.mu1 * q - w.mu2 * smooth - w.mu3 * rebuffer;

  state_.buffer_s = buffer_after;
  state_.last_action = action;
  state_.chunk_index = chunk + 1;
  state_.wall_clock_s += delay + wait;
  state_.trace_cursor_s = state_.wall_clock_s;
  for (int r = 0; r < 4; ++r) {
    auto& row = state_.history[static_cast<std::size_t>(r)];
    std::rotate(row.begin(), row.begin() + 1, row.end());
  }
  const double max_q = video_.quality_mbps(video_.n_bitrates() - 1);
  state_.history[0].back() = q / max_q;
  state_.history[1].back() = buffer_after / video_.buffer_max_s;
  state_.history[2].back() = out.throughput_mbps;
  state_.history[3].back() = std::min(delay, 10.0) / 10.0;
  measured_.push_back(out.throughput_mbps);

  ++global_step_;
  out.done = state_.chunk_index >= video_.n_chunks;
  return {make_observation(), out};
}

Observation AbrEnv::make_observation() const {
  Observation obs;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < kObsCols; ++c) {
      obs.at(r, c) = state_.history[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  if (state_.chunk_index < video_.n_chunks) {
    const auto& sizes = video_.chunk_sizes_bits[static_cast<std::size_t>(state_.chunk_index)];
    const double max_size = video_.max_chunk_size_bits();
    for (int j = 0; j < video_.n_bitrates() && j < kObsCols; ++j) {
      obs.at(4, j) = sizes[static_cast<std::size_t>(j)] / max_size;
    }
  }
  obs.at(5, 0) =
      static_cast<double>(video_.n_chunks - state_.chunk_index) / video_.n_chunks;
  return obs;
}

EpisodeQoE episode_qoe(std::span<const StepOutcome> outcomes) {
  if (outcomes.empty()) throw EmptyEpisode();
  EpisodeQoE q;
  for (const StepOutcome& o : outcomes) {
    q.total += o.reward_qoe;
    q.bitrate += o.qoe_bitrate;
    q.smooth += o.qoe_smooth;
    q.rebuffer += o.qoe_rebuffer;
  }
  return q;
}

}  // namespace abrlab
