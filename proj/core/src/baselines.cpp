#include "abrlab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace abrlab {

const char* to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::BufferBased: return "buffer-based";
    case BaselineKind::RateBased: return "rate-based";
    case BaselineKind::RobustMPC: return "robust-mpc";
  }
  return "?";
}

BaselineKind baseline_from_string(const std::string& s) {
  if (s == "buffer-based" || s == "bb") return BaselineKind::BufferBased;
  if (s == "rate-based" || s == "rb") return BaselineKind::RateBased;
  if (s == "robust-mpc" || s == "mpc") return BaselineKind::RobustMPC;
  throw std::invalid_argument("unknown baseline: " + s);
}

void BaselineConfig::validate() const {
  if (reservoir_s < 0) throw std::invalid_argument("reservoir_s must be >= 0");
  if (!(reservoir_s < cushion_s)) throw std::invalid_argument("need reservoir_s < cushion_s");
  if (past_window < 1) throw std::invalid_argument("past_window must be >= 1");
  if (mpc_horizon < 1 || mpc_horizon > 8) throw std::invalid_argument("1 <= mpc_horizon <= 8");
}

int buffer_based_action(double buffer_s, const BaselineConfig& cfg, int n_bitrates) {
  if (buffer_s < 0) throw std::invalid_argument("buffer_s must be >= 0");
  const int top = n_bitrates - 1;
  if (buffer_s <= cfg.reservoir_s) return 0;
  if (buffer_s >= cfg.reservoir_s + cfg.cushion_s) return top;
  const int idx = static_cast<int>(
      std::floor(top * (buffer_s - cfg.reservoir_s) / cfg.cushion_s));
  return std::clamp(idx, 0, top);
}

namespace {

double harmonic_mean(std::span<const double> v) {
  double inv = 0.0;
  for (double x : v) inv += 1.0 / x;
  return static_cast<double>(v.size()) / inv;
}

std::span<const double> last_window(std::span<const double> v, int window) {
  const std::size_t n = std::min<std::size_t>(v.size(), static_cast<std::size_t>(window));
  return v.subspan(v.size() - n, n);
}

}  // namespace

int rate_based_action(std::span<const double> past_throughputs_mbps,
                      const BaselineConfig& cfg, const VideoSpec& video) {
  if (past_throughputs_mbps.empty()) return 0;  // cold start
  const double estimate = harmonic_mean(last_window(past_throughputs_mbps, cfg.past_window));
  int choice = 0;
  for (int j = 0; j < video.n_bitrates(); ++j) {
    if (video.bitrates_kbps[static_cast<std::size_t>(j)] <= estimate * 1000.0) choice = j;
  }
  return choice;
}

double robust_throughput_estimate(std::span<const double> past_throughputs_mbps,
                                  int past_window) {
  const auto recent = last_window(past_throughputs_mbps, past_window);
  const double hm = harmonic_mean(recent);
  // Max relative error of the harmonic-mean predictor over the window,
  // each prediction using only samples before the predicted chunk.
  double max_err = 0.0;
  const std::size_t start = past_throughputs_mbps.size() - recent.size();
  for (std::size_t k = start; k < past_throughputs_mbps.size(); ++k) {
    const std::size_t hist_lo = k > static_cast<std::size_t>(past_window)
                                    ? k - static_cast<std::size_t>(past_window)
                                    : 0;
    if (k == hist_lo) continue;  // no history before this sample
    const double pred = harmonic_mean(past_throughputs_mbps.subspan(hist_lo, k - hist_lo));
    const double actual = past_throughputs_mbps[k];
    max_err = std::max(max_err, std::abs(pred - actual) / actual);
  }
  return hm / (1.0 + max_err);
}

int robust_mpc_action(const VideoSpec& video, int chunk_index, double buffer_s,
                      int last_action, std::span<const double> past_throughputs_mbps,
                      const BaselineConfig& cfg, const QoEWeights& weights) {
  if (past_throughputs_mbps.empty()) return 0;  // cold start
  const int remaining = video.n_chunks - chunk_index;
  if (remaining <= 0) throw std::invalid_argument("robust_mpc_action: no chunks left");
  const int horizon = std::min(cfg.mpc_horizon, remaining);
  const int n = video.n_bitrates();
  const double estimate_mbps =
      robust_throughput_estimate(past_throughputs_mbps, cfg.past_window);

  std::vector<int> seq(static_cast<std::size_t>(horizon), 0);
  double best_qoe = -std::numeric_limits<double>::infinity();
  int best_first = 0;

  // Odometer enumeration: earlier sequences have lower first actions, so a
  // strict improvement test keeps ties on the lower bitrate.
  while (true) {
    double qoe = 0.0;
    double buf = buffer_s;
    double q_prev = last_action >= 0 ? video.quality_mbps(last_action) : -1.0;
    for (int h = 0; h < horizon; ++h) {
      const int b = seq[static_cast<std::size_t>(h)];
      const double bits =
          video.chunk_sizes_bits[static_cast<std::size_t>(chunk_index + h)]
                                [static_cast<std::size_t>(b)];
      const double delay = bits / 1e6 / estimate_mbps + video.rtt_s;  // eta == 1
      const double rebuf = std::max(0.0, delay - buf);
      const double drained = std::max(0.0, buf - delay);
      const double wait =
          std::max(0.0, drained + video.chunk_duration_s - video.buffer_max_s);
      buf = std::max(0.0, drained + video.chunk_duration_s - wait);
      const double q = video.quality_mbps(b);
      const double smooth = q_prev >= 0.0 ? std::abs(q - q_prev) : 0.0;
      qoe += weights.mu1 * q - weights.mu2 * smooth - weights.mu3 * rebuf;
      q_prev = q;
    }
    if (qoe > best_qoe) {
      best_qoe = qoe;
      best_first = seq[0];
    }
    // Advance the odometer, most-significant digit first so the first action
    // ascends outermost.
    int pos = horizon - 1;
    while (pos >= 0 && seq[static_cast<std::size_t>(pos)] == n - 1) {
      seq[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++seq[static_cast<std::size_t>(pos)];
  }
  return best_first;
}

}  // namespace abrlab
