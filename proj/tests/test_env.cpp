#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "abrlab/env.hpp"
#include "abrlab/rng.hpp"

using namespace abrlab;

namespace {

VideoSpec tiny_video(int chunks, double buffer_max) {
  VideoSpec v;
  v.n_chunks = chunks;
  v.chunk_duration_s = 4.0;
  v.bitrates_kbps = {1000, 3000};
  v.buffer_max_s = buffer_max;
  v.rtt_s = 0.08;
  v.chunk_sizes_bits.clear();
  for (int i = 0; i < chunks; ++i) {
    const double c = 1.0 + 0.1 * (i % 3) - 0.1;  // 0.9, 1.0, 1.1 cycling
    v.chunk_sizes_bits.push_back({1000e3 * 4.0 * (1.0 + c) / 2.0,
                                  3000e3 * 4.0 * (1.0 + c) / 2.0});
  }
  return v;
}

Trace steppy_trace() {
  Trace t;
  t.id = "steppy";
  t.points = {{0.0, 2.0}, {8.0, 1.0}, {16.0, 4.0}};  // duration 24
  return t;
}

// Clean-room restatement of the documented download model for the oracle:
// exact integral of the wrapped piecewise rate via its breakpoint list,
// two fixed-point passes, the buffer recursion, per-chunk QoE.
double oracle_mean_rate(const Trace& tr, double t0, double dur) {
  if (dur <= 0.0) return throughput_at(tr, t0);
  const double period = tr.duration_s();
  std::vector<double> cuts = {t0, t0 + dur};
  for (double base = std::floor(t0 / period) * period; base < t0 + dur + period;
       base += period) {
    for (const TracePoint& p : tr.points) {
      const double c = base + p.time_s;
      if (c > t0 && c < t0 + dur) cuts.push_back(c);
    }
    if (base > t0 && base < t0 + dur) cuts.push_back(base);
  }
  std::sort(cuts.begin(), cuts.end());
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    integral += throughput_at(tr, std::fmod(mid, period)) * (cuts[i + 1] - cuts[i]);
  }
  return integral / dur;
}

struct OracleStep {
  double rebuffer, wait, buffer_after, delay, reward;
};

OracleStep oracle_step(const VideoSpec& v, const Trace& tr, double wall_clock,
                       double buffer, int chunk, int action, int last_action,
                       const QoEWeights& w) {
  const double mbit = v.chunk_sizes_bits[chunk][action] / 1e6;
  double tau = mbit / throughput_at(tr, wall_clock);
  for (int pass = 0; pass < 2; ++pass) tau = mbit / oracle_mean_rate(tr, wall_clock, tau);
  const double delay = tau + v.rtt_s;  // eta == 1
  const double rebuffer = std::max(0.0, delay - buffer);
  const double drained = std::max(0.0, buffer - delay);
  const double wait = std::max(0.0, drained + v.chunk_duration_s - v.buffer_max_s);
  const double buffer_after = std::max(0.0, drained + v.chunk_duration_s - wait);
  const double q = v.bitrates_kbps[action] / 1000.0;
  const double smooth = last_action >= 0 ? std::abs(q - v.bitrates_kbps[last_action] / 1000.0) : 0.0;
  return {rebuffer, wait, buffer_after, delay, w.mu1 * q - w.mu2 * smooth - w.mu3 * rebuffer};
}

}  // namespace

TEST_CASE("buffer transition: the two clamp examples") {
  // rebuffering case
  auto t = buffer_transition(2.0, 5.0, 4.0, 60.0);
  CHECK(t.rebuffer_s == 3.0);
  CHECK(t.wait_s == 0.0);
  CHECK(t.buffer_after_s == 4.0);
  // overflow case
  t = buffer_transition(59.0, 1.0, 4.0, 60.0);
  CHECK(t.rebuffer_s == 0.0);
  CHECK(t.wait_s == 2.0);
  CHECK(t.buffer_after_s == 60.0);
}

TEST_CASE("single-chunk episode with only the bitrate term") {
  VideoSpec v;
  v.n_chunks = 1;
  v.chunk_duration_s = 4.0;
  v.bitrates_kbps = {300, 4300};
  v.buffer_max_s = 60.0;
  v.rtt_s = 0.0;
  v.chunk_sizes_bits = {{300e3 * 4, 4300e3 * 4}};
  Trace fat;
  fat.id = "fat";
  fat.points = {{0.0, 100000.0}, {1.0, 100000.0}};  // delay ~ 1.2e-5 s
  AbrEnv env(v, fixed_schedule({1, 6, 1}), EnvConfig{false, 1, 1}, 1);
  env.reset(fat);
  const auto r = env.step(0);
  CHECK(r.outcome.done);
  CHECK(r.outcome.qoe_smooth == 0.0);  // no previous chunk
  CHECK(r.outcome.rebuffer_s < 1e-4);
  CHECK(r.outcome.reward_qoe == 0.3 - r.outcome.rebuffer_s);
  const StepOutcome outs[] = {r.outcome};
  CHECK(episode_qoe(outs).total == r.outcome.reward_qoe);
}

TEST_CASE("reset observation layout") {
  const VideoSpec v = default_video_spec(77);
  AbrEnv env(v, dln_schedule(6.0, 100), EnvConfig{}, 3);
  const Trace tr = synth_trace(5, SynthProfile::stable, 300);
  const Observation obs = env.reset(tr);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < kObsCols; ++c) CHECK(obs.at(r, c) == 0.0);
  }
  CHECK(obs.at(5, 0) == 1.0);  // 49/49 remaining
  for (int c = 1; c < kObsCols; ++c) CHECK(obs.at(5, c) == 0.0);
  // next-chunk sizes occupy the 6 leading slots, strictly increasing
  for (int j = 1; j < 6; ++j) CHECK(obs.at(4, j) > obs.at(4, j - 1));
  CHECK(obs.at(4, 6) == 0.0);
  CHECK(obs.at(4, 7) == 0.0);
}

TEST_CASE("active_weights over the D/L/N schedule") {
  const ShiftSchedule s = dln_schedule(6.0, 100);
  CHECK(active_weights(s, 0).mu2 == 6.0);    // D
  CHECK(active_weights(s, 0).mu1 == 1.0);
  CHECK(active_weights(s, 100).mu3 == 6.0);  // L right at the boundary
  CHECK(active_weights(s, 200).mu1 == 6.0);  // N
  CHECK(active_weights(s, 300).mu2 == 6.0);  // cyclic wrap to D
  ShiftSchedule hold = dln_schedule(6.0, 100, false);
  CHECK(active_weights(hold, 10000).mu1 == 6.0);  // non-cyclic holds last (N)
}

TEST_CASE("3-chunk scripted episode matches the independent recomputation") {
  const VideoSpec v = tiny_video(3, 6.0);
  const Trace tr = steppy_trace();
  const QoEWeights w{1.0, 1.0, 1.0};
  AbrEnv env(v, fixed_schedule(w), EnvConfig{false, 1, 1}, 9);
  env.reset(tr);

  double buffer = 0.0, wall = 0.0;
  int last_action = -1;
  const int actions[3] = {1, 0, 1};
  for (int i = 0; i < 3; ++i) {
    const OracleStep expect =
        oracle_step(v, tr, wall, buffer, i, actions[i], last_action, w);
    const auto got = env.step(actions[i]);
    CHECK(got.outcome.rebuffer_s == doctest::Approx(expect.rebuffer).epsilon(1e-9));
    CHECK(got.outcome.wait_s == doctest::Approx(expect.wait).epsilon(1e-9));
    CHECK(got.outcome.delay_s == doctest::Approx(expect.delay).epsilon(1e-9));
    CHECK(got.outcome.reward_qoe == doctest::Approx(expect.reward).epsilon(1e-9));
    CHECK(env.state().buffer_s == doctest::Approx(expect.buffer_after).epsilon(1e-9));
    buffer = expect.buffer_after;
    wall += expect.delay + expect.wait;
    last_action = actions[i];
    CHECK(env.state().wall_clock_s == doctest::Approx(wall).epsilon(1e-9));
  }
  CHECK(env.episode_done());
}

TEST_CASE("episode_qoe sums components and flags empty input") {
  StepOutcome a;
  a.reward_qoe = 2.0;
  a.qoe_bitrate = 3.0;
  a.qoe_smooth = 0.5;
  a.qoe_rebuffer = 0.5;
  StepOutcome b = a;
  const StepOutcome two[] = {a, b};
  const EpisodeQoE q = episode_qoe(two);
  CHECK(q.total == 4.0);
  CHECK(q.bitrate == 6.0);
  CHECK(q.smooth == 1.0);
  CHECK_THROWS_AS(episode_qoe({}), EmptyEpisode);
}

TEST_CASE("constant action sequence has zero total smoothness") {
  const VideoSpec v = default_video_spec(77);
  AbrEnv env(v, fixed_schedule({1, 1, 1}), EnvConfig{}, 3);
  env.reset(synth_trace(2, SynthProfile::noisy, 300));
  double smooth = 0.0;
  while (!env.episode_done()) smooth += env.step(3).outcome.qoe_smooth;
  CHECK(smooth == 0.0);
}

TEST_CASE("errors: finished episode and out-of-range action") {
  const VideoSpec v = tiny_video(1, 60.0);
  AbrEnv env(v, fixed_schedule({1, 1, 1}), EnvConfig{}, 3);
  env.reset(steppy_trace());
  CHECK_THROWS_AS(env.step(5), ActionOutOfRange);
  env.step(0);
  CHECK_THROWS_AS(env.step(0), EpisodeFinished);
}

TEST_CASE("determinism: identical seeds and actions give bit-identical outcomes") {
  const VideoSpec v = default_video_spec(77);
  const Trace tr = synth_trace(3, SynthProfile::noisy, 300);
  RngStream actions(5, "script");
  std::vector<int> script;
  for (int i = 0; i < 49; ++i) script.push_back(actions.uniform_int(6));

  auto run = [&]() {
    AbrEnv env(v, dln_schedule(6.0, 10), EnvConfig{}, 42);
    env.reset(tr);
    std::vector<double> out;
    for (int a : script) {
      const auto r = env.step(a);
      out.push_back(r.outcome.reward_qoe);
      out.push_back(r.outcome.delay_s);
      out.push_back(r.outcome.wait_s);
      out.push_back(env.state().buffer_s);
    }
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("invariants over 20k random steps") {
  const VideoSpec v = default_video_spec(91);
  AbrEnv env(v, dln_schedule(6.0, 333), EnvConfig{}, 17);
  RngStream rng(23, "script");
  int traces_used = 0;
  env.reset(synth_trace(100 + traces_used, SynthProfile::noisy, 300));
  for (int step = 0; step < 20000; ++step) {
    if (env.episode_done()) {
      ++traces_used;
      env.reset(synth_trace(100 + traces_used % 7, SynthProfile::stepped, 300));
    }
    const double wall_before = env.state().wall_clock_s;
    const auto r = env.step(rng.uniform_int(6));
    CHECK(env.state().buffer_s >= 0.0);
    CHECK(env.state().buffer_s <= v.buffer_max_s);
    CHECK(r.outcome.rebuffer_s >= 0.0);
    CHECK(r.outcome.wait_s >= 0.0);
    CHECK(r.outcome.delay_s >= 0.0);
    // wall-clock conservation, exact
    CHECK(env.state().wall_clock_s == wall_before + (r.outcome.delay_s + r.outcome.wait_s));
  }
}

TEST_CASE("with eta == 1, a larger chunk never downloads faster") {
  const Trace tr = synth_trace(31, SynthProfile::stepped, 400);
  RngStream rng(7, "probe");
  const VideoSpec v = default_video_spec(77);
  for (int trial = 0; trial < 300; ++trial) {
    AbrEnv env1(v, fixed_schedule({1, 1, 1}), EnvConfig{false, 1, 1}, 1);
    AbrEnv env2(v, fixed_schedule({1, 1, 1}), EnvConfig{false, 1, 1}, 1);
    env1.reset(tr);
    env2.reset(tr);
    const int warm = rng.uniform_int(10);
    for (int i = 0; i < warm; ++i) {
      const int a = rng.uniform_int(6);
      env1.step(a);
      env2.step(a);
    }
    const int a = rng.uniform_int(5);
    const double d1 = env1.step(a).outcome.delay_s;
    const double d2 = env2.step(a + 1).outcome.delay_s;
    CHECK(d2 >= d1);
  }
}
