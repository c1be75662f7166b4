#include "abrlab/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "abrlab/rng.hpp"

namespace abrlab {

namespace {

const char* kind_name(TraceErrorKind k) {
  switch (k) {
    case TraceErrorKind::MalformedLine: return "MalformedLine";
    case TraceErrorKind::NonMonotonicTime: return "NonMonotonicTime";
    case TraceErrorKind::EmptyTrace: return "EmptyTrace";
    case TraceErrorKind::DuplicateId: return "DuplicateId";
    case TraceErrorKind::MissingDir: return "MissingDir";
  }
  return "TraceError";
}

std::string format_what(TraceErrorKind kind, const std::string& file, long lineno,
                        const std::string& detail) {
  std::ostringstream os;
  os << kind_name(kind) << ": " << file;
  if (lineno >= 0) os << ":" << lineno;
  if (!detail.empty()) os << " (" << detail << ")";
  return os.str();
}

}  // namespace

TraceError::TraceError(TraceErrorKind kind, std::string file, long lineno,
                       const std::string& what)
    : std::runtime_error(format_what(kind, file, lineno, what)),
      kind_(kind),
      file_(std::move(file)),
      lineno_(lineno) {}

double Trace::duration_s() const {
  const std::size_t n = points.size();
  if (n < 2) return n == 1 ? points[0].time_s : 0.0;
  const double last = points[n - 1].time_s;
  return last + (last - points[n - 2].time_s);
}

Trace parse_trace_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw TraceError(TraceErrorKind::MalformedLine, file.string(), -1, "cannot open");
  }
  Trace trace;
  trace.id = file.stem().string();
  trace.source = TraceSource::ingested;

  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double t = 0.0, v = 0.0;
    if (!(ls >> t)) continue;  // blank or comment-only line
    std::string extra;
    if (!(ls >> v) || (ls >> extra)) {
      throw TraceError(TraceErrorKind::MalformedLine, file.string(), lineno, line);
    }
    if (!std::isfinite(t) || !std::isfinite(v) || t < 0.0 || v <= 0.0) {
      throw TraceError(TraceErrorKind::MalformedLine, file.string(), lineno,
                       "time must be >= 0 and throughput > 0");
    }
    if (!trace.points.empty() && t <= trace.points.back().time_s) {
      throw TraceError(TraceErrorKind::NonMonotonicTime, file.string(), lineno, line);
    }
    trace.points.push_back({t, v});
  }
  if (trace.points.size() < 2) {
    throw TraceError(TraceErrorKind::EmptyTrace, file.string(), -1,
                     "need at least 2 points");
  }
  return trace;
}

void write_trace_file(const Trace& trace, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write trace file: " + file.string());
  char buf[80];
  for (const TracePoint& p : trace.points) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", p.time_s, p.throughput_mbps);
    out << buf;
  }
}

namespace {

std::vector<Trace> load_split(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw TraceError(TraceErrorKind::MissingDir, dir.string(), -1, "expected directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".log") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Trace> traces;
  traces.reserve(files.size());
  for (const auto& f : files) traces.push_back(parse_trace_file(f));
  return traces;
}

}  // namespace

TraceSet load_trace_dir(const std::filesystem::path& dir) {
  TraceSet set;
  set.train = load_split(dir / "train");
  set.test = load_split(dir / "test");
  for (const Trace& a : set.train) {
    for (const Trace& b : set.test) {
      if (a.id == b.id) {
        throw TraceError(TraceErrorKind::DuplicateId, a.id, -1,
                         "trace id present in both train and test");
      }
    }
  }
  return set;
}

namespace {

constexpr double kSynthMin = 0.3;
constexpr double kSynthMax = 6.0;

double clamp_mbps(double v) { return std::min(kSynthMax, std::max(kSynthMin, v)); }

}  // namespace

Trace synth_trace(std::uint64_t seed, SynthProfile profile, double duration_s) {
  if (duration_s < 300.0) {
    throw std::invalid_argument("synth_trace: duration_s must be >= 300");
  }
  RngStream rng(seed, "synth", static_cast<std::uint64_t>(profile));
  const long n = static_cast<long>(std::floor(duration_s)) + 1;

  Trace trace;
  trace.source = TraceSource::synthetic;
  {
    std::ostringstream id;
    id << "synth_" << to_string(profile) << "_" << seed;
    trace.id = id.str();
  }
  trace.points.reserve(static_cast<std::size_t>(n));

  switch (profile) {
    case SynthProfile::stable: {
      const double base = rng.uniform(0.8, 3.5);
      for (long i = 0; i < n; ++i) {
        const double jitter = 1.0 + 0.05 * rng.uniform(-1.0, 1.0);
        trace.points.push_back({static_cast<double>(i), clamp_mbps(base * jitter)});
      }
      break;
    }
    case SynthProfile::stepped: {
      long next_switch = 0;
      double level = 0.0;
      for (long i = 0; i < n; ++i) {
        if (i >= next_switch) {
          level = rng.uniform(0.4, 5.0);
          next_switch = i + 15 + rng.uniform_int(31);  // 15..45 s per level
        }
        trace.points.push_back({static_cast<double>(i), clamp_mbps(level)});
      }
      break;
    }
    case SynthProfile::noisy: {
      const double mean = rng.uniform(0.8, 3.2);
      double x = mean;
      for (long i = 0; i < n; ++i) {
        trace.points.push_back({static_cast<double>(i), clamp_mbps(x)});
        x += 0.05 * (mean - x) + 0.25 * rng.normal();
        x = clamp_mbps(x);
      }
      break;
    }
  }
  return trace;
}

TraceSet synth_corpus(std::uint64_t seed, int n_train, int n_test, double duration_s) {
  constexpr SynthProfile kCycle[3] = {SynthProfile::stable, SynthProfile::stepped,
                                      SynthProfile::noisy};
  TraceSet set;
  for (int i = 0; i < n_train; ++i) {
    set.train.push_back(synth_trace(seed + static_cast<std::uint64_t>(i),
                                    kCycle[i % 3], duration_s));
    set.train.back().id += "_train" + std::to_string(i);
  }
  for (int i = 0; i < n_test; ++i) {
    set.test.push_back(synth_trace(seed + 1000 + static_cast<std::uint64_t>(i),
                                   kCycle[i % 3], duration_s));
    set.test.back().id += "_test" + std::to_string(i);
  }
  return set;
}

double throughput_at(const Trace& trace, double t) {
  if (t < 0.0) throw std::invalid_argument("throughput_at: t must be >= 0");
  const auto& pts = trace.points;
  if (pts.size() < 2) {
    if (pts.empty()) throw std::invalid_argument("throughput_at: empty trace");
    return pts[0].throughput_mbps;
  }
  const double dur = trace.duration_s();
  double tm = std::fmod(t, dur);
  if (tm < 0.0) tm = 0.0;
  if (tm < pts.front().time_s) return pts.front().throughput_mbps;
  // Last point with time <= tm.
  auto it = std::upper_bound(pts.begin(), pts.end(), tm,
                             [](double v, const TracePoint& p) { return v < p.time_s; });
  return std::prev(it)->throughput_mbps;
}

namespace {

// Integral of the piecewise-constant rate over [a, b] within one period [0, D).
double integral_within_period(const Trace& trace, double a, double b) {
  const auto& pts = trace.points;
  const double dur = trace.duration_s();
  double total = 0.0;
  double cur = a;
  while (cur < b - 1e-15) {
    const double v = throughput_at(trace, cur);
    // Find the end of the current segment.
    double seg_end = dur;
    auto it = std::upper_bound(pts.begin(), pts.end(), cur,
                               [](double x, const TracePoint& p) { return x < p.time_s; });
    if (it != pts.end()) seg_end = it->time_s;
    const double stop = std::min(seg_end, b);
    total += v * (stop - cur);
    cur = stop;
  }
  return total;
}

}  // namespace

double mean_throughput(const Trace& trace, double t0, double dur) {
  if (dur <= 0.0) return throughput_at(trace, t0);
  const double period = trace.duration_s();
  const double a = std::fmod(t0, period);
  double total = 0.0;
  const double whole = std::floor(dur / period);
  if (whole > 0.0) total += whole * integral_within_period(trace, 0.0, period);
  double rem = dur - whole * period;
  const double first = std::min(rem, period - a);
  total += integral_within_period(trace, a, a + first);
  rem -= first;
  if (rem > 0.0) total += integral_within_period(trace, 0.0, rem);
  return total / dur;
}

const char* to_string(SynthProfile p) {
  switch (p) {
    case SynthProfile::stable: return "stable";
    case SynthProfile::stepped: return "stepped";
    case SynthProfile::noisy: return "noisy";
  }
  return "?";
}

SynthProfile synth_profile_from_string(const std::string& s) {
  if (s == "stable") return SynthProfile::stable;
  if (s == "stepped") return SynthProfile::stepped;
  if (s == "noisy") return SynthProfile::noisy;
  throw std::invalid_argument("unknown synth profile: " + s);
}

}  // namespace abrlab
