// Network throughput traces: ingestion, validation, synthesis, and sampling.
//
// File format: two whitespace-separated columns `time_s throughput_mbps`,
// one point per line, `#` starts a comment. A directory holds `train/` and
// `test/` subdirectories of `*.log` files. Beyond its end a trace loops
// (wrap-around modulo duration), so episodes never run out of bandwidth
// data. The last point's segment is held for the same span as the segment
// before it, which fixes the trace duration.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace abrlab {

struct TracePoint {
  double time_s = 0.0;
  double throughput_mbps = 0.0;
};

enum class TraceSource { ingested, synthetic };

struct Trace {
  std::string id;
  std::vector<TracePoint> points;  // time strictly increasing, throughput > 0
  TraceSource source = TraceSource::ingested;

  // Last segment is held as long as the previous one.
  double duration_s() const;
};

struct TraceSet {
  std::vector<Trace> train;
  std::vector<Trace> test;
};

enum class TraceErrorKind { MalformedLine, NonMonotonicTime, EmptyTrace, DuplicateId, MissingDir };

class TraceError : public std::runtime_error {
 public:
  TraceError(TraceErrorKind kind, std::string file, long lineno, const std::string& what);
  TraceErrorKind kind() const { return kind_; }
  const std::string& file() const { return file_; }
  long lineno() const { return lineno_; }

 private:
  TraceErrorKind kind_;
  std::string file_;
  long lineno_;
};

// Parses one trace file; throws TraceError on malformed input.
Trace parse_trace_file(const std::filesystem::path& file);

// Serializes with full double round-trip precision.
void write_trace_file(const Trace& trace, const std::filesystem::path& file);

// Loads `dir/train/*.log` and `dir/test/*.log`; enforces disjoint ids.
TraceSet load_trace_dir(const std::filesystem::path& dir);

enum class SynthProfile { stable, stepped, noisy };

// Deterministic synthetic trace, 1 s sampling, bounded to [0.3, 6.0] Mbps.
// Pure function of (seed, profile, duration_s); duration_s >= 300.
Trace synth_trace(std::uint64_t seed, SynthProfile profile, double duration_s);

// A ready-made split of synthetic traces cycling through the profiles.
TraceSet synth_corpus(std::uint64_t seed, int n_train, int n_test, double duration_s);

// Piecewise-constant left-hold lookup, wrap-around beyond the end. Total for t >= 0.
double throughput_at(const Trace& trace, double t);

// Mean of throughput_at over [t0, t0 + dur]; dur == 0 degenerates to throughput_at.
double mean_throughput(const Trace& trace, double t0, double dur);

const char* to_string(SynthProfile p);
SynthProfile synth_profile_from_string(const std::string& s);

}  // namespace abrlab
