#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "abrlab/rng.hpp"
#include "abrlab/trace.hpp"

using namespace abrlab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("abrlab_trace_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

Trace two_point_trace() {
  Trace t;
  t.id = "two";
  t.points = {{0.0, 1.5}, {10.0, 3.0}};
  return t;
}

}  // namespace

TEST_CASE("minimal well-formed directory loads one train trace with 2 points") {
  const auto dir = temp_dir("minimal");
  fs::create_directories(dir / "train");
  fs::create_directories(dir / "test");
  write_file(dir / "train" / "a.log", "0.0 1.5\n1.0 1.5\n");
  write_file(dir / "test" / "b.log", "0.0 2.0\n1.0 2.5\n");
  const TraceSet set = load_trace_dir(dir);
  CHECK(set.train.size() == 1);
  CHECK(set.train[0].points.size() == 2);
  CHECK(set.train[0].id == "a");
  CHECK(set.train[0].points[1].throughput_mbps == 1.5);
}

TEST_CASE("non-monotonic time is rejected with file and line") {
  const auto dir = temp_dir("nonmono");
  write_file(dir / "t.log", "1.0 1.5\n0.5 2.0\n");
  try {
    parse_trace_file(dir / "t.log");
    FAIL("expected NonMonotonicTime");
  } catch (const TraceError& e) {
    CHECK(e.kind() == TraceErrorKind::NonMonotonicTime);
    CHECK(e.lineno() == 2);
  }
}

TEST_CASE("malformed, empty, and single-point files are rejected") {
  const auto dir = temp_dir("malformed");
  write_file(dir / "bad.log", "0.0 1.0 7\n");
  CHECK_THROWS_AS(parse_trace_file(dir / "bad.log"), TraceError);
  write_file(dir / "neg.log", "0.0 -1.0\n");
  CHECK_THROWS_AS(parse_trace_file(dir / "neg.log"), TraceError);
  write_file(dir / "empty.log", "# only a comment\n");
  try {
    parse_trace_file(dir / "empty.log");
    FAIL("expected EmptyTrace");
  } catch (const TraceError& e) {
    CHECK(e.kind() == TraceErrorKind::EmptyTrace);
  }
  write_file(dir / "single.log", "0.0 1.0\n");
  CHECK_THROWS_AS(parse_trace_file(dir / "single.log"), TraceError);
}

TEST_CASE("comments and blank lines are skipped") {
  const auto dir = temp_dir("comments");
  write_file(dir / "c.log", "# header\n\n0.0 1.0  # inline\n2.0 2.0\n");
  const Trace t = parse_trace_file(dir / "c.log");
  CHECK(t.points.size() == 2);
  CHECK(t.points[1].time_s == 2.0);
}

TEST_CASE("127 train / 142 test files load with matching counts") {
  const auto dir = temp_dir("counts");
  fs::create_directories(dir / "train");
  fs::create_directories(dir / "test");
  for (int i = 0; i < 127; ++i) {
    write_file(dir / "train" / ("tr" + std::to_string(i) + ".log"), "0 1.0\n1 2.0\n");
  }
  for (int i = 0; i < 142; ++i) {
    write_file(dir / "test" / ("te" + std::to_string(i) + ".log"), "0 1.0\n1 2.0\n");
  }
  const TraceSet set = load_trace_dir(dir);
  CHECK(set.train.size() == 127);
  CHECK(set.test.size() == 142);
}

TEST_CASE("train and test ids must be disjoint") {
  const auto dir = temp_dir("overlap");
  fs::create_directories(dir / "train");
  fs::create_directories(dir / "test");
  write_file(dir / "train" / "same.log", "0 1.0\n1 2.0\n");
  write_file(dir / "test" / "same.log", "0 1.0\n1 2.0\n");
  CHECK_THROWS_AS(load_trace_dir(dir), TraceError);
}

TEST_CASE("parse then re-serialize reproduces values bit-exactly") {
  const auto dir = temp_dir("roundtrip");
  write_file(dir / "x.log", "0 0.30000000000000004\n1.5 5.999999999999999\n3.25 1.0\n");
  const Trace t1 = parse_trace_file(dir / "x.log");
  write_trace_file(t1, dir / "y.log");
  const Trace t2 = parse_trace_file(dir / "y.log");
  REQUIRE(t1.points.size() == t2.points.size());
  for (std::size_t i = 0; i < t1.points.size(); ++i) {
    CHECK(t1.points[i].time_s == t2.points[i].time_s);
    CHECK(t1.points[i].throughput_mbps == t2.points[i].throughput_mbps);
  }
}

TEST_CASE("throughput_at: left hold, boundary, wrap-around") {
  const Trace t = two_point_trace();
  CHECK(throughput_at(t, 5.0) == 1.5);    // left hold
  CHECK(throughput_at(t, 10.0) == 3.0);   // boundary takes the new segment
  CHECK(t.duration_s() == 20.0);          // last segment held as long as previous
  CHECK(throughput_at(t, 25.0) == 1.5);   // wrap: 25 mod 20 = 5
  CHECK(throughput_at(t, 15.0) == 3.0);
}

TEST_CASE("throughput_at is total for t >= 0") {
  const Trace t = two_point_trace();
  RngStream rng(4, "probe");
  for (int i = 0; i < 2000; ++i) {
    const double v = throughput_at(t, rng.uniform(0.0, 1e6));
    CHECK(std::isfinite(v));
    CHECK(v > 0.0);
  }
}

TEST_CASE("mean_throughput integrates the piecewise-constant rate with wrap") {
  Trace t;
  t.id = "m";
  t.points = {{0.0, 1.0}, {10.0, 2.0}};  // duration 20
  CHECK(mean_throughput(t, 5.0, 10.0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(mean_throughput(t, 15.0, 10.0) == doctest::Approx(1.5).epsilon(1e-12));  // wraps
  CHECK(mean_throughput(t, 0.0, 40.0) == doctest::Approx(1.5).epsilon(1e-12));   // 2 periods
  CHECK(mean_throughput(t, 3.0, 0.0) == 1.0);  // degenerates to lookup
}

TEST_CASE("synthetic traces are pure functions of their arguments") {
  const Trace a = synth_trace(1, SynthProfile::stable, 300);
  const Trace b = synth_trace(1, SynthProfile::stable, 300);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].throughput_mbps == b.points[i].throughput_mbps);
  }
  const Trace c = synth_trace(1, SynthProfile::stepped, 300);
  const Trace d = synth_trace(2, SynthProfile::stepped, 300);
  bool differ = false;
  for (std::size_t i = 0; i < std::min(c.points.size(), d.points.size()); ++i) {
    differ = differ || c.points[i].throughput_mbps != d.points[i].throughput_mbps;
  }
  CHECK(differ);
}

TEST_CASE("synthetic throughput stays within [0.3, 6.0] Mbps") {
  for (const SynthProfile p :
       {SynthProfile::stable, SynthProfile::stepped, SynthProfile::noisy}) {
    const Trace t = synth_trace(7, p, 600);
    double mean = 0.0;
    for (const TracePoint& pt : t.points) {
      CHECK(pt.throughput_mbps >= 0.3);
      CHECK(pt.throughput_mbps <= 6.0);
      mean += pt.throughput_mbps;
    }
    mean /= static_cast<double>(t.points.size());
    CHECK(mean >= 0.3);
    CHECK(mean <= 6.0);
  }
  CHECK_THROWS_AS(synth_trace(1, SynthProfile::stable, 100), std::invalid_argument);
}

TEST_CASE("synth corpus splits have unique ids") {
  const TraceSet set = synth_corpus(1234, 4, 3, 300);
  CHECK(set.train.size() == 4);
  CHECK(set.test.size() == 3);
  for (const Trace& a : set.train) {
    for (const Trace& b : set.test) CHECK(a.id != b.id);
  }
}
