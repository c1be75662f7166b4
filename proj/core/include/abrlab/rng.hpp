// Counter-based splittable random number generator.
//
// Every consumer of randomness in the lab owns a named stream derived from
// (run seed, stream name, optional index). A stream's output is a pure
// function of (key, counter), so draws are reproducible regardless of the
// order in which other streams are consumed. Conventional stream names:
//   router_noise, plasticity_noise, net_noise, chunk_size, trace_select,
//   action_sample, minibatch, init.

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace abrlab {

// SplitMix64 finalizer; full-avalanche 64-bit mixing.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0)
      : key_(mix64(mix64(seed) ^ fnv1a64(name)) ^ mix64(index * 0xD1342543DE82EF95ull)) {}

  // Child stream; deterministic function of this stream's key (not its counter).
  RngStream child(std::string_view name, std::uint64_t index = 0) const {
    RngStream s(0, name, index);
    s.key_ = mix64(key_ ^ s.key_);
    return s;
  }

  std::uint64_t next_u64() { return mix64(key_ + counter_++ * 0x9E3779B97F4A7C15ull); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform in [0, n); unbiased up to O(n / 2^64).
  int uniform_int(int n) {
    return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                             static_cast<unsigned __int128>(n)) >> 64);
  }

  // Standard normal via Box-Muller; consumes exactly two counter positions.
  double normal() {
    const double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;  // (0,1)
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1p-53;          // [0,1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) { counter_ = c; }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace abrlab
