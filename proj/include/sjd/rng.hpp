#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, label, counter), so traces are reproducible regardless of how many
// model evaluations or threads are involved.

#include <cstdint>
#include <string>
#include <string_view>

namespace sjd {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over the label bytes.
constexpr std::uint64_t label_hash(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Synthetic-model PRF:
//   mix64(mix64(mix64(mix64(seed) ^ context) ^ position) ^ category)
constexpr std::uint64_t prf(std::uint64_t seed, std::uint64_t context,
                            std::uint64_t position, std::uint64_t category) {
  return mix64(mix64(mix64(mix64(seed) ^ context) ^ position) ^ category);
}

// Top 53 bits as a double in [0, 1).
constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Order-independent-of-caller seed derivation used by sweeps and trials.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                    std::uint64_t b) {
  return mix64(mix64(mix64(base) ^ a) ^ (b + 0x632be59bd9b4e019ULL));
}

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label, std::uint64_t counter = 0)
      : seed_(seed), label_(label), key_(mix64(seed ^ label_hash(label))), counter_(counter) {}

  std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }
  double uniform() { return to_unit(next_u64()); }
  // Uniform integer in [0, n) by multiply-shift on 53 bits.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  }

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// The three decoding streams. The model never draws from any of them.
struct DecodeStreams {
  RngStream accept;
  RngStream sample;
  RngStream init;

  explicit DecodeStreams(std::uint64_t seed)
      : accept(seed, "accept"), sample(seed, "sample"), init(seed, "init") {}
};

}  // namespace sjd
