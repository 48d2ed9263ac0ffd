#pragma once

// Brute-force sequence laws and Monte-Carlo equivalence checks between the
// speculative decoder and the auto-regressive baseline.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sjd/core.hpp"
#include "sjd/decoding.hpp"
#include "sjd/model.hpp"

namespace sjd {

/// Law over all length-L sequences, indexed by the base-V code of the
/// sequence (first token most significant).
struct SequenceLaw {
  std::size_t vocab = 0;
  std::size_t length = 0;
  std::vector<double> probs;

  std::size_t index_of(std::span<const Token> seq) const;
  std::vector<Token> sequence_at(std::size_t index) const;
  double operator()(std::span<const Token> seq) const { return probs[index_of(seq)]; }
};

// Throws Error("oracle size") when V^L exceeds kOracleLimit.
std::size_t checked_domain(std::size_t vocab, std::size_t length);

/// Exact law of L tokens after `prefix` under the sampler chain, by
/// depth-first chain-rule products.
SequenceLaw enumerate_exact(const CausalModel& model, const SamplerConfig& sampler,
                            std::span<const Token> prefix, std::size_t length,
                            std::size_t prompt_length);

using DecodeFn = std::function<std::vector<Token>(std::uint64_t seed)>;

struct EmpiricalLaw {
  SequenceLaw law;
  std::vector<std::uint64_t> counts;
  std::size_t trials = 0;
};

/// Frequencies over seeds seed_base .. seed_base + n_trials - 1. decode_fn
/// must be thread-safe; `threads == 0` uses hardware concurrency.
EmpiricalLaw empirical_law(const DecodeFn& decode_fn, std::size_t n_trials, std::uint64_t seed_base,
                           std::size_t vocab, std::size_t length, std::size_t threads = 0);

double tv_distance(std::span<const double> p, std::span<const double> q);
double tv_distance(const SequenceLaw& p, const SequenceLaw& q);

inline constexpr double kEquivalenceRatio = 1.5;
inline constexpr double kEquivalenceFloor = 0.005;

struct EquivalenceReport {
  std::string config;
  double tv_sjd = 0.0;
  double tv_ar = 0.0;
  double ratio = 0.0;
  std::size_t n_trials = 0;
  bool pass = false;
};

// tv_sjd <= max(1.5 * tv_ar, 0.005)
bool equivalence_gate(double tv_sjd, double tv_ar);

struct EquivalenceSetup {
  const CausalModel* model = nullptr;
  std::vector<Token> prompt;
  GridSpec grid;
  DecodeConfig sjd;       // kind is ignored; window/sampler/init/corrupt used
  std::size_t n_trials = 200'000;
  std::uint64_t seed_base = 1;
  std::size_t threads = 0;
};

std::string describe(const EquivalenceSetup& setup);

/// Compares the SJD and AR empirical laws against enumerate_exact with equal
/// trial counts.
EquivalenceReport run_equivalence(const EquivalenceSetup& setup);

// AR trials use a salted seed so the two empirical laws are independent.
std::uint64_t ar_trial_seed(std::uint64_t seed);

// config,tv_sjd,tv_ar,ratio,n_trials,pass
std::string report_header();
std::string report_row(const EquivalenceReport& r);

}  // namespace sjd
