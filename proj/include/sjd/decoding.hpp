#pragma once

// Auto-regressive baseline, greedy Jacobi decoding and speculative Jacobi
// decoding (SJD) over a CausalModel.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sjd/core.hpp"
#include "sjd/init.hpp"
#include "sjd/model.hpp"
#include "sjd/rng.hpp"

namespace sjd {

enum class DecoderKind { ar, jacobi_greedy, sjd };

std::string to_string(DecoderKind kind);
DecoderKind parse_decoder_kind(const std::string& name);

inline constexpr std::size_t kDefaultWindow = 16;

struct DecodeConfig {
  DecoderKind kind = DecoderKind::sjd;
  std::size_t window_size = kDefaultWindow;
  std::size_t max_new_tokens = 16;
  SamplerConfig sampler;
  InitStrategy init_strategy = InitStrategy::uniform;
  // Negative control: fresh slots report a uniform q.
  bool corrupt_q = false;
};

struct DecodeResult {
  std::vector<Token> tokens;
  DecodeTrace trace;
};

DecodeResult decode_ar(const CausalModel& model, SequenceState& state, const DecodeConfig& cfg,
                       std::uint64_t seed);

/// Greedy Jacobi iteration. The sampler is forced to top-1. Each iteration
/// accepts the converged window prefix (drafts equal to their recomputed
/// argmax, fresh drafts never count as converged) and then the recomputed
/// argmax at the first unconverged slot, which conditions only on accepted
/// tokens and is therefore final.
DecodeResult decode_jacobi_greedy(const CausalModel& model, SequenceState& state,
                                  const DecodeConfig& cfg, std::uint64_t seed);

DecodeResult decode_sjd(const CausalModel& model, SequenceState& state, const DecodeConfig& cfg,
                        std::uint64_t seed);

// Dispatch on cfg.kind.
DecodeResult decode(const CausalModel& model, SequenceState& state, const DecodeConfig& cfg,
                    std::uint64_t seed);

// min(1, p_t / q_t). Throws Error when q_t == 0 (corrupt slot).
double acceptance_probability(double p_t, double q_t);

// normalize(max(0, p - q)); nullopt when the difference has no mass.
std::optional<ProbVec> calibrated_law(const ProbVec& p, const ProbVec& q);

struct VerifyOutcome {
  std::vector<Token> accepted;
  std::vector<WindowSlot> next_slots;
  std::optional<std::size_t> rejected_at;
};

/// One speculative verification scan. p[k] is the target law at window slot
/// k from this iteration's evaluation. The first rejected slot is resampled
/// from the calibrated law and every later slot is redrawn from p; each new
/// slot carries the target law of its position as q.
VerifyOutcome sjd_verify_window(std::span<const WindowSlot> slots, std::span<const ProbVec> p,
                                RngStream& accept_rng, RngStream& sample_rng);

double step_compression(const DecodeTrace& trace);

// Throws std::logic_error when the trace breaks its accounting invariants
// for the given decoder (including the SJD progress bound).
void check_trace(const DecodeTrace& trace, DecoderKind kind);

// iter,window_start,accepted,resampled,step_total
void write_trace_csv(std::ostream& out, const DecodeTrace& trace);

}  // namespace sjd
