#pragma once

// Fresh draft initialization for the Jacobi window. Every produced slot
// carries the exact law its token was drawn from (a point mass for the
// repeat strategies), which is what keeps speculative verification unbiased.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sjd/core.hpp"
#include "sjd/rng.hpp"

namespace sjd {

enum class InitStrategy { uniform, repeat_left, repeat_above, sample_left_dist, sample_above_dist };

std::string to_string(InitStrategy s);
InitStrategy parse_init_strategy(const std::string& name);
inline constexpr InitStrategy kAllInitStrategies[] = {
    InitStrategy::uniform, InitStrategy::repeat_left, InitStrategy::repeat_above,
    InitStrategy::sample_left_dist, InitStrategy::sample_above_dist};

/// Target laws from the most recent window evaluation; laws[k] belongs to
/// sequence index base + k.
struct WindowLaws {
  std::size_t base = 0;
  std::vector<ProbVec> laws;

  const ProbVec* at(std::size_t index) const {
    if (index < base || index - base >= laws.size()) return nullptr;
    return &laws[index - base];
  }
};

struct InitOptions {
  // Negative control only: report a uniform q whatever the token came from.
  bool corrupt_q = false;
};

/// Appends `count` fresh slots after `existing` (which start at
/// state.prefix.size()). Neighbor tokens come from the accepted prefix or
/// any earlier draft. Neighbor laws are looked up in the archive, then the
/// last window evaluation, then the law attached to the neighbor's draft.
/// Anything unavailable falls back to a uniform slot.
std::vector<WindowSlot> init_slots(InitStrategy strategy, std::size_t count,
                                   const SequenceState& state,
                                   std::span<const WindowSlot> existing,
                                   const WindowLaws* last_window, RngStream& rng,
                                   std::size_t vocab, InitOptions options = {});

}  // namespace sjd
