#include "sjd/init.hpp"

namespace sjd {

std::string to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::uniform: return "uniform";
    case InitStrategy::repeat_left: return "repeat_left";
    case InitStrategy::repeat_above: return "repeat_above";
    case InitStrategy::sample_left_dist: return "sample_left_dist";
    case InitStrategy::sample_above_dist: return "sample_above_dist";
  }
  return "?";
}

InitStrategy parse_init_strategy(const std::string& name) {
  for (InitStrategy s : kAllInitStrategies)
    if (to_string(s) == name) return s;
  throw Error("unknown init strategy '" + name + "'");
}

namespace {

class FillContext {
 public:
  FillContext(const SequenceState& state, std::span<const WindowSlot> existing,
              const std::vector<WindowSlot>& fresh, const WindowLaws* last_window)
      : state_(state), existing_(existing), fresh_(fresh), last_window_(last_window) {}

  const WindowSlot* draft(std::size_t index) const {
    const std::size_t n = state_.prefix.size();
    if (index < n) return nullptr;
    std::size_t k = index - n;
    if (k < existing_.size()) return &existing_[k];
    k -= existing_.size();
    return k < fresh_.size() ? &fresh_[k] : nullptr;
  }

  std::optional<Token> token(std::size_t index) const {
    if (index < state_.prefix.size()) return state_.prefix[index];
    if (const WindowSlot* s = draft(index)) return s->token;
    return std::nullopt;
  }

  const ProbVec* law(std::size_t index) const {
    if (!state_.archiving) return nullptr;
    if (index < state_.prefix.size()) return state_.archived(index);
    if (last_window_ != nullptr)
      if (const ProbVec* p = last_window_->at(index)) return p;
    if (const WindowSlot* s = draft(index)) return &s->q;
    return nullptr;
  }

 private:
  const SequenceState& state_;
  std::span<const WindowSlot> existing_;
  const std::vector<WindowSlot>& fresh_;
  const WindowLaws* last_window_;
};

std::optional<std::size_t> neighbor_of(InitStrategy s, std::size_t index, const GridSpec& grid) {
  if (!grid.contains(index)) return std::nullopt;
  const Neighbors nb = grid_neighbors(index, grid);
  switch (s) {
    case InitStrategy::repeat_left:
    case InitStrategy::sample_left_dist: return nb.left;
    case InitStrategy::repeat_above:
    case InitStrategy::sample_above_dist: return nb.above;
    case InitStrategy::uniform: return std::nullopt;
  }
  return std::nullopt;
}

WindowSlot uniform_slot(std::size_t vocab, RngStream& rng) {
  return WindowSlot{static_cast<Token>(rng.below(vocab)), ProbVec::uniform(vocab)};
}

}  // namespace

std::vector<WindowSlot> init_slots(InitStrategy strategy, std::size_t count,
                                   const SequenceState& state,
                                   std::span<const WindowSlot> existing,
                                   const WindowLaws* last_window, RngStream& rng,
                                   std::size_t vocab, InitOptions options) {
  std::vector<WindowSlot> fresh;
  fresh.reserve(count);
  const FillContext ctx(state, existing, fresh, last_window);
  const std::size_t first = state.prefix.size() + existing.size();

  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t index = first + j;
    const std::optional<std::size_t> nb = neighbor_of(strategy, index, state.grid);
    std::optional<WindowSlot> slot;

    if (nb) {
      if (strategy == InitStrategy::repeat_left || strategy == InitStrategy::repeat_above) {
        if (std::optional<Token> t = ctx.token(*nb)) slot = WindowSlot{*t, ProbVec::point_mass(vocab, *t)};
      } else if (const ProbVec* law = ctx.law(*nb)) {
        slot = WindowSlot{sample_with_uniform(*law, rng.uniform()), *law};
      }
    }
    if (!slot) slot = uniform_slot(vocab, rng);
    if (options.corrupt_q) slot->q = ProbVec::uniform(vocab);
    fresh.push_back(std::move(*slot));
  }
  return fresh;
}

}  // namespace sjd
