#include "sjd/decoding.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace sjd {

std::string to_string(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::ar: return "ar";
    case DecoderKind::jacobi_greedy: return "jacobi_greedy";
    case DecoderKind::sjd: return "sjd";
  }
  return "?";
}

DecoderKind parse_decoder_kind(const std::string& name) {
  if (name == "ar") return DecoderKind::ar;
  if (name == "jacobi_greedy") return DecoderKind::jacobi_greedy;
  if (name == "sjd") return DecoderKind::sjd;
  throw Error("unknown decoder kind '" + name + "'");
}

namespace {

void check_config(const DecodeConfig& cfg, const CausalModel& model) {
  if (cfg.window_size == 0) throw Error("window_size must be at least 1");
  validate_sampler(cfg.sampler, model.vocab_size());
}

std::vector<Token> tokens_of(std::span<const WindowSlot> slots) {
  std::vector<Token> out;
  out.reserve(slots.size());
  for (const WindowSlot& s : slots) out.push_back(s.token);
  return out;
}

// Appends up to `target - prefix.size()` tokens; returns how many were kept.
std::size_t commit(SequenceState& state, std::span<const Token> tokens,
                   std::span<const ProbVec> laws, std::size_t target) {
  std::size_t kept = 0;
  for (std::size_t k = 0; k < tokens.size() && state.prefix.size() < target; ++k, ++kept)
    state.append(tokens[k], k < laws.size() ? &laws[k] : nullptr);
  return kept;
}

DecodeResult finish(const SequenceState& state, std::size_t start, DecodeTrace trace) {
  DecodeResult r;
  r.tokens.assign(state.prefix.begin() + static_cast<std::ptrdiff_t>(start), state.prefix.end());
  r.trace = std::move(trace);
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

DecodeResult decode_ar(const CausalModel& model, SequenceState& state, const DecodeConfig& cfg,
                       std::uint64_t seed) {
  validate_sampler(cfg.sampler, model.vocab_size());
  DecodeStreams rng(seed);
  const std::size_t start = state.prefix.size();
  DecodeTrace trace;

  for (std::size_t i = 0; i < cfg.max_new_tokens; ++i) {
    const std::vector<ProbVec> p =
        target_laws(model, state.prefix, {}, cfg.sampler, state.grid.origin);
    const Token t = sample_with_uniform(p.front(), rng.sample.uniform());
    const std::size_t pos = state.prefix.size();
    state.append(t, &p.front());
    ++trace.steps;
    ++trace.tokens_generated;
    trace.iterations.push_back({i, pos, 1, false, {}, {t}});
  }
  check_trace(trace, DecoderKind::ar);
  return finish(state, start, std::move(trace));
}

// ---------------------------------------------------------------------------

DecodeResult decode_jacobi_greedy(const CausalModel& model, SequenceState& state,
                                  const DecodeConfig& cfg, std::uint64_t seed) {
  check_config(cfg, model);
  SamplerConfig greedy = cfg.sampler;
  greedy.top_k = 1;

  DecodeStreams rng(seed);
  const std::size_t V = model.vocab_size();
  const std::size_t start = state.prefix.size();
  const std::size_t target = start + cfg.max_new_tokens;

  std::vector<WindowSlot> slots;
  std::vector<bool> fresh;
  WindowLaws laws;
  DecodeTrace trace;

  while (state.prefix.size() < target) {
    const std::size_t want = std::min(cfg.window_size, target - state.prefix.size());
    if (slots.size() < want) {
      std::vector<WindowSlot> added = init_slots(cfg.init_strategy, want - slots.size(), state,
                                                 slots, laws.laws.empty() ? nullptr : &laws,
                                                 rng.init, V);
      fresh.insert(fresh.end(), added.size(), true);
      slots.insert(slots.end(), std::make_move_iterator(added.begin()),
                   std::make_move_iterator(added.end()));
    }

    const std::size_t window_start = state.prefix.size();
    const std::vector<Token> drafts = tokens_of(slots);
    std::vector<ProbVec> p = target_laws(model, state.prefix, drafts, greedy, state.grid.origin);

    std::vector<Token> argmax(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) argmax[k] = argmax_token(p[k]);

    std::size_t converged = 0;
    while (converged < slots.size() && !fresh[converged] && drafts[converged] == argmax[converged])
      ++converged;

    std::vector<Token> accepted(drafts.begin(), drafts.begin() + static_cast<std::ptrdiff_t>(converged));
    const bool unconverged = converged < slots.size();
    if (unconverged) accepted.push_back(argmax[converged]);

    const std::size_t kept = commit(state, accepted, p, target);

    std::vector<WindowSlot> next;
    for (std::size_t k = accepted.size(); k < slots.size(); ++k)
      next.push_back({argmax[k], p[k]});
    if (!unconverged && p.size() > slots.size() && state.prefix.size() < target)
      next.push_back({argmax[slots.size()], p[slots.size()]});

    laws = WindowLaws{window_start, std::move(p)};
    trace.iterations.push_back({trace.iterations.size(), window_start, kept, unconverged, drafts,
                                tokens_of(next)});
    ++trace.steps;
    trace.tokens_generated += kept;

    slots = std::move(next);
    fresh.assign(slots.size(), false);
  }
  check_trace(trace, DecoderKind::jacobi_greedy);
  return finish(state, start, std::move(trace));
}

// ---------------------------------------------------------------------------

double acceptance_probability(double p_t, double q_t) {
  if (!(q_t > 0.0)) throw Error("draft token outside its own law (corrupt slot)");
  return std::min(1.0, p_t / q_t);
}

std::optional<ProbVec> calibrated_law(const ProbVec& p, const ProbVec& q) {
  std::vector<double> diff(p.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    diff[i] = std::max(0.0, p[i] - q[i]);
    mass += diff[i];
  }
  if (!(mass > 0.0)) return std::nullopt;
  for (double& d : diff) d /= mass;
  return ProbVec(std::move(diff));
}

VerifyOutcome sjd_verify_window(std::span<const WindowSlot> slots, std::span<const ProbVec> p,
                                RngStream& accept_rng, RngStream& sample_rng) {
  if (p.size() != slots.size()) throw Error("verification needs one target law per slot");
  VerifyOutcome out;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const WindowSlot& slot = slots[k];
    const double r = accept_rng.uniform();
    if (r < acceptance_probability(p[k][slot.token], slot.q[slot.token])) {
      out.accepted.push_back(slot.token);
      continue;
    }

    out.rejected_at = k;
    // Rejection has probability zero when p == q; an empty calibrated law
    // can only come from rounding, so draw from p instead.
    const std::optional<ProbVec> calibrated = calibrated_law(p[k], slot.q);
    const Token resampled = sample_with_uniform(calibrated ? *calibrated : p[k], sample_rng.uniform());
    out.next_slots.push_back({resampled, p[k]});
    for (std::size_t j = k + 1; j < slots.size(); ++j)
      out.next_slots.push_back({sample_with_uniform(p[j], sample_rng.uniform()), p[j]});
    break;
  }
  return out;
}

DecodeResult decode_sjd(const CausalModel& model, SequenceState& state, const DecodeConfig& cfg,
                        std::uint64_t seed) {
  check_config(cfg, model);
  DecodeStreams rng(seed);
  const std::size_t V = model.vocab_size();
  const std::size_t start = state.prefix.size();
  const std::size_t target = start + cfg.max_new_tokens;
  const InitOptions init_options{cfg.corrupt_q};

  std::vector<WindowSlot> slots;
  WindowLaws laws;
  DecodeTrace trace;

  while (state.prefix.size() < target) {
    // Top the window up with fresh drafts.
    const std::size_t want = std::min(cfg.window_size, target - state.prefix.size());
    if (slots.size() < want) {
      std::vector<WindowSlot> added = init_slots(cfg.init_strategy, want - slots.size(), state,
                                                 slots, laws.laws.empty() ? nullptr : &laws,
                                                 rng.init, V, init_options);
      slots.insert(slots.end(), std::make_move_iterator(added.begin()),
                   std::make_move_iterator(added.end()));
    }

    // One parallel evaluation of the whole window.
    const std::size_t window_start = state.prefix.size();
    const std::vector<Token> drafts = tokens_of(slots);
    std::vector<ProbVec> p =
        target_laws(model, state.prefix, drafts, cfg.sampler, state.grid.origin);

    // Verify, resample, redraw.
    const std::span<const ProbVec> window_laws(p.data(), slots.size());
    VerifyOutcome v = sjd_verify_window(slots, window_laws, rng.accept, rng.sample);
    const std::size_t kept = commit(state, v.accepted, window_laws, target);

    // A fully accepted window still leaves the trailing law, conditioned on
    // the accepted prefix alone; drafting from it keeps slot 0 of the next
    // window exact.
    if (!v.rejected_at && p.size() > slots.size() && state.prefix.size() < target) {
      const ProbVec& next_law = p[slots.size()];
      v.next_slots.push_back({sample_with_uniform(next_law, rng.sample.uniform()), next_law});
    }

    trace.iterations.push_back({trace.iterations.size(), window_start, kept,
                                v.rejected_at.has_value(), drafts, tokens_of(v.next_slots)});
    ++trace.steps;
    trace.tokens_generated += kept;

    laws = WindowLaws{window_start, std::move(p)};
    slots = std::move(v.next_slots);
  }
  check_trace(trace, DecoderKind::sjd);
  return finish(state, start, std::move(trace));
}

DecodeResult decode(const CausalModel& model, SequenceState& state, const DecodeConfig& cfg,
                    std::uint64_t seed) {
  switch (cfg.kind) {
    case DecoderKind::ar: return decode_ar(model, state, cfg, seed);
    case DecoderKind::jacobi_greedy: return decode_jacobi_greedy(model, state, cfg, seed);
    case DecoderKind::sjd: return decode_sjd(model, state, cfg, seed);
  }
  throw Error("unknown decoder kind");
}

// ---------------------------------------------------------------------------

double step_compression(const DecodeTrace& trace) {
  if (trace.steps == 0) throw Error("step compression needs at least one step");
  return static_cast<double>(trace.tokens_generated) / static_cast<double>(trace.steps);
}

void check_trace(const DecodeTrace& trace, DecoderKind kind) {
  std::size_t total = 0;
  for (const IterationRecord& r : trace.iterations) total += r.accepted_count;
  if (total != trace.tokens_generated) throw std::logic_error("trace: accepted counts do not sum to tokens");
  if (trace.steps != trace.iterations.size()) throw std::logic_error("trace: steps != iterations");
  switch (kind) {
    case DecoderKind::ar:
      if (trace.steps != trace.tokens_generated) throw std::logic_error("trace: AR steps != tokens");
      break;
    case DecoderKind::jacobi_greedy:
      if (trace.steps > trace.tokens_generated) throw std::logic_error("trace: Jacobi steps > tokens");
      break;
    case DecoderKind::sjd:
      if (trace.steps > trace.tokens_generated + 1) throw std::logic_error("trace: SJD steps > tokens + 1");
      break;
  }
}

void write_trace_csv(std::ostream& out, const DecodeTrace& trace) {
  out << "iter,window_start,accepted,resampled,step_total\n";
  std::size_t step = 0;
  for (const IterationRecord& r : trace.iterations) {
    ++step;
    out << r.iteration_index << ',' << r.window_start << ',' << r.accepted_count << ','
        << (r.resampled ? 1 : 0) << ',' << step << '\n';
  }
}

}  // namespace sjd
