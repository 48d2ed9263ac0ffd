#include "sjd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "sjd/rng.hpp"

namespace sjd {

std::size_t SequenceLaw::index_of(std::span<const Token> seq) const {
  if (seq.size() != length) throw Error("sequence length does not match law");
  std::size_t code = 0;
  for (Token t : seq) {
    if (t >= vocab) throw Error("token out of vocabulary");
    code = code * vocab + t;
  }
  return code;
}

std::vector<Token> SequenceLaw::sequence_at(std::size_t index) const {
  std::vector<Token> seq(length);
  for (std::size_t k = length; k-- > 0;) {
    seq[k] = static_cast<Token>(index % vocab);
    index /= vocab;
  }
  return seq;
}

std::size_t checked_domain(std::size_t vocab, std::size_t length) {
  std::size_t size = 1;
  for (std::size_t k = 0; k < length; ++k) {
    size *= vocab;
    if (size > kOracleLimit) throw Error("oracle size");
  }
  return size;
}

namespace {

void enumerate_from(const CausalModel& model, const SamplerConfig& sampler,
                    std::vector<Token>& context, std::size_t prompt_length, std::size_t depth,
                    std::size_t code, double mass, SequenceLaw& law) {
  if (depth == law.length) {
    law.probs[code] = mass;
    return;
  }
  const ProbVec p = target_laws(model, context, {}, sampler, prompt_length).front();
  for (std::size_t t = 0; t < law.vocab; ++t) {
    context.push_back(static_cast<Token>(t));
    enumerate_from(model, sampler, context, prompt_length, depth + 1, code * law.vocab + t,
                   mass * p[t], law);
    context.pop_back();
  }
}

}  // namespace

SequenceLaw enumerate_exact(const CausalModel& model, const SamplerConfig& sampler,
                            std::span<const Token> prefix, std::size_t length,
                            std::size_t prompt_length) {
  SequenceLaw law;
  law.vocab = model.vocab_size();
  law.length = length;
  law.probs.assign(checked_domain(law.vocab, length), 0.0);
  std::vector<Token> context(prefix.begin(), prefix.end());
  enumerate_from(model, sampler, context, prompt_length, 0, 0, 1.0, law);
  return law;
}

EmpiricalLaw empirical_law(const DecodeFn& decode_fn, std::size_t n_trials, std::uint64_t seed_base,
                           std::size_t vocab, std::size_t length, std::size_t threads) {
  EmpiricalLaw out;
  out.law.vocab = vocab;
  out.law.length = length;
  const std::size_t domain = checked_domain(vocab, length);
  out.counts.assign(domain, 0);
  out.trials = n_trials;

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(n_trials, 1));

  auto run_range = [&](std::size_t begin, std::size_t end, std::vector<std::uint64_t>& counts) {
    for (std::size_t i = begin; i < end; ++i) counts[out.law.index_of(decode_fn(seed_base + i))]++;
  };

  if (threads <= 1) {
    run_range(0, n_trials, out.counts);
  } else {
    std::vector<std::vector<std::uint64_t>> partial(threads, std::vector<std::uint64_t>(domain, 0));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      const std::size_t begin = n_trials * w / threads;
      const std::size_t end = n_trials * (w + 1) / threads;
      pool.emplace_back(run_range, begin, end, std::ref(partial[w]));
    }
    for (std::thread& t : pool) t.join();
    for (const auto& part : partial)
      for (std::size_t i = 0; i < domain; ++i) out.counts[i] += part[i];
  }

  out.law.probs.resize(domain);
  for (std::size_t i = 0; i < domain; ++i)
    out.law.probs[i] = static_cast<double>(out.counts[i]) / static_cast<double>(n_trials);
  return out;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error("laws over different domains");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

double tv_distance(const SequenceLaw& p, const SequenceLaw& q) {
  if (p.vocab != q.vocab || p.length != q.length) throw Error("laws over different domains");
  return tv_distance(p.probs, q.probs);
}

bool equivalence_gate(double tv_sjd, double tv_ar) {
  return tv_sjd <= std::max(kEquivalenceRatio * tv_ar, kEquivalenceFloor);
}

std::uint64_t ar_trial_seed(std::uint64_t seed) { return mix64(seed ^ 0xa5a5a5a5a5a5a5a5ULL); }

std::string describe(const EquivalenceSetup& s) {
  std::string k = s.sjd.sampler.top_k ? std::to_string(*s.sjd.sampler.top_k) : "off";
  return "V" + std::to_string(s.model->vocab_size()) + "-L" + std::to_string(s.sjd.max_new_tokens) +
         "-K" + k + "-W" + std::to_string(s.sjd.window_size) + "-" + to_string(s.sjd.init_strategy) +
         (s.sjd.corrupt_q ? "-corrupt" : "") + "-seed" + std::to_string(s.seed_base);
}

EquivalenceReport run_equivalence(const EquivalenceSetup& s) {
  if (s.model == nullptr) throw Error("equivalence setup has no model");
  const CausalModel& model = *s.model;
  const std::size_t length = s.sjd.max_new_tokens;
  const SequenceLaw exact = enumerate_exact(model, s.sjd.sampler, s.prompt, length, s.grid.origin);

  DecodeConfig sjd_cfg = s.sjd;
  sjd_cfg.kind = DecoderKind::sjd;
  DecodeConfig ar_cfg = s.sjd;
  ar_cfg.kind = DecoderKind::ar;
  ar_cfg.corrupt_q = false;

  const DecodeFn run_sjd = [&](std::uint64_t seed) {
    SequenceState state(s.prompt, s.grid);
    return decode_sjd(model, state, sjd_cfg, seed).tokens;
  };
  const DecodeFn run_ar = [&](std::uint64_t seed) {
    SequenceState state(s.prompt, s.grid);
    return decode_ar(model, state, ar_cfg, ar_trial_seed(seed)).tokens;
  };

  const EmpiricalLaw sjd_law = empirical_law(run_sjd, s.n_trials, s.seed_base, model.vocab_size(), length, s.threads);
  const EmpiricalLaw ar_law = empirical_law(run_ar, s.n_trials, s.seed_base, model.vocab_size(), length, s.threads);

  EquivalenceReport r;
  r.config = describe(s);
  r.tv_sjd = tv_distance(sjd_law.law, exact);
  r.tv_ar = tv_distance(ar_law.law, exact);
  if (r.tv_ar > 0.0)
    r.ratio = r.tv_sjd / r.tv_ar;
  else
    r.ratio = r.tv_sjd == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  r.n_trials = s.n_trials;
  r.pass = equivalence_gate(r.tv_sjd, r.tv_ar);
  return r;
}

std::string report_header() { return "config,tv_sjd,tv_ar,ratio,n_trials,pass"; }

std::string report_row(const EquivalenceReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.4f,%zu,%s", r.config.c_str(), r.tv_sjd, r.tv_ar,
                r.ratio, r.n_trials, r.pass ? "true" : "false");
  return buf;
}

}  // namespace sjd
