#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sjd/decoding.hpp"

using namespace sjd;

namespace {

ProbVec random_law(RngStream& rng, std::size_t v, bool sparse) {
  std::vector<double> w(v);
  for (double& x : w) x = rng.uniform();
  if (sparse) w[rng.below(v)] = 0.0;
  return normalize(w);
}

// Token-by-token argmax walk of the filtered target law.
std::vector<Token> greedy_walk(const CausalModel& m, std::vector<Token> prefix, std::size_t n,
                               const SamplerConfig& s) {
  const std::size_t prompt = prefix.size();
  for (std::size_t i = 0; i < n; ++i)
    prefix.push_back(argmax_token(target_laws(m, prefix, {}, s, prompt).front()));
  return {prefix.begin() + prompt, prefix.end()};
}

DecodeResult run(const CausalModel& m, DecoderKind kind, std::size_t n, std::size_t w,
                 std::uint64_t seed, const SamplerConfig& s = {},
                 InitStrategy init = InitStrategy::uniform) {
  SequenceState state({}, GridSpec{n, 1, 0});
  DecodeConfig cfg;
  cfg.kind = kind;
  cfg.window_size = w;
  cfg.max_new_tokens = n;
  cfg.sampler = s;
  cfg.init_strategy = init;
  return decode(m, state, cfg, seed);
}

}  // namespace

TEST_CASE("AR with one token matches the softmax law") {
  const HashModel m(VocabSpec(4), 1, 7, 2.0);
  const ProbVec p = m.evaluate_window({}, {}).front();
  std::vector<int> counts(4);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[run(m, DecoderKind::ar, 1, 1, i).tokens[0]];
  double tv = 0;
  for (int t = 0; t < 4; ++t) tv += std::abs(counts[t] / double(n) - p[t]);
  CHECK(tv / 2 <= 0.01);
}

TEST_CASE("top-1 sampling makes every decoder a greedy walk") {
  SamplerConfig s;
  s.top_k = 1;
  const HashModel hash(VocabSpec(6), 2, 3, 3.0);
  const LocalityModel loc(GridSpec{5, 5, 0}, 0.9, HashModel(VocabSpec(6), 2, 4, 3.0));
  const TabularModel tab = build_tabular(VocabSpec(3), 6, 5);
  const std::vector<std::pair<const CausalModel*, std::size_t>> cases{
      {&hash, 20}, {&loc, 25}, {&tab, 6}};
  for (auto [m, n] : cases) {
    const std::vector<Token> ref = greedy_walk(*m, {}, n, s);
    for (DecoderKind k : {DecoderKind::ar, DecoderKind::jacobi_greedy, DecoderKind::sjd}) {
      for (std::size_t w : {1, 3, 16}) {
        SequenceState state({}, GridSpec{n == 25 ? 5u : n, n == 25 ? 5u : 1u, 0});
        DecodeConfig cfg;
        cfg.kind = k;
        cfg.window_size = w;
        cfg.max_new_tokens = n;
        cfg.sampler = s;
        CHECK(decode(*m, state, cfg, 11).tokens == ref);
      }
    }
  }
}

TEST_CASE("greedy Jacobi progress") {
  const HashModel m(VocabSpec(8), 2, 9, 3.0);
  const DecodeResult one = run(m, DecoderKind::jacobi_greedy, 30, 1, 1);
  CHECK(one.trace.steps == 30);
  for (std::size_t w : {2, 4, 8, 16}) {
    const DecodeResult r = run(m, DecoderKind::jacobi_greedy, 30, w, 1);
    CHECK(r.trace.steps <= r.trace.tokens_generated);
    CHECK(r.trace.tokens_generated == 30);
  }
}

TEST_CASE("verification window examples") {
  RngStream acc(1, "accept"), smp(1, "sample");
  const ProbVec a({0.2, 0.5, 0.3});

  // q == p accepts with probability one.
  const std::vector<WindowSlot> same{{1, a}, {2, a}, {0, a}};
  const std::vector<ProbVec> ps{a, a, a};
  for (int i = 0; i < 200; ++i) {
    const VerifyOutcome v = sjd_verify_window(same, ps, acc, smp);
    CHECK(v.accepted.size() == 3);
    CHECK_FALSE(v.rejected_at);
  }

  // A draft the target cannot produce is always rejected and replaced
  // from the calibrated law.
  const std::vector<WindowSlot> bad{{0, ProbVec({1, 0, 0})}, {1, a}};
  const std::vector<ProbVec> pb{ProbVec({0, 0.5, 0.5}), a};
  for (int i = 0; i < 200; ++i) {
    const VerifyOutcome v = sjd_verify_window(bad, pb, acc, smp);
    CHECK(v.accepted.empty());
    CHECK(v.rejected_at == 0u);
    REQUIRE(v.next_slots.size() == 2);
    CHECK(v.next_slots[0].token != 0);
    CHECK(v.next_slots[0].q == pb[0]);
    CHECK(v.next_slots[1].q == a);
  }

  // p = [.5,.5,0], q uniform: token 2 is always rejected.
  const std::vector<WindowSlot> z{{2, ProbVec::uniform(3)}};
  const std::vector<ProbVec> pz{ProbVec({0.5, 0.5, 0.0})};
  for (int i = 0; i < 50; ++i) {
    const VerifyOutcome v = sjd_verify_window(z, pz, acc, smp);
    CHECK(v.rejected_at == 0u);
    CHECK(v.next_slots[0].token < 2);
  }

  CHECK(acceptance_probability(0.3, 0.6) == doctest::Approx(0.5));
  CHECK(acceptance_probability(0.9, 0.6) == 1.0);
  CHECK_THROWS_AS(acceptance_probability(0.5, 0.0), Error);
  CHECK_FALSE(calibrated_law(a, a));
}

TEST_CASE("two-branch law of one slot") {
  // q = [.6,.4], p = [.3,.7]: token 0 survives with .6 * .5 = .3, and the
  // rejection mass .3 goes entirely to token 1 (calibrated law [0,1]).
  const ProbVec q({0.6, 0.4}), p({0.3, 0.7});
  const auto c = calibrated_law(p, q);
  REQUIRE(c);
  CHECK((*c)[0] == 0.0);
  CHECK((*c)[1] == doctest::Approx(1.0));
  const double reject = q[0] * (1 - acceptance_probability(p[0], q[0])) +
                        q[1] * (1 - acceptance_probability(p[1], q[1]));
  CHECK(reject == doctest::Approx(0.3));
  CHECK(q[0] * acceptance_probability(p[0], q[0]) + reject * (*c)[0] == doctest::Approx(0.3));
  CHECK(q[1] * acceptance_probability(p[1], q[1]) + reject * (*c)[1] == doctest::Approx(0.7));
}

TEST_CASE("accept-or-resample reproduces p exactly") {
  RngStream rng(21, "laws");
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t v = 2 + rng.below(10);
    const ProbVec p = random_law(rng, v, trial % 3 == 0);
    const ProbVec q = random_law(rng, v, trial % 5 == 0);
    double min_mass = 0, excess = 0, reject = 0;
    for (std::size_t i = 0; i < v; ++i) {
      min_mass += std::min(p[i], q[i]);
      excess += std::max(0.0, p[i] - q[i]);
      if (q[i] > 0) reject += q[i] * (1 - acceptance_probability(p[i], q[i]));
    }
    CHECK(std::abs(excess - (1 - min_mass)) <= 1e-12);
    CHECK(std::abs(reject - (1 - min_mass)) <= 1e-12);
    const auto c = calibrated_law(p, q);
    for (std::size_t x = 0; x < v; ++x) {
      const double keep = q[x] > 0 ? q[x] * acceptance_probability(p[x], q[x]) : 0.0;
      const double law = keep + (c ? reject * (*c)[x] : 0.0);
      CHECK(std::abs(law - p[x]) <= 1e-12);
    }
  }
}

TEST_CASE("carrying the calibrated law biases the next verification") {
  // p = [.5,.5], q = [1,0]. After a rejection the replacement is token 1.
  // Re-verifying it against its calibrated law [0,1] rejects half the time
  // and drifts toward [.75,.25]; carrying p keeps [.5,.5].
  const ProbVec p({0.5, 0.5});
  const std::vector<ProbVec> ps{p};
  RngStream acc(5, "accept"), smp(5, "sample");
  const int n = 100000;
  int zeros_p = 0, zeros_c = 0;
  for (int i = 0; i < n; ++i) {
    const std::vector<WindowSlot> first{{0, ProbVec({1, 0})}};
    const VerifyOutcome v = sjd_verify_window(first, ps, acc, smp);
    if (v.accepted.size() == 1) {
      ++zeros_p;
      ++zeros_c;
      continue;
    }
    const WindowSlot carried = v.next_slots[0];
    const VerifyOutcome again = sjd_verify_window(std::vector<WindowSlot>{carried}, ps, acc, smp);
    REQUIRE(again.accepted.size() == 1);
    zeros_p += again.accepted[0] == 0;

    const WindowSlot biased{carried.token, *calibrated_law(p, first[0].q)};
    const VerifyOutcome b = sjd_verify_window(std::vector<WindowSlot>{biased}, ps, acc, smp);
    zeros_c += b.accepted.empty() ? b.next_slots[0].token == 0 : b.accepted[0] == 0;
  }
  CHECK(std::abs(zeros_p / double(n) - 0.5) <= 0.01);
  CHECK(std::abs(zeros_c / double(n) - 0.75) <= 0.01);
}

TEST_CASE("SJD progress bound and determinism") {
  const HashModel m(VocabSpec(12), 2, 17, 3.0);
  for (InitStrategy init : kAllInitStrategies) {
    for (std::size_t w : {1, 2, 5, 16}) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const DecodeResult r = run(m, DecoderKind::sjd, 40, w, seed, {}, init);
        CHECK(r.tokens.size() == 40);
        CHECK(r.trace.tokens_generated == 40);
        CHECK(r.trace.steps <= r.trace.tokens_generated + 1);
        std::size_t total = 0;
        for (const IterationRecord& it : r.trace.iterations) {
          CHECK(it.window_start == total);
          total += it.accepted_count;
        }
        CHECK(total == 40);
      }
    }
  }
  const DecodeResult a = run(m, DecoderKind::sjd, 40, 8, 3);
  const DecodeResult b = run(m, DecoderKind::sjd, 40, 8, 3);
  CHECK(a.tokens == b.tokens);
  std::ostringstream ca, cb;
  write_trace_csv(ca, a.trace);
  write_trace_csv(cb, b.trace);
  CHECK(ca.str() == cb.str());
}

TEST_CASE("committed prefix only grows") {
  const HashModel m(VocabSpec(5), 1, 2, 1.0);
  SequenceState state({4, 4}, GridSpec{6, 1, 2});
  DecodeConfig cfg;
  cfg.max_new_tokens = 6;
  cfg.window_size = 4;
  const DecodeResult r = decode_sjd(m, state, cfg, 8);
  REQUIRE(state.prefix.size() == 8);
  CHECK(state.prefix[0] == 4);
  CHECK(state.prefix[1] == 4);
  CHECK(std::vector<Token>(state.prefix.begin() + 2, state.prefix.end()) == r.tokens);
}

TEST_CASE("step compression and trace checks") {
  DecodeTrace t;
  t.tokens_generated = 2357;
  t.steps = 1061;
  CHECK(step_compression(t) == doctest::Approx(2357.0 / 1061.0));

  DecodeTrace s;
  for (std::size_t a : {2, 1, 3}) {
    s.iterations.push_back({s.iterations.size(), s.tokens_generated, a, false, {}, {}});
    s.tokens_generated += a;
    ++s.steps;
  }
  CHECK(step_compression(s) == doctest::Approx(2.0));
  CHECK_NOTHROW(check_trace(s, DecoderKind::sjd));
  CHECK_THROWS_AS(check_trace(s, DecoderKind::ar), std::logic_error);

  const HashModel m(VocabSpec(4), 1, 1, 1.0);
  CHECK(step_compression(run(m, DecoderKind::ar, 10, 1, 1).trace) == 1.0);

  DecodeTrace broken = s;
  broken.steps = 9;
  CHECK_THROWS_AS(check_trace(broken, DecoderKind::sjd), std::logic_error);
}

TEST_CASE("trace CSV layout") {
  DecodeTrace t;
  t.iterations.push_back({0, 0, 3, true, {}, {}});
  t.iterations.push_back({1, 3, 1, false, {}, {}});
  t.tokens_generated = 4;
  t.steps = 2;
  std::ostringstream out;
  write_trace_csv(out, t);
  CHECK(out.str() == "iter,window_start,accepted,resampled,step_total\n0,0,3,1,1\n1,3,1,0,2\n");
}

TEST_CASE("decoder names round-trip") {
  for (DecoderKind k : {DecoderKind::ar, DecoderKind::jacobi_greedy, DecoderKind::sjd})
    CHECK(parse_decoder_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_decoder_kind("beam"), Error);
}
