#include <doctest.h>

#include <sstream>

#include "sjd/bench.hpp"

using namespace sjd;

namespace {

DecodeTrace trace_of(std::initializer_list<std::size_t> runs, std::size_t origin = 0) {
  DecodeTrace t;
  for (std::size_t a : runs) {
    t.iterations.push_back({t.iterations.size(), origin + t.tokens_generated, a, false, {}, {}});
    t.tokens_generated += a;
    ++t.steps;
  }
  return t;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t at = hay.find(needle); at != std::string::npos; at = hay.find(needle, at + 1)) ++n;
  return n;
}

RunSpec locality_run(double lambda, std::size_t side) {
  RunSpec r;
  r.model.kind = ModelKind::locality;
  r.model.vocab = 32;
  r.model.lambda = lambda;
  r.model.grid_width = side;
  r.model.grid_height = side;
  r.decode.window_size = 16;
  r.decode.max_new_tokens = side * side;
  r.decode.init_strategy = InitStrategy::repeat_left;
  return r;
}

}  // namespace

TEST_CASE("heatmap run lengths") {
  const GridSpec g{3, 2, 0};
  const HeatmapData ar = acceptance_heatmap(trace_of({1, 1, 1, 1, 1, 1}), g);
  for (std::size_t v : ar.run_length) CHECK(v == 1);

  const HeatmapData h = acceptance_heatmap(trace_of({2, 1, 3}), g);
  CHECK(h.run_length == std::vector<std::size_t>{2, 2, 1, 3, 3, 3});
  CHECK(h.at(1, 0) == 3);

  // Prompt tokens sit before the grid origin.
  const HeatmapData shifted = acceptance_heatmap(trace_of({4, 2}, 5), GridSpec{3, 2, 5});
  CHECK(shifted.run_length == std::vector<std::size_t>{4, 4, 4, 4, 2, 2});

  // Summing 1/run over cells recovers the step count.
  double inverse = 0;
  for (std::size_t v : h.run_length) inverse += 1.0 / static_cast<double>(v);
  CHECK(inverse == doctest::Approx(3.0));

  CHECK_THROWS_WITH_AS(acceptance_heatmap(trace_of({2, 1}), g), "incomplete trace", Error);
}

TEST_CASE("mean accepted run is token weighted") {
  CHECK(mean_accept_run(trace_of({2, 1, 3})) == doctest::Approx(14.0 / 6.0));
  CHECK(mean_accept_run(trace_of({1, 1, 1})) == doctest::Approx(1.0));
}

TEST_CASE("heatmap svg has one rect per cell and is deterministic") {
  const HeatmapData h = acceptance_heatmap(trace_of({2, 1, 3, 4, 2}), GridSpec{4, 3, 0});
  const std::string svg = render_heatmap_svg(h);
  CHECK(count(svg, "<rect") == 12);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg == render_heatmap_svg(h));

  std::ostringstream csv;
  write_heatmap_csv(csv, acceptance_heatmap(trace_of({1, 1}), GridSpec{2, 1, 0}));
  CHECK(csv.str() == "row,col,run_length\n0,0,1\n0,1,1\n");
}

TEST_CASE("axis values") {
  RunSpec base = locality_run(0.9, 8);
  CHECK(apply_axis_value(base, SweepAxis::top_k, "off").decode.sampler.top_k == std::nullopt);
  CHECK(apply_axis_value(base, SweepAxis::top_k, "V").decode.sampler.top_k == 32u);
  CHECK(apply_axis_value(base, SweepAxis::top_k, "5").decode.sampler.top_k == 5u);
  CHECK(apply_axis_value(base, SweepAxis::window_size, "4").decode.window_size == 4);
  const RunSpec seq = apply_axis_value(base, SweepAxis::seq_length, "6");
  CHECK(seq.model.grid_width == 6);
  CHECK(seq.decode.max_new_tokens == 36);
  CHECK(apply_axis_value(base, SweepAxis::init_strategy, "repeat_above").decode.init_strategy ==
        InitStrategy::repeat_above);
  CHECK(apply_axis_value(base, SweepAxis::locality_lambda, "0.25").model.lambda == 0.25);
  CHECK_THROWS_AS(apply_axis_value(base, SweepAxis::window_size, "zero"), Error);
  CHECK_THROWS_AS(parse_sweep_axis("temperature"), Error);
}

TEST_CASE("single-point sweep") {
  SweepSpec spec;
  spec.axis = SweepAxis::window_size;
  spec.values = {"8"};
  spec.base = locality_run(0.9, 6);
  const SweepResult r = run_sweep(spec);
  REQUIRE(r.runs.size() == 1);
  REQUIRE(r.points.size() == 1);
  CHECK(r.runs[0].tokens == 36);
  CHECK(r.runs[0].S == doctest::Approx(36.0 / r.runs[0].steps));
  CHECK(r.runs[0].wall_ms == 0.0);
  CHECK(r.points[0].std_S == 0.0);

  std::ostringstream csv;
  write_sweep_csv(csv, r);
  const std::string text = csv.str();
  CHECK(text.rfind("axis,value,repeat,tokens,steps,S,mean_accept_run,wall_ms\n", 0) == 0);
  CHECK(count(text, "\n") == 2);

  const std::string svg = render_sweep_svg(r);
  CHECK(count(svg, "class=\"marker\"") == 1);
}

TEST_CASE("sweep runs are independent decodes with derived seeds") {
  SweepSpec a;
  a.axis = SweepAxis::window_size;
  a.values = {"2", "8"};
  a.repeats = 3;
  a.base = locality_run(0.9, 6);
  a.threads = 1;
  const SweepResult ra = run_sweep(a);
  REQUIRE(ra.runs.size() == 6);
  for (std::size_t vi = 0; vi < 2; ++vi) {
    for (std::size_t rep = 0; rep < 3; ++rep) {
      const RunSpec run = apply_axis_value(a.base, a.axis, a.values[vi]);
      const auto model = make_model(run.model, 0);
      SequenceState state({}, grid_for(run.model, 0));
      const DecodeResult d = decode(*model, state, run.decode, sweep_seed(run.seed, vi, rep));
      const SweepRun& got = ra.runs[vi * 3 + rep];
      CHECK(got.value == a.values[vi]);
      CHECK(got.repeat == rep);
      CHECK(got.steps == d.trace.steps);
      CHECK(got.mean_accept_run == doctest::Approx(mean_accept_run(d.trace)));
    }
  }

  SweepSpec c = a;
  c.threads = 4;
  std::ostringstream ca, cc;
  write_sweep_csv(ca, ra);
  write_sweep_csv(cc, run_sweep(c));
  CHECK(ca.str() == cc.str());
  CHECK(render_sweep_svg(ra) == render_sweep_svg(run_sweep(c)));
}

TEST_CASE("strong locality compresses more than noise") {
  double strong = 0, none = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RunSpec s = locality_run(0.9, 12);
    s.seed = seed;
    SweepSpec sp;
    sp.axis = SweepAxis::locality_lambda;
    sp.values = {"0.9", "0"};
    sp.base = s;
    const SweepResult r = run_sweep(sp);
    strong += r.points[0].mean_S;
    none += r.points[1].mean_S;
  }
  CHECK(strong > none);
}
