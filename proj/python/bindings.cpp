#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "sjd/bench.hpp"
#include "sjd/config.hpp"
#include "sjd/decoding.hpp"
#include "sjd/verify.hpp"

namespace py = pybind11;
using namespace sjd;

namespace {

DecodeResult run_decode(const ModelSpec& model, const DecodeConfig& cfg, std::uint64_t seed,
                        const std::vector<Token>& prompt, bool archive) {
  const auto m = make_model(model, prompt.size());
  SequenceState state(prompt, grid_for(model, prompt.size()));
  state.archiving = archive;
  return decode(*m, state, cfg, seed);
}

EquivalenceReport run_verify(const ModelSpec& model, const DecodeConfig& cfg, std::size_t n_trials,
                             std::uint64_t seed_base, const std::vector<Token>& prompt,
                             std::size_t threads) {
  checked_domain(model.vocab, cfg.max_new_tokens);
  const auto m = make_model(model, prompt.size());
  EquivalenceSetup setup;
  setup.model = m.get();
  setup.prompt = prompt;
  setup.grid = grid_for(model, prompt.size());
  setup.sjd = cfg;
  setup.n_trials = n_trials;
  setup.seed_base = seed_base;
  setup.threads = threads;
  return run_equivalence(setup);
}

std::vector<double> exact_law(const ModelSpec& model, const SamplerConfig& sampler, std::size_t length,
                              const std::vector<Token>& prompt) {
  checked_domain(model.vocab, length);
  const auto m = make_model(model, prompt.size());
  return enumerate_exact(*m, sampler, prompt, length, prompt.size()).probs;
}

std::string trace_csv(const DecodeTrace& t) {
  std::ostringstream out;
  write_trace_csv(out, t);
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_sjd, m) {
  m.doc() = "Speculative Jacobi decoding engine";

  // Translators run newest first, so the subclass registers last.
  const auto base = py::register_exception<Error>(m, "SJDError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::enum_<ModelKind>(m, "ModelKind")
      .value("tabular", ModelKind::tabular)
      .value("hash", ModelKind::hash)
      .value("locality", ModelKind::locality);
  py::enum_<DecoderKind>(m, "DecoderKind")
      .value("ar", DecoderKind::ar)
      .value("jacobi_greedy", DecoderKind::jacobi_greedy)
      .value("sjd", DecoderKind::sjd);
  py::enum_<InitStrategy>(m, "InitStrategy")
      .value("uniform", InitStrategy::uniform)
      .value("repeat_left", InitStrategy::repeat_left)
      .value("repeat_above", InitStrategy::repeat_above)
      .value("sample_left_dist", InitStrategy::sample_left_dist)
      .value("sample_above_dist", InitStrategy::sample_above_dist);
  py::enum_<SweepAxis>(m, "SweepAxis")
      .value("top_k", SweepAxis::top_k)
      .value("window_size", SweepAxis::window_size)
      .value("seq_length", SweepAxis::seq_length)
      .value("init_strategy", SweepAxis::init_strategy)
      .value("locality_lambda", SweepAxis::locality_lambda);

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init<>())
      .def_readwrite("kind", &ModelSpec::kind)
      .def_readwrite("seed", &ModelSpec::seed)
      .def_readwrite("vocab", &ModelSpec::vocab)
      .def_readwrite("max_len", &ModelSpec::max_len)
      .def_readwrite("order", &ModelSpec::order)
      .def_readwrite("concentration", &ModelSpec::concentration)
      .def_readwrite("lambda_", &ModelSpec::lambda)
      .def_readwrite("grid_width", &ModelSpec::grid_width)
      .def_readwrite("grid_height", &ModelSpec::grid_height);

  py::class_<SamplerConfig>(m, "SamplerConfig")
      .def(py::init<>())
      .def_readwrite("temperature", &SamplerConfig::temperature)
      .def_readwrite("top_k", &SamplerConfig::top_k)
      .def_readwrite("cfg_weight", &SamplerConfig::cfg_weight);

  py::class_<DecodeConfig>(m, "DecodeConfig")
      .def(py::init<>())
      .def_readwrite("kind", &DecodeConfig::kind)
      .def_readwrite("window_size", &DecodeConfig::window_size)
      .def_readwrite("max_new_tokens", &DecodeConfig::max_new_tokens)
      .def_readwrite("sampler", &DecodeConfig::sampler)
      .def_readwrite("init_strategy", &DecodeConfig::init_strategy)
      .def_readwrite("corrupt_q", &DecodeConfig::corrupt_q);

  py::class_<IterationRecord>(m, "IterationRecord")
      .def_readonly("iteration_index", &IterationRecord::iteration_index)
      .def_readonly("window_start", &IterationRecord::window_start)
      .def_readonly("accepted_count", &IterationRecord::accepted_count)
      .def_readonly("resampled", &IterationRecord::resampled);

  py::class_<DecodeTrace>(m, "DecodeTrace")
      .def_readonly("iterations", &DecodeTrace::iterations)
      .def_readonly("tokens_generated", &DecodeTrace::tokens_generated)
      .def_readonly("steps", &DecodeTrace::steps)
      .def_property_readonly("step_compression", [](const DecodeTrace& t) { return step_compression(t); })
      .def_property_readonly("mean_accept_run", [](const DecodeTrace& t) { return mean_accept_run(t); })
      .def("to_csv", &trace_csv);

  py::class_<DecodeResult>(m, "DecodeResult")
      .def_readonly("tokens", &DecodeResult::tokens)
      .def_readonly("trace", &DecodeResult::trace);

  py::class_<EquivalenceReport>(m, "EquivalenceReport")
      .def_readonly("config", &EquivalenceReport::config)
      .def_readonly("tv_sjd", &EquivalenceReport::tv_sjd)
      .def_readonly("tv_ar", &EquivalenceReport::tv_ar)
      .def_readonly("ratio", &EquivalenceReport::ratio)
      .def_readonly("n_trials", &EquivalenceReport::n_trials)
      .def_readonly("passed", &EquivalenceReport::pass)
      .def("row", &report_row);

  py::class_<SweepRun>(m, "SweepRun")
      .def_readonly("value", &SweepRun::value)
      .def_readonly("repeat", &SweepRun::repeat)
      .def_readonly("tokens", &SweepRun::tokens)
      .def_readonly("steps", &SweepRun::steps)
      .def_readonly("S", &SweepRun::S)
      .def_readonly("mean_accept_run", &SweepRun::mean_accept_run);

  py::class_<SweepPoint>(m, "SweepPoint")
      .def_readonly("value", &SweepPoint::value)
      .def_readonly("mean_S", &SweepPoint::mean_S)
      .def_readonly("std_S", &SweepPoint::std_S)
      .def_readonly("mean_accept_run", &SweepPoint::mean_accept_run);

  py::class_<SweepResult>(m, "SweepResult")
      .def_readonly("runs", &SweepResult::runs)
      .def_readonly("points", &SweepResult::points)
      .def("to_csv", [](const SweepResult& r) {
        std::ostringstream out;
        write_sweep_csv(out, r);
        return out.str();
      })
      .def("to_svg", &render_sweep_svg);

  py::class_<RunSpec>(m, "RunSpec")
      .def(py::init<>())
      .def_readwrite("model", &RunSpec::model)
      .def_readwrite("decode", &RunSpec::decode)
      .def_readwrite("prompt", &RunSpec::prompt)
      .def_readwrite("seed", &RunSpec::seed)
      .def_readwrite("archive", &RunSpec::archive);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readonly("spec", &ExperimentConfig::spec)
      .def_readonly("trials", &ExperimentConfig::trials)
      .def_readonly("repeats", &ExperimentConfig::repeats)
      .def_readonly("output", &ExperimentConfig::output);

  m.def("load_config", &load_config, py::arg("path"));
  m.def("parse_config", &parse_config_text, py::arg("text"));

  m.def("decode", &run_decode, py::arg("model"), py::arg("config"), py::arg("seed") = 1,
        py::arg("prompt") = std::vector<Token>{}, py::arg("archive") = true,
        py::call_guard<py::gil_scoped_release>());

  m.def("verify", &run_verify, py::arg("model"), py::arg("config"), py::arg("n_trials") = 200000,
        py::arg("seed_base") = 1, py::arg("prompt") = std::vector<Token>{}, py::arg("threads") = 0,
        py::call_guard<py::gil_scoped_release>());

  m.def("exact_law", &exact_law, py::arg("model"), py::arg("sampler"), py::arg("length"),
        py::arg("prompt") = std::vector<Token>{});

  m.def(
      "sweep",
      [](const RunSpec& base, SweepAxis axis, std::vector<std::string> values, std::size_t repeats) {
        SweepSpec spec;
        spec.base = base;
        spec.axis = axis;
        spec.values = std::move(values);
        spec.repeats = repeats;
        return run_sweep(spec);
      },
      py::arg("base"), py::arg("axis"), py::arg("values"), py::arg("repeats") = 1,
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "heatmap",
      [](const DecodeTrace& trace, const ModelSpec& model, std::size_t prompt_length) {
        const HeatmapData h = acceptance_heatmap(trace, grid_for(model, prompt_length));
        std::vector<std::vector<std::size_t>> rows(h.height);
        for (std::size_t r = 0; r < h.height; ++r)
          for (std::size_t c = 0; c < h.width; ++c) rows[r].push_back(h.at(r, c));
        return rows;
      },
      py::arg("trace"), py::arg("model"), py::arg("prompt_length") = 0);

  m.def(
      "apply_sampler",
      [](const std::vector<double>& logits, const SamplerConfig& cfg,
         std::optional<std::vector<double>> uncond) {
        const LogitVec cond(logits);
        if (!uncond) return apply_sampler(cond, nullptr, cfg).values;
        const LogitVec u(*uncond);
        return apply_sampler(cond, &u, cfg).values;
      },
      py::arg("logits"), py::arg("sampler"), py::arg("uncond") = py::none());

  m.def("acceptance_probability", &acceptance_probability, py::arg("p_t"), py::arg("q_t"));
  m.def(
      "calibrated_law",
      [](const std::vector<double>& p, const std::vector<double>& q) -> std::optional<std::vector<double>> {
        const auto c = calibrated_law(ProbVec(p), ProbVec(q));
        if (!c) return std::nullopt;
        return c->values;
      },
      py::arg("p"), py::arg("q"));
}
