#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "sjd/bench.hpp"
#include "sjd/config.hpp"
#include "sjd/decoding.hpp"
#include "sjd/verify.hpp"

namespace sjd::cli {
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out_dir;
  std::string axis;
  std::string values;
  std::string dump_tokens;
  std::size_t trials = 0;
  bool corrupt_q = false;
  bool record_wall_clock = false;
};

// Usage errors that surface after argument parsing.
struct UsageError : Error {
  using Error::Error;
};

fs::path output_dir(const Options& opt, const ExperimentConfig& cfg) {
  fs::path dir = opt.out_dir.empty() ? fs::path(cfg.output) : fs::path(opt.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << bytes;
}

void check_horizon(const ExperimentConfig& cfg) {
  const RunSpec& s = cfg.spec;
  if (s.model.kind == ModelKind::tabular &&
      s.prompt.size() + s.decode.max_new_tokens > s.model.max_len)
    throw ConfigError("decode.max_new_tokens: prompt plus new tokens exceed model.max_len");
}

DecodeResult run_one(const ExperimentConfig& cfg, std::unique_ptr<CausalModel>& model, GridSpec& grid) {
  check_horizon(cfg);
  const RunSpec& s = cfg.spec;
  model = make_model(s.model, s.prompt.size());
  grid = grid_for(s.model, s.prompt.size());
  SequenceState state(s.prompt, grid);
  state.archiving = s.archive;
  return decode(*model, state, s.decode, s.seed);
}

int cmd_decode(const Options& opt, std::ostream& out) {
  const ExperimentConfig cfg = load_config(opt.config);
  std::unique_ptr<CausalModel> model;
  GridSpec grid;
  const DecodeResult r = run_one(cfg, model, grid);

  std::ostringstream csv;
  write_trace_csv(csv, r.trace);
  write_file(output_dir(opt, cfg) / "trace.csv", csv.str());

  if (!opt.dump_tokens.empty()) {
    std::ostringstream dump;
    for (std::size_t i = 0; i < r.tokens.size(); ++i) dump << (i ? " " : "") << r.tokens[i];
    dump << '\n';
    write_file(opt.dump_tokens, dump.str());
  }

  char line[128];
  std::snprintf(line, sizeof line, "tokens=%zu steps=%zu S=%.3f", r.trace.tokens_generated,
                r.trace.steps, step_compression(r.trace));
  out << line << '\n';
  return kOk;
}

int cmd_verify(const Options& opt, std::ostream& out) {
  const ExperimentConfig cfg = load_config(opt.config);
  check_horizon(cfg);
  const RunSpec& s = cfg.spec;
  checked_domain(s.model.vocab, s.decode.max_new_tokens);

  const auto model = make_model(s.model, s.prompt.size());
  EquivalenceSetup setup;
  setup.model = model.get();
  setup.prompt = s.prompt;
  setup.grid = grid_for(s.model, s.prompt.size());
  setup.sjd = s.decode;
  setup.sjd.corrupt_q = opt.corrupt_q;
  setup.n_trials = opt.trials > 0 ? opt.trials : cfg.trials;
  setup.seed_base = s.seed;
  setup.threads = cfg.threads;

  const EquivalenceReport report = run_equivalence(setup);
  out << report_header() << '\n' << report_row(report) << '\n';
  return report.pass ? kOk : kFailure;
}

std::vector<std::string> split_values(const std::string& list) {
  std::vector<std::string> values;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) values.push_back(item);
  return values;
}

int cmd_sweep(const Options& opt, std::ostream& out) {
  SweepSpec spec;
  try {
    spec.axis = parse_sweep_axis(opt.axis);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  spec.values = split_values(opt.values);
  if (spec.values.empty()) throw UsageError("--values needs at least one value");

  const ExperimentConfig cfg = load_config(opt.config);
  spec.base = cfg.spec;
  spec.repeats = cfg.repeats;
  spec.threads = cfg.threads;
  spec.record_wall_clock = opt.record_wall_clock;
  try {
    for (const std::string& v : spec.values) {
      ExperimentConfig point = cfg;
      point.spec = apply_axis_value(cfg.spec, spec.axis, v);
      check_horizon(point);
      validate_sampler(point.spec.decode.sampler, point.spec.model.vocab);
      if (point.spec.decode.window_size == 0) throw Error("window_size must be at least 1");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(std::string("--values: ") + e.what());
  }

  const SweepResult result = run_sweep(spec);
  const fs::path dir = output_dir(opt, cfg);
  std::ostringstream csv;
  write_sweep_csv(csv, result);
  write_file(dir / (to_string(spec.axis) + ".csv"), csv.str());
  write_file(dir / (to_string(spec.axis) + ".svg"), render_sweep_svg(result));

  for (const SweepPoint& p : result.points) {
    char line[160];
    std::snprintf(line, sizeof line, "%s=%s mean_S=%.3f std_S=%.3f", to_string(spec.axis).c_str(),
                  p.value.c_str(), p.mean_S, p.std_S);
    out << line << '\n';
  }
  return kOk;
}

int cmd_heatmap(const Options& opt, std::ostream& out) {
  const ExperimentConfig cfg = load_config(opt.config);
  std::unique_ptr<CausalModel> model;
  GridSpec grid;
  const DecodeResult r = run_one(cfg, model, grid);
  const HeatmapData heat = acceptance_heatmap(r.trace, grid);

  const fs::path dir = output_dir(opt, cfg);
  std::ostringstream csv;
  write_heatmap_csv(csv, heat);
  write_file(dir / "heatmap.csv", csv.str());
  write_file(dir / "heatmap.svg", render_heatmap_svg(heat));

  char line[128];
  std::snprintf(line, sizeof line, "cells=%zu steps=%zu S=%.3f", heat.run_length.size(),
                r.trace.steps, step_compression(r.trace));
  out << line << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Speculative Jacobi decoding engine and benchmark harness", "sjd"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Experiment config file")->required();
    sub->add_option("--out", opt.out_dir, "Output directory (defaults to run.output)");
  };

  CLI::App* decode_cmd = app.add_subcommand("decode", "Run one decode and write its trace");
  add_common(decode_cmd);
  decode_cmd->add_option("--dump-tokens", opt.dump_tokens, "Write generated token ids to this file");

  CLI::App* verify_cmd = app.add_subcommand("verify", "Check SJD against the exact sequence law");
  add_common(verify_cmd);
  verify_cmd->add_option("--trials", opt.trials, "Monte-Carlo trials per decoder");
  verify_cmd->add_flag("--corrupt-q", opt.corrupt_q, "Negative control: fresh drafts report uniform q");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Ablation sweep along one axis");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--axis", opt.axis, "top_k|window_size|seq_length|init_strategy|locality_lambda")
      ->required();
  sweep_cmd->add_option("--values", opt.values, "Comma-separated axis values")->required();
  sweep_cmd->add_flag("--record-wall-clock", opt.record_wall_clock,
                      "Fill wall_ms with measured time (output is no longer reproducible)");

  CLI::App* heatmap_cmd = app.add_subcommand("heatmap", "Accepted-run heatmap over the image grid");
  add_common(heatmap_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*decode_cmd) return cmd_decode(opt, out);
    if (*verify_cmd) return cmd_verify(opt, out);
    if (*sweep_cmd) return cmd_sweep(opt, out);
    if (*heatmap_cmd) return cmd_heatmap(opt, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    if (std::string(e.what()) == "oracle size") {
      err << "error: instance exceeds the enumeration guard (oracle size)\n";
      return kUsage;
    }
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace sjd::cli
