#pragma once

// Ablation sweeps, acceptance heatmaps and SVG rendering.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sjd/core.hpp"
#include "sjd/decoding.hpp"
#include "sjd/model.hpp"

namespace sjd {

enum class SweepAxis { top_k, window_size, seq_length, init_strategy, locality_lambda };

std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& name);

/// Everything needed to run one decode from scratch.
struct RunSpec {
  ModelSpec model;
  DecodeConfig decode;
  std::vector<Token> prompt;
  std::uint64_t seed = 1;
  bool archive = true;
};

struct SweepSpec {
  SweepAxis axis = SweepAxis::window_size;
  std::vector<std::string> values;
  std::size_t repeats = 1;
  RunSpec base;
  bool record_wall_clock = false;
  std::size_t threads = 0;
};

// Applies one axis value to a copy of the base run. seq_length values are
// grid side lengths: the grid becomes s x s and max_new_tokens s*s. top_k
// accepts "off" or "V" for the full vocabulary.
RunSpec apply_axis_value(const RunSpec& base, SweepAxis axis, const std::string& value);

struct SweepRun {
  std::string value;
  std::size_t repeat = 0;
  std::size_t tokens = 0;
  std::size_t steps = 0;
  double S = 0.0;
  double mean_accept_run = 0.0;
  double wall_ms = 0.0;
};

struct SweepPoint {
  std::string value;
  double mean_S = 0.0;
  double std_S = 0.0;
  double mean_accept_run = 0.0;
  double steps = 0.0;
  double tokens = 0.0;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::window_size;
  std::vector<SweepRun> runs;     // value-major, then repeat
  std::vector<SweepPoint> points;
};

// Run seed = derive_seed(base.seed, value_index, repeat).
std::uint64_t sweep_seed(std::uint64_t base_seed, std::size_t value_index, std::size_t repeat);

SweepResult run_sweep(const SweepSpec& spec);

// Token-weighted mean accepted run: sum(a^2) / sum(a) over iterations.
double mean_accept_run(const DecodeTrace& trace);

// axis,value,repeat,tokens,steps,S,mean_accept_run,wall_ms
void write_sweep_csv(std::ostream& out, const SweepResult& result);

/// Per grid cell: accepted-run length of the iteration that fixed it.
struct HeatmapData {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::size_t> run_length;  // row-major

  std::size_t at(std::size_t row, std::size_t col) const { return run_length[row * width + col]; }
};

// Throws Error("incomplete trace") unless the trace fixes every grid cell.
HeatmapData acceptance_heatmap(const DecodeTrace& trace, const GridSpec& grid);

std::string render_sweep_svg(const SweepResult& result);
std::string render_heatmap_svg(const HeatmapData& heatmap);

void write_heatmap_csv(std::ostream& out, const HeatmapData& heatmap);

}  // namespace sjd
