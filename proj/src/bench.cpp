#include "sjd/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <thread>

#include "sjd/rng.hpp"

namespace sjd {

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::top_k: return "top_k";
    case SweepAxis::window_size: return "window_size";
    case SweepAxis::seq_length: return "seq_length";
    case SweepAxis::init_strategy: return "init_strategy";
    case SweepAxis::locality_lambda: return "locality_lambda";
  }
  return "?";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  for (SweepAxis a : {SweepAxis::top_k, SweepAxis::window_size, SweepAxis::seq_length,
                      SweepAxis::init_strategy, SweepAxis::locality_lambda})
    if (to_string(a) == name) return a;
  throw Error("unknown sweep axis '" + name + "'");
}

namespace {

std::size_t parse_count(const std::string& s) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    throw Error("expected a non-negative integer, got '" + s + "'");
  }
  if (used != s.size()) throw Error("expected a non-negative integer, got '" + s + "'");
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error("expected a number, got '" + s + "'");
  }
  if (used != s.size()) throw Error("expected a number, got '" + s + "'");
  return v;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

RunSpec apply_axis_value(const RunSpec& base, SweepAxis axis, const std::string& value) {
  RunSpec run = base;
  switch (axis) {
    case SweepAxis::top_k:
      if (value == "off")
        run.decode.sampler.top_k.reset();
      else if (value == "V")
        run.decode.sampler.top_k = run.model.vocab;
      else
        run.decode.sampler.top_k = parse_count(value);
      break;
    case SweepAxis::window_size:
      run.decode.window_size = parse_count(value);
      break;
    case SweepAxis::seq_length: {
      const std::size_t side = parse_count(value);
      run.model.grid_width = side;
      run.model.grid_height = side;
      run.decode.max_new_tokens = side * side;
      break;
    }
    case SweepAxis::init_strategy:
      run.decode.init_strategy = parse_init_strategy(value);
      break;
    case SweepAxis::locality_lambda:
      run.model.lambda = parse_real(value);
      break;
  }
  return run;
}

std::uint64_t sweep_seed(std::uint64_t base_seed, std::size_t value_index, std::size_t repeat) {
  return derive_seed(base_seed, value_index, repeat);
}

double mean_accept_run(const DecodeTrace& trace) {
  double squares = 0.0;
  double total = 0.0;
  for (const IterationRecord& r : trace.iterations) {
    const double a = static_cast<double>(r.accepted_count);
    squares += a * a;
    total += a;
  }
  return total > 0.0 ? squares / total : 0.0;
}

SweepResult run_sweep(const SweepSpec& spec) {
  if (spec.values.empty()) throw Error("sweep needs at least one value");
  if (spec.repeats == 0) throw Error("sweep needs at least one repeat");

  SweepResult result;
  result.axis = spec.axis;
  const std::size_t jobs = spec.values.size() * spec.repeats;
  result.runs.resize(jobs);

  // Validate every point up front so errors surface before any work.
  std::vector<RunSpec> points;
  for (const std::string& v : spec.values) points.push_back(apply_axis_value(spec.base, spec.axis, v));

  auto run_job = [&](std::size_t job) {
    const std::size_t vi = job / spec.repeats;
    const std::size_t rep = job % spec.repeats;
    const RunSpec& run = points[vi];
    const auto model = make_model(run.model, run.prompt.size());
    SequenceState state(run.prompt, grid_for(run.model, run.prompt.size()));
    state.archiving = run.archive;

    const auto t0 = std::chrono::steady_clock::now();
    const DecodeResult r = decode(*model, state, run.decode, sweep_seed(spec.base.seed, vi, rep));
    const auto t1 = std::chrono::steady_clock::now();

    SweepRun& out = result.runs[job];
    out.value = spec.values[vi];
    out.repeat = rep;
    out.tokens = r.trace.tokens_generated;
    out.steps = r.trace.steps;
    out.S = step_compression(r.trace);
    out.mean_accept_run = mean_accept_run(r.trace);
    out.wall_ms = spec.record_wall_clock
                      ? std::chrono::duration<double, std::milli>(t1 - t0).count()
                      : 0.0;
  };

  std::size_t threads = spec.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : spec.threads;
  threads = std::min(threads, jobs);
  if (threads <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) run_job(j);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t j = w; j < jobs; j += threads) run_job(j);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (std::thread& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  for (std::size_t vi = 0; vi < spec.values.size(); ++vi) {
    SweepPoint p;
    p.value = spec.values[vi];
    const auto first = result.runs.begin() + static_cast<std::ptrdiff_t>(vi * spec.repeats);
    const auto last = first + static_cast<std::ptrdiff_t>(spec.repeats);
    const double n = static_cast<double>(spec.repeats);
    for (auto it = first; it != last; ++it) {
      p.mean_S += it->S / n;
      p.mean_accept_run += it->mean_accept_run / n;
      p.steps += static_cast<double>(it->steps) / n;
      p.tokens += static_cast<double>(it->tokens) / n;
    }
    double var = 0.0;
    for (auto it = first; it != last; ++it) var += (it->S - p.mean_S) * (it->S - p.mean_S);
    p.std_S = spec.repeats > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    result.points.push_back(p);
  }
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "axis,value,repeat,tokens,steps,S,mean_accept_run,wall_ms\n";
  const std::string axis = to_string(result.axis);
  for (const SweepRun& r : result.runs) {
    out << axis << ',' << r.value << ',' << r.repeat << ',' << r.tokens << ',' << r.steps << ','
        << fmt("%.6f", r.S) << ',' << fmt("%.6f", r.mean_accept_run) << ',' << fmt("%.3f", r.wall_ms)
        << '\n';
  }
}

// ---------------------------------------------------------------------------

HeatmapData acceptance_heatmap(const DecodeTrace& trace, const GridSpec& grid) {
  HeatmapData h;
  h.width = grid.width;
  h.height = grid.height;
  h.run_length.assign(grid.cells(), 0);
  for (const IterationRecord& r : trace.iterations) {
    for (std::size_t k = 0; k < r.accepted_count; ++k) {
      const std::size_t index = r.window_start + k;
      if (grid.contains(index)) h.run_length[index - grid.origin] = r.accepted_count;
    }
  }
  if (std::find(h.run_length.begin(), h.run_length.end(), 0u) != h.run_length.end())
    throw Error("incomplete trace");
  return h;
}

void write_heatmap_csv(std::ostream& out, const HeatmapData& h) {
  out << "row,col,run_length\n";
  for (std::size_t r = 0; r < h.height; ++r)
    for (std::size_t c = 0; c < h.width; ++c) out << r << ',' << c << ',' << h.at(r, c) << '\n';
}

namespace {

// Linear blend from pale yellow to deep blue.
std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255 + t * (8 - 255)));
  const int g = static_cast<int>(std::lround(247 + t * (48 - 247)));
  const int b = static_cast<int>(std::lround(188 + t * (107 - 188)));
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string render_sweep_svg(const SweepResult& result) {
  if (result.points.empty()) throw Error("nothing to render");
  const double W = 640, H = 400, left = 64, right = 24, top = 32, bottom = 56;
  const double plot_w = W - left - right, plot_h = H - top - bottom;

  double y_max = 1.0;
  for (const SweepPoint& p : result.points) y_max = std::max(y_max, p.mean_S + p.std_S);
  y_max = std::ceil(y_max * 1.1 * 4.0) / 4.0;

  const std::size_t n = result.points.size();
  auto x_at = [&](std::size_t i) {
    return n == 1 ? left + plot_w / 2 : left + plot_w * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  auto y_at = [&](double v) { return top + plot_h * (1.0 - v / y_max); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg << "<text x=\"320\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << "step compression vs " << to_string(result.axis) << "</text>\n";
  svg << "<line x1=\"" << fmt("%.2f", left) << "\" y1=\"" << fmt("%.2f", top + plot_h) << "\" x2=\""
      << fmt("%.2f", left + plot_w) << "\" y2=\"" << fmt("%.2f", top + plot_h) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << fmt("%.2f", left) << "\" y1=\"" << fmt("%.2f", top) << "\" x2=\""
      << fmt("%.2f", left) << "\" y2=\"" << fmt("%.2f", top + plot_h) << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = y_max * tick / 4.0;
    svg << "<text x=\"" << fmt("%.2f", left - 6) << "\" y=\"" << fmt("%.2f", y_at(v) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt("%.2f", v)
        << "</text>\n";
  }
  svg << "<text x=\"16\" y=\"" << fmt("%.2f", top + plot_h / 2)
      << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
      << fmt("%.2f", top + plot_h / 2) << ")\" text-anchor=\"middle\">mean S</text>\n";

  if (n > 1) {
    svg << "<polyline fill=\"none\" stroke=\"#08306b\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < n; ++i)
      svg << (i ? " " : "") << fmt("%.2f", x_at(i)) << ',' << fmt("%.2f", y_at(result.points[i].mean_S));
    svg << "\"/>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    const SweepPoint& p = result.points[i];
    const std::string x = fmt("%.2f", x_at(i));
    if (p.std_S > 0.0)
      svg << "<line class=\"errorbar\" x1=\"" << x << "\" y1=\"" << fmt("%.2f", y_at(p.mean_S - p.std_S))
          << "\" x2=\"" << x << "\" y2=\"" << fmt("%.2f", y_at(p.mean_S + p.std_S))
          << "\" stroke=\"#6baed6\"/>\n";
    svg << "<circle class=\"marker\" cx=\"" << x << "\" cy=\"" << fmt("%.2f", y_at(p.mean_S))
        << "\" r=\"4\" fill=\"#08306b\"/>\n";
    svg << "<text x=\"" << x << "\" y=\"" << fmt("%.2f", top + plot_h + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << p.value << "</text>\n";
  }
  svg << "<text x=\"" << fmt("%.2f", left + plot_w / 2) << "\" y=\"" << fmt("%.2f", H - 12)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << to_string(result.axis)
      << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::string render_heatmap_svg(const HeatmapData& h) {
  if (h.run_length.empty()) throw Error("nothing to render");
  const double cell = std::max(2.0, std::floor(480.0 / static_cast<double>(std::max(h.width, h.height))));
  const double grid_w = cell * static_cast<double>(h.width);
  const double grid_h = cell * static_cast<double>(h.height);
  const double margin = 16, legend_w = 96;
  const double W = grid_w + 2 * margin + legend_w, H = grid_h + 2 * margin;

  const std::size_t lo = *std::min_element(h.run_length.begin(), h.run_length.end());
  const std::size_t hi = *std::max_element(h.run_length.begin(), h.run_length.end());
  auto shade = [&](std::size_t v) {
    return ramp(hi == lo ? 0.0 : static_cast<double>(v - lo) / static_cast<double>(hi - lo));
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt("%.0f", W) << "\" height=\""
      << fmt("%.0f", H) << "\" viewBox=\"0 0 " << fmt("%.0f", W) << ' ' << fmt("%.0f", H) << "\">\n";
  svg << "<g class=\"cells\">\n";
  for (std::size_t r = 0; r < h.height; ++r) {
    for (std::size_t c = 0; c < h.width; ++c) {
      svg << "<rect x=\"" << fmt("%.0f", margin + cell * static_cast<double>(c)) << "\" y=\""
          << fmt("%.0f", margin + cell * static_cast<double>(r)) << "\" width=\"" << fmt("%.0f", cell)
          << "\" height=\"" << fmt("%.0f", cell) << "\" fill=\"" << shade(h.at(r, c)) << "\"/>\n";
    }
  }
  svg << "</g>\n";

  // Legend: a stepped ramp from the shortest to the longest run.
  const double lx = margin * 2 + grid_w, ly = margin, lh = std::min(grid_h, 160.0);
  svg << "<g class=\"legend\">\n";
  for (int i = 0; i < 8; ++i) {
    svg << "<path d=\"M" << fmt("%.0f", lx) << ' ' << fmt("%.2f", ly + lh * i / 8.0) << "h16v"
        << fmt("%.2f", lh / 8.0) << "h-16z\" fill=\"" << ramp(1.0 - i / 7.0) << "\"/>\n";
  }
  svg << "<text x=\"" << fmt("%.0f", lx + 22) << "\" y=\"" << fmt("%.0f", ly + 10)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << hi << "</text>\n";
  svg << "<text x=\"" << fmt("%.0f", lx + 22) << "\" y=\"" << fmt("%.0f", ly + lh)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << lo << "</text>\n";
  svg << "<text x=\"" << fmt("%.0f", lx) << "\" y=\"" << fmt("%.0f", ly + lh + 16)
      << "\" font-family=\"sans-serif\" font-size=\"11\">accepted run</text>\n";
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace sjd
