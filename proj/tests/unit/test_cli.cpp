#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kConfigs = SJD_CONFIG_DIR;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = sjd::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sjd_test_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  fs::create_directories(dir);
  const fs::path p = dir / "run.ini";
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("AR decode reports unit compression") {
  const fs::path dir = scratch("ar");
  const Run r = cli({"decode", "--config", kConfigs + "/ar_hash.ini", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out == "tokens=256 steps=256 S=1.000\n");
  const std::string trace = slurp(dir / "trace.csv");
  CHECK(trace.rfind("iter,window_start,accepted,resampled,step_total\n0,0,1,0,1\n", 0) == 0);
}

TEST_CASE("decode output is byte-identical across reruns") {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  const Run ra = cli({"decode", "--config", kConfigs + "/locality.ini", "--out", a.string(),
                      "--dump-tokens", (a / "tok.txt").string()});
  const Run rb = cli({"decode", "--config", kConfigs + "/locality.ini", "--out", b.string(),
                      "--dump-tokens", (b / "tok.txt").string()});
  CHECK(ra.code == 0);
  CHECK(ra.out == rb.out);
  CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
  CHECK(slurp(a / "tok.txt") == slurp(b / "tok.txt"));
}

TEST_CASE("top-1 SJD dumps the AR tokens") {
  const fs::path dir = scratch("greedy");
  const std::string base = "[model]\nkind = locality\nvocab = 16\ngrid_width = 8\ngrid_height = 8\n"
                           "[sampler]\ntop_k = 1\n[decode]\ninit_strategy = repeat_above\n";
  const fs::path sjd = write_config(dir / "sjd", base + "kind = sjd\n");
  const fs::path ar = write_config(dir / "ar", base + "kind = ar\n");
  CHECK(cli({"decode", "--config", sjd.string(), "--out", dir.string(), "--dump-tokens",
             (dir / "sjd.txt").string()}).code == 0);
  CHECK(cli({"decode", "--config", ar.string(), "--out", dir.string(), "--dump-tokens",
             (dir / "ar.txt").string()}).code == 0);
  CHECK(slurp(dir / "sjd.txt") == slurp(dir / "ar.txt"));
  CHECK_FALSE(slurp(dir / "ar.txt").empty());
}

TEST_CASE("verify prints one report row and gates the exit code") {
  const Run ok = cli({"verify", "--config", kConfigs + "/verify_tabular.ini", "--trials", "50000"});
  CHECK(ok.code == 0);
  CHECK(ok.out.rfind("config,tv_sjd,tv_ar,ratio,n_trials,pass\n", 0) == 0);
  CHECK(ok.out.find(",50000,true\n") != std::string::npos);

  const Run bad = cli({"verify", "--config", kConfigs + "/verify_tabular.ini", "--trials", "50000",
                       "--corrupt-q"});
  CHECK(bad.code == 1);
  CHECK(bad.out.find("-corrupt") != std::string::npos);
  CHECK(bad.out.find(",false\n") != std::string::npos);
}

TEST_CASE("verify refuses instances past the enumeration guard") {
  const fs::path dir = scratch("guard");
  const fs::path cfg = write_config(dir, "[model]\nkind = hash\nvocab = 64\n[decode]\nmax_new_tokens = 6\n");
  const Run r = cli({"verify", "--config", cfg.string(), "--trials", "10"});
  CHECK(r.code == 2);
  CHECK(r.err.find("oracle size") != std::string::npos);
}

TEST_CASE("sweep writes one row per run and an svg") {
  const fs::path dir = scratch("sweep");
  const Run r = cli({"sweep", "--config", kConfigs + "/hash.ini", "--axis", "window_size", "--values", "8",
                     "--out", dir.string()});
  CHECK(r.code == 0);
  const std::string csv = slurp(dir / "window_size.csv");
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 1 + 20);  // header plus 20 repeats of one value
  CHECK(fs::exists(dir / "window_size.svg"));

  CHECK(cli({"sweep", "--config", kConfigs + "/hash.ini", "--axis", "depth", "--values", "1"}).code == 2);
  CHECK(cli({"sweep", "--config", kConfigs + "/hash.ini", "--axis", "top_k", "--values", "0"}).code == 2);
  CHECK(cli({"sweep", "--config", kConfigs + "/hash.ini", "--axis", "top_k", "--values", ""}).code == 2);
}

TEST_CASE("heatmap artifacts") {
  const fs::path dir = scratch("heatmap");
  const Run r = cli({"heatmap", "--config", kConfigs + "/locality.ini", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("cells=576 ", 0) == 0);
  CHECK(fs::exists(dir / "heatmap.svg"));
  CHECK(fs::exists(dir / "heatmap.csv"));
}

TEST_CASE("usage and config errors exit 2") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"transcode"}).code == 2);
  CHECK(cli({"decode"}).code == 2);
  CHECK(cli({"decode", "--config", "/nonexistent.ini"}).code == 2);
  CHECK(cli({"--help"}).code == 0);

  const fs::path dir = scratch("badcfg");
  const Run unknown = cli({"decode", "--config", write_config(dir, "[model]\ncolour = red\n").string()});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("unknown key 'model.colour'") != std::string::npos);

  const fs::path horizon =
      write_config(dir / "h", "[model]\nkind = tabular\nvocab = 3\nmax_len = 4\n[decode]\nmax_new_tokens = 5\n");
  CHECK(cli({"decode", "--config", horizon.string(), "--out", dir.string()}).code == 2);
}
