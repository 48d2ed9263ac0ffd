#include "sjd/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace sjd {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"model", {"kind", "seed", "vocab", "max_len", "order", "concentration", "lambda",
                 "grid_width", "grid_height"}},
      {"sampler", {"temperature", "top_k", "cfg_weight"}},
      {"decode", {"kind", "window_size", "max_new_tokens", "init_strategy", "prompt", "archive"}},
      {"run", {"seed", "trials", "output", "repeats", "threads"}},
  };
  return keys;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  const std::string* raw(const std::string& key) const {
    if (tree_ == nullptr) return nullptr;
    auto it = tree_->find(key);
    if (it == tree_->not_found()) return nullptr;
    cache_ = trim(it->second.data());
    return &cache_;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigError(name_ + "." + key + ": " + why);
  }

  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const {
    const std::string* v = raw(key);
    if (v == nullptr) return fallback;
    std::size_t used = 0;
    std::uint64_t out = 0;
    try {
      if (!v->empty() && (*v)[0] == '-') throw std::invalid_argument("negative");
      out = std::stoull(*v, &used);
    } catch (const std::exception&) {
      fail(key, "expected a non-negative integer, got '" + *v + "'");
    }
    if (used != v->size()) fail(key, "expected a non-negative integer, got '" + *v + "'");
    return out;
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    return static_cast<std::size_t>(u64(key, fallback));
  }

  double real(const std::string& key, double fallback) const {
    const std::string* v = raw(key);
    if (v == nullptr) return fallback;
    std::size_t used = 0;
    double out = 0;
    try {
      out = std::stod(*v, &used);
    } catch (const std::exception&) {
      fail(key, "expected a number, got '" + *v + "'");
    }
    if (used != v->size()) fail(key, "expected a number, got '" + *v + "'");
    return out;
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    const std::string* v = raw(key);
    return v == nullptr ? fallback : *v;
  }

  bool flag(const std::string& key, bool fallback) const {
    const std::string* v = raw(key);
    if (v == nullptr) return fallback;
    if (*v == "true") return true;
    if (*v == "false") return false;
    fail(key, "expected true or false, got '" + *v + "'");
  }

  bool has(const std::string& key) const { return raw(key) != nullptr; }

  template <typename Parse>
  auto parsed(const std::string& key, const std::string& fallback, Parse parse) const {
    const std::string v = text(key, fallback);
    try {
      return parse(v);
    } catch (const Error& e) {
      fail(key, e.what());
    }
  }

 private:
  std::string name_;
  const pt::ptree* tree_;
  mutable std::string cache_;
};

std::vector<Token> parse_tokens(const Section& s, const std::string& key) {
  std::vector<Token> out;
  std::stringstream in(s.text(key, ""));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::exception&) {
      s.fail(key, "expected a comma list of token ids");
    }
    if (used != item.size()) s.fail(key, "expected a comma list of token ids");
    out.push_back(static_cast<Token>(v));
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }

  for (const auto& [section, body] : tree) {
    auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError("unknown key '" + section + "'");
    if (!body.data().empty()) throw ConfigError("unknown key '" + section + "'");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown key '" + section + "." + key + "'");
    }
  }

  auto section = [&](const std::string& name) {
    auto it = tree.find(name);
    return Section(name, it == tree.not_found() ? nullptr : &it->second);
  };
  const Section model = section("model");
  const Section sampler = section("sampler");
  const Section decode = section("decode");
  const Section run = section("run");

  ExperimentConfig cfg;
  ModelSpec& m = cfg.spec.model;
  m.kind = model.parsed("kind", "hash", parse_model_kind);
  m.seed = model.u64("seed", m.seed);
  m.vocab = model.count("vocab", m.vocab);
  m.max_len = model.count("max_len", m.max_len);
  m.order = model.count("order", m.order);
  m.concentration = model.real("concentration", m.concentration);
  m.lambda = model.real("lambda", m.lambda);
  m.grid_width = model.count("grid_width", m.grid_width);
  m.grid_height = model.count("grid_height", m.grid_height);
  if (m.vocab < 2) model.fail("vocab", "must be at least 2");
  if (m.grid_width == 0) model.fail("grid_width", "must be positive");
  if (m.grid_height == 0) model.fail("grid_height", "must be positive");
  if (!(m.lambda >= 0.0 && m.lambda <= 1.0)) model.fail("lambda", "must lie in [0, 1]");
  if (m.kind == ModelKind::tabular && m.max_len == 0) model.fail("max_len", "must be positive");

  DecodeConfig& d = cfg.spec.decode;
  SamplerConfig& s = d.sampler;
  s.temperature = sampler.real("temperature", 1.0);
  if (!(s.temperature > 0.0)) sampler.fail("temperature", "must be positive");
  const std::string top_k = sampler.text("top_k", "off");
  if (top_k == "V")
    s.top_k = m.vocab;
  else if (top_k != "off")
    s.top_k = sampler.count("top_k", 0);
  if (s.top_k && (*s.top_k == 0 || *s.top_k > m.vocab)) sampler.fail("top_k", "must lie in [1, vocab]");
  const std::string cfg_weight = sampler.text("cfg_weight", "off");
  if (cfg_weight != "off") {
    s.cfg_weight = sampler.real("cfg_weight", 0.0);
    if (!(*s.cfg_weight >= 0.0)) sampler.fail("cfg_weight", "must be non-negative");
  }

  d.kind = decode.parsed("kind", "sjd", parse_decoder_kind);
  d.window_size = decode.count("window_size", kDefaultWindow);
  if (d.window_size == 0) decode.fail("window_size", "must be at least 1");
  d.max_new_tokens = decode.count("max_new_tokens", m.grid_width * m.grid_height);
  d.init_strategy = decode.parsed("init_strategy", "uniform", parse_init_strategy);
  cfg.spec.prompt = parse_tokens(decode, "prompt");
  for (Token t : cfg.spec.prompt)
    if (t >= m.vocab) decode.fail("prompt", "token id outside the vocabulary");
  cfg.spec.archive = decode.flag("archive", true);

  cfg.spec.seed = run.u64("seed", 1);
  cfg.trials = run.count("trials", cfg.trials);
  if (cfg.trials == 0) run.fail("trials", "must be positive");
  cfg.repeats = run.count("repeats", cfg.repeats);
  if (cfg.repeats == 0) run.fail("repeats", "must be positive");
  cfg.threads = run.count("threads", 0);
  cfg.output = run.text("output", cfg.output);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace sjd
