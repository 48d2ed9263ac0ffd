#include "sjd/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sjd/rng.hpp"

namespace sjd {
namespace {

double exponential_score(std::uint64_t bits) { return -std::log1p(-to_unit(bits)); }

void check_tokens(std::span<const Token> tokens, std::size_t vocab) {
  for (Token t : tokens)
    if (t >= vocab) throw Error("token out of vocabulary");
}

std::vector<Token> concat(std::span<const Token> a, std::span<const Token> b) {
  std::vector<Token> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

std::vector<LogitVec> CausalModel::evaluate_unconditional_logits(
    std::span<const Token> prefix, std::span<const Token> drafts,
    std::size_t prompt_length) const {
  std::vector<Token> blank(prefix.begin(), prefix.end());
  std::fill_n(blank.begin(), std::min(prompt_length, blank.size()), Token{0});
  return evaluate_logits(blank, drafts);
}

std::vector<ProbVec> CausalModel::evaluate_window(std::span<const Token> prefix,
                                                  std::span<const Token> drafts) const {
  std::vector<ProbVec> out;
  for (const LogitVec& l : evaluate_logits(prefix, drafts)) out.push_back(softmax(l));
  return out;
}

// ---------------------------------------------------------------------------
// TabularModel

TabularModel build_tabular(VocabSpec vocab, std::size_t max_len, std::uint64_t seed,
                           double concentration) {
  if (max_len == 0) throw Error("tabular model needs max_len >= 1");
  std::size_t rows = 0;
  std::size_t level = 1;
  for (std::size_t k = 0; k < max_len; ++k) {
    rows += level;
    if (rows > kOracleLimit) throw Error("oracle size");
    level *= vocab.size;
  }
  TabularModel m;
  m.vocab_ = vocab.size;
  m.max_len_ = max_len;
  m.row_count_ = rows;
  m.concentration_ = concentration;
  m.logits_.resize(rows * vocab.size);

  std::size_t row = 0;
  level = 1;
  for (std::size_t len = 0; len < max_len; ++len) {
    for (std::size_t code = 0; code < level; ++code, ++row) {
      for (std::size_t c = 0; c < vocab.size; ++c)
        m.logits_[row * vocab.size + c] = concentration * exponential_score(prf(seed, row, len, c));
    }
    level *= vocab.size;
  }
  return m;
}

std::size_t TabularModel::row_index(std::span<const Token> prefix) const {
  if (prefix.size() >= max_len_) throw Error("sequence exceeds model horizon");
  std::size_t offset = 0;
  std::size_t level = 1;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    offset += level;
    level *= vocab_;
  }
  std::size_t code = 0;
  for (Token t : prefix) code = code * vocab_ + t;
  return offset + code;
}

LogitVec TabularModel::row_logits(std::span<const Token> prefix) const {
  check_tokens(prefix, vocab_);
  auto first = logits_.begin() + static_cast<std::ptrdiff_t>(row_index(prefix) * vocab_);
  return LogitVec(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(vocab_)));
}

ProbVec TabularModel::row(std::span<const Token> prefix) const {
  return softmax(row_logits(prefix));
}

std::vector<LogitVec> TabularModel::evaluate_logits(std::span<const Token> prefix,
                                                    std::span<const Token> drafts) const {
  check_tokens(prefix, vocab_);
  check_tokens(drafts, vocab_);
  const std::size_t n = prefix.size();
  if (n >= max_len_ || n + drafts.size() > max_len_) throw Error("sequence exceeds model horizon");

  // Walk the row index incrementally: offset(len) + code(prefix).
  std::size_t offset = 0;
  std::size_t level = 1;
  std::size_t code = 0;
  for (std::size_t k = 0; k < n; ++k) {
    offset += level;
    level *= vocab_;
    code = code * vocab_ + prefix[k];
  }

  std::vector<LogitVec> out;
  out.reserve(drafts.size() + 1);
  for (std::size_t k = 0; k <= drafts.size() && n + k < max_len_; ++k) {
    if (k > 0) {
      offset += level;
      level *= vocab_;
      code = code * vocab_ + drafts[k - 1];
    }
    auto first = logits_.begin() + static_cast<std::ptrdiff_t>((offset + code) * vocab_);
    out.emplace_back(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(vocab_)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// HashModel

HashModel::HashModel(VocabSpec vocab, std::size_t order, std::uint64_t seed, double concentration)
    : vocab_(vocab.size), order_(order), seed_(seed), concentration_(concentration) {}

LogitVec HashModel::logits_at(std::span<const Token> sequence, std::size_t position) const {
  std::uint64_t context = 0;
  for (std::size_t j = 1; j <= order_; ++j) {
    std::uint64_t tok = position >= j ? std::uint64_t{sequence[position - j]} + 1 : 0;
    context = mix64(context ^ tok);
  }
  std::vector<double> out(vocab_);
  for (std::size_t c = 0; c < vocab_; ++c)
    out[c] = concentration_ * exponential_score(prf(seed_, context, position, c));
  return LogitVec(std::move(out));
}

std::vector<LogitVec> HashModel::evaluate_logits(std::span<const Token> prefix,
                                                 std::span<const Token> drafts) const {
  check_tokens(prefix, vocab_);
  check_tokens(drafts, vocab_);
  const std::vector<Token> seq = concat(prefix, drafts);
  std::vector<LogitVec> out;
  out.reserve(drafts.size() + 1);
  for (std::size_t k = 0; k <= drafts.size(); ++k) out.push_back(logits_at(seq, prefix.size() + k));
  return out;
}

// ---------------------------------------------------------------------------
// LocalityModel

LocalityModel::LocalityModel(GridSpec grid, double lambda, HashModel noise)
    : grid_(grid), lambda_(lambda), noise_(std::move(noise)) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("lambda must lie in [0, 1]");
}

ProbVec LocalityModel::law_at(std::span<const Token> sequence, std::size_t position) const {
  ProbVec law = softmax(noise_.logits_at(sequence, position));
  if (!grid_.contains(position) || lambda_ == 0.0) return law;
  const Neighbors nb = grid_neighbors(position, grid_);
  if (!nb.left && !nb.above) return law;

  for (double& x : law.values) x *= 1.0 - lambda_;
  if (nb.left && nb.above) {
    law[sequence[*nb.left]] += lambda_ / 2.0;
    law[sequence[*nb.above]] += lambda_ / 2.0;
  } else {
    law[sequence[nb.left ? *nb.left : *nb.above]] += lambda_;
  }
  return law;
}

std::vector<LogitVec> LocalityModel::evaluate_logits(std::span<const Token> prefix,
                                                     std::span<const Token> drafts) const {
  check_tokens(prefix, vocab_size());
  check_tokens(drafts, vocab_size());
  const std::vector<Token> seq = concat(prefix, drafts);
  std::vector<LogitVec> out;
  out.reserve(drafts.size() + 1);
  for (std::size_t k = 0; k <= drafts.size(); ++k) {
    const std::size_t pos = prefix.size() + k;
    const bool mixed = lambda_ > 0.0 && grid_.contains(pos) &&
                       (grid_.row(pos) > 0 || grid_.col(pos) > 0);
    out.push_back(mixed ? log_probs(law_at(seq, pos)) : noise_.logits_at(seq, pos));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampler chain

void validate_sampler(const SamplerConfig& cfg, std::size_t vocab) {
  if (!(cfg.temperature > 0.0)) throw Error("temperature must be positive");
  if (cfg.top_k && (*cfg.top_k == 0 || *cfg.top_k > vocab)) throw Error("top_k must lie in [1, V]");
  if (cfg.cfg_weight && !(*cfg.cfg_weight >= 0.0)) throw Error("cfg_weight must be non-negative");
}

LogitVec apply_cfg(const LogitVec& cond, const LogitVec& uncond, double weight) {
  if (cond.size() != uncond.size()) throw Error("cfg logits differ in length");
  // weight*cond + (1-weight)*uncond == uncond + weight*(cond - uncond); this
  // form keeps the weight 0 and 1 cases exact.
  std::vector<double> out(cond.size());
  for (std::size_t i = 0; i < cond.size(); ++i) {
    if (cond[i] == kNegInf || uncond[i] == kNegInf)
      out[i] = kNegInf;
    else
      out[i] = weight * cond[i] + (1.0 - weight) * uncond[i];
  }
  return LogitVec(std::move(out));
}

ProbVec apply_sampler(const LogitVec& logits, const SamplerConfig& cfg) {
  return apply_sampler(logits, nullptr, cfg);
}

ProbVec apply_sampler(const LogitVec& cond, const LogitVec* uncond, const SamplerConfig& cfg) {
  validate_sampler(cfg, cond.size());
  auto temper = [&](const LogitVec& in) {
    LogitVec out = in;
    if (cfg.temperature != 1.0)
      for (double& x : out.values) x /= cfg.temperature;
    return out;
  };

  LogitVec work = temper(cond);
  if (cfg.cfg_weight) {
    if (uncond == nullptr) throw Error("cfg enabled without an unconditional evaluation");
    work = apply_cfg(work, temper(*uncond), *cfg.cfg_weight);
  }

  if (cfg.top_k && *cfg.top_k < work.size()) {
    std::vector<std::size_t> order(work.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return work[a] > work[b]; });
    for (std::size_t r = *cfg.top_k; r < order.size(); ++r) work[order[r]] = kNegInf;
  }
  return softmax(work);
}

std::vector<ProbVec> target_laws(const CausalModel& model, std::span<const Token> prefix,
                                 std::span<const Token> drafts, const SamplerConfig& sampler,
                                 std::size_t prompt_length) {
  const std::vector<LogitVec> cond = model.evaluate_logits(prefix, drafts);
  std::vector<ProbVec> out;
  out.reserve(cond.size());
  if (sampler.cfg_weight) {
    const std::vector<LogitVec> uncond =
        model.evaluate_unconditional_logits(prefix, drafts, prompt_length);
    for (std::size_t k = 0; k < cond.size(); ++k) out.push_back(apply_sampler(cond[k], &uncond[k], sampler));
  } else {
    for (const LogitVec& l : cond) out.push_back(apply_sampler(l, sampler));
  }
  return out;
}

// ---------------------------------------------------------------------------
// ModelSpec

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::tabular: return "tabular";
    case ModelKind::hash: return "hash";
    case ModelKind::locality: return "locality";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "tabular") return ModelKind::tabular;
  if (name == "hash") return ModelKind::hash;
  if (name == "locality") return ModelKind::locality;
  throw Error("unknown model kind '" + name + "'");
}

GridSpec grid_for(const ModelSpec& spec, std::size_t prompt_length) {
  if (spec.grid_width == 0 || spec.grid_height == 0) throw Error("grid dimensions must be positive");
  return GridSpec{spec.grid_width, spec.grid_height, prompt_length};
}

std::unique_ptr<CausalModel> make_model(const ModelSpec& spec, std::size_t prompt_length) {
  const VocabSpec vocab(spec.vocab);
  switch (spec.kind) {
    case ModelKind::tabular:
      return std::make_unique<TabularModel>(build_tabular(vocab, spec.max_len, spec.seed, spec.concentration));
    case ModelKind::hash:
      return std::make_unique<HashModel>(vocab, spec.order, spec.seed, spec.concentration);
    case ModelKind::locality:
      return std::make_unique<LocalityModel>(grid_for(spec, prompt_length), spec.lambda,
                                             HashModel(vocab, spec.order, spec.seed, spec.concentration));
  }
  throw Error("unknown model kind");
}

}  // namespace sjd
