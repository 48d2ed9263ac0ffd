#pragma once

// Causal model seam and the synthetic reference models, plus the sampler
// transform chain (temperature -> CFG -> top-K -> softmax).
//
// A model evaluation takes the fixed prefix and W draft tokens and returns
// W+1 logit vectors under a causal mask: output[k] is the law of the token
// at sequence index prefix.size()+k given prefix and drafts[0..k).

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sjd/core.hpp"

namespace sjd {

class CausalModel {
 public:
  virtual ~CausalModel() = default;

  virtual std::size_t vocab_size() const = 0;

  /// Longest sequence the model conditions on, or nullopt when unbounded.
  /// A bounded model drops the trailing output once prefix+drafts reaches
  /// the horizon, and throws when the input runs past it.
  virtual std::optional<std::size_t> max_length() const { return std::nullopt; }

  virtual std::vector<LogitVec> evaluate_logits(std::span<const Token> prefix,
                                                std::span<const Token> drafts) const = 0;

  /// Evaluation with the prompt region [0, prompt_length) blanked to token 0,
  /// the unconditional branch of classifier-free guidance.
  virtual std::vector<LogitVec> evaluate_unconditional_logits(
      std::span<const Token> prefix, std::span<const Token> drafts,
      std::size_t prompt_length) const;

  /// Raw (untransformed) distributions: softmax of evaluate_logits.
  std::vector<ProbVec> evaluate_window(std::span<const Token> prefix,
                                       std::span<const Token> drafts) const;
};

/// Every prefix shorter than max_len gets its own seeded distribution.
class TabularModel : public CausalModel {
 public:
  std::size_t vocab_size() const override { return vocab_; }
  std::optional<std::size_t> max_length() const override { return max_len_; }
  std::vector<LogitVec> evaluate_logits(std::span<const Token> prefix,
                                        std::span<const Token> drafts) const override;

  std::size_t rows() const { return row_count_; }
  double concentration() const { return concentration_; }
  // Logits and softmax law of the row for `prefix` (prefix.size() < max_len).
  LogitVec row_logits(std::span<const Token> prefix) const;
  ProbVec row(std::span<const Token> prefix) const;
  // Dense row index: offset(len) + base-V code of the prefix.
  std::size_t row_index(std::span<const Token> prefix) const;

 private:
  friend TabularModel build_tabular(VocabSpec vocab, std::size_t max_len, std::uint64_t seed,
                                    double concentration);
  TabularModel() = default;

  std::size_t vocab_ = 0;
  std::size_t max_len_ = 0;
  std::size_t row_count_ = 0;
  double concentration_ = 1.0;
  std::vector<double> logits_;  // row-major, rows() x vocab
};

inline constexpr std::size_t kOracleLimit = 1'000'000;
inline constexpr double kDefaultTabularConcentration = 1.0;

// Row logits are concentration * -ln(1 - u) with
// u = to_unit(prf(seed, row_index, prefix_length, category)).
// Throws Error("oracle size") when the table would exceed kOracleLimit rows.
TabularModel build_tabular(VocabSpec vocab, std::size_t max_len, std::uint64_t seed,
                           double concentration = kDefaultTabularConcentration);

/// Logits depend on (seed, last `order` context tokens, absolute position).
class HashModel : public CausalModel {
 public:
  HashModel(VocabSpec vocab, std::size_t order, std::uint64_t seed, double concentration);

  std::size_t vocab_size() const override { return vocab_; }
  std::vector<LogitVec> evaluate_logits(std::span<const Token> prefix,
                                        std::span<const Token> drafts) const override;

  // Logits at `position` given the full sequence before it.
  LogitVec logits_at(std::span<const Token> sequence, std::size_t position) const;
  std::size_t order() const { return order_; }

 private:
  std::size_t vocab_;
  std::size_t order_;
  std::uint64_t seed_;
  double concentration_;
};

/// Mixture of the left/above neighbor token and HashModel noise:
///   lambda/2 * delta(left) + lambda/2 * delta(above) + (1-lambda) * noise.
/// A missing neighbor cedes its share to the present one; with neither, the
/// law is pure noise. Outside the grid region the law is pure noise.
class LocalityModel : public CausalModel {
 public:
  LocalityModel(GridSpec grid, double lambda, HashModel noise);

  std::size_t vocab_size() const override { return noise_.vocab_size(); }
  std::vector<LogitVec> evaluate_logits(std::span<const Token> prefix,
                                        std::span<const Token> drafts) const override;

  ProbVec law_at(std::span<const Token> sequence, std::size_t position) const;
  const GridSpec& grid() const { return grid_; }
  double lambda() const { return lambda_; }

 private:
  GridSpec grid_;
  double lambda_;
  HashModel noise_;
};

struct SamplerConfig {
  double temperature = 1.0;
  std::optional<std::size_t> top_k;   // nullopt = off
  std::optional<double> cfg_weight;   // nullopt = off
};

// Throws Error on temperature <= 0, K == 0 or K > V, negative weight.
void validate_sampler(const SamplerConfig& cfg, std::size_t vocab);

LogitVec apply_cfg(const LogitVec& cond, const LogitVec& uncond, double weight);

ProbVec apply_sampler(const LogitVec& logits, const SamplerConfig& cfg);
// Full chain with an unconditional branch; uncond is ignored when CFG is off.
ProbVec apply_sampler(const LogitVec& cond, const LogitVec* uncond, const SamplerConfig& cfg);

/// Target laws for a window: model evaluation followed by the sampler chain.
/// prompt_length marks the region blanked for the unconditional branch.
std::vector<ProbVec> target_laws(const CausalModel& model, std::span<const Token> prefix,
                                 std::span<const Token> drafts, const SamplerConfig& sampler,
                                 std::size_t prompt_length);

enum class ModelKind { tabular, hash, locality };

/// Declarative model description, as read from experiment configs.
struct ModelSpec {
  ModelKind kind = ModelKind::hash;
  std::uint64_t seed = 1;
  std::size_t vocab = 32;
  std::size_t max_len = 4;            // tabular
  std::size_t order = 2;              // hash / locality noise
  double concentration = 3.0;
  double lambda = 0.9;                // locality
  std::size_t grid_width = 16;
  std::size_t grid_height = 16;
};

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

// Grid geometry for a model spec with the given prompt length.
GridSpec grid_for(const ModelSpec& spec, std::size_t prompt_length);
std::unique_ptr<CausalModel> make_model(const ModelSpec& spec, std::size_t prompt_length);

}  // namespace sjd
