#pragma once

// Foundational value types shared by every decoder: tokens, probability and
// logit vectors, raster grid geometry, sequence state and decode traces.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sjd {

using Token = std::uint32_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kProbTolerance = 1e-9;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct VocabSpec {
  std::size_t size = 2;

  explicit VocabSpec(std::size_t v);
  bool contains(Token t) const { return t < size; }
};

/// Categorical law over the vocabulary. Entries are non-negative and sum to
/// one within kProbTolerance.
struct ProbVec {
  std::vector<double> values;

  ProbVec() = default;
  explicit ProbVec(std::vector<double> v) : values(std::move(v)) {}

  static ProbVec uniform(std::size_t vocab);
  static ProbVec point_mass(std::size_t vocab, Token t);

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  bool operator==(const ProbVec&) const = default;

  bool is_valid(double tol = kProbTolerance) const;
  // Throws Error("invalid probability vector") when is_valid fails.
  void validate() const;
};

/// Pre-softmax scores. Entries are finite unless masked to -inf.
struct LogitVec {
  std::vector<double> values;

  LogitVec() = default;
  explicit LogitVec(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  bool operator==(const LogitVec&) const = default;
};

// Divides a non-negative vector by its sum. Throws Error("empty support")
// when the sum is zero.
ProbVec normalize(std::vector<double> weights);

ProbVec softmax(const LogitVec& logits);

// Elementwise log; zero probabilities become -inf.
LogitVec log_probs(const ProbVec& p);

// Inverse-CDF over index order for a uniform draw u in [0, 1).
Token sample_with_uniform(const ProbVec& p, double u);

// Largest entry, smallest index on ties.
Token argmax_token(const ProbVec& p);

/// Raster layout of the image region. Sequence indices [origin,
/// origin + width*height) are image positions.
struct GridSpec {
  std::size_t width = 1;
  std::size_t height = 1;
  std::size_t origin = 0;

  std::size_t cells() const { return width * height; }
  bool contains(std::size_t index) const {
    return index >= origin && index < origin + cells();
  }
  std::size_t row(std::size_t index) const { return (index - origin) / width; }
  std::size_t col(std::size_t index) const { return (index - origin) % width; }
};

struct Neighbors {
  std::optional<std::size_t> left;
  std::optional<std::size_t> above;
};

// Throws Error("not an image position") outside the grid region.
Neighbors grid_neighbors(std::size_t index, const GridSpec& grid);

/// One draft position in the Jacobi window: the token and the exact law it
/// was drawn from.
struct WindowSlot {
  Token token = 0;
  ProbVec q;
};

/// Accepted prefix plus the target law each accepted position was fixed
/// under. archive[i] is empty for prompt tokens or when archiving is off.
struct SequenceState {
  std::vector<Token> prefix;
  GridSpec grid;
  std::vector<std::optional<ProbVec>> archive;
  bool archiving = true;

  SequenceState() = default;
  SequenceState(std::vector<Token> prompt, GridSpec g);

  void append(Token t, const ProbVec* law);
  const ProbVec* archived(std::size_t index) const;
};

struct IterationRecord {
  std::size_t iteration_index = 0;
  std::size_t window_start = 0;
  std::size_t accepted_count = 0;
  bool resampled = false;
  std::vector<Token> slot_tokens_before;
  std::vector<Token> slot_tokens_after;
};

struct DecodeTrace {
  std::vector<IterationRecord> iterations;
  std::size_t tokens_generated = 0;
  std::size_t steps = 0;
};

}  // namespace sjd
