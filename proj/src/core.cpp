#include "sjd/core.hpp"

#include <algorithm>
#include <cmath>

namespace sjd {

VocabSpec::VocabSpec(std::size_t v) : size(v) {
  if (v < 2) throw Error("vocabulary size must be at least 2");
}

ProbVec ProbVec::uniform(std::size_t vocab) {
  return ProbVec(std::vector<double>(vocab, 1.0 / static_cast<double>(vocab)));
}

ProbVec ProbVec::point_mass(std::size_t vocab, Token t) {
  std::vector<double> v(vocab, 0.0);
  v.at(t) = 1.0;
  return ProbVec(std::move(v));
}

bool ProbVec::is_valid(double tol) const {
  if (values.empty()) return false;
  double sum = 0.0;
  for (double x : values) {
    if (!(x >= 0.0) || !std::isfinite(x)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

void ProbVec::validate() const {
  if (!is_valid()) throw Error("invalid probability vector");
}

ProbVec normalize(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) sum += w;
  if (!(sum > 0.0)) throw Error("empty support");
  for (double& w : weights) w /= sum;
  return ProbVec(std::move(weights));
}

ProbVec softmax(const LogitVec& logits) {
  double peak = kNegInf;
  for (double l : logits.values) peak = std::max(peak, l);
  if (peak == kNegInf) throw Error("empty support");

  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    double l = logits[i];
    out[i] = l == kNegInf ? 0.0 : std::exp(l - peak);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return ProbVec(std::move(out));
}

LogitVec log_probs(const ProbVec& p) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] > 0.0 ? std::log(p[i]) : kNegInf;
  return LogitVec(std::move(out));
}

Token sample_with_uniform(const ProbVec& p, double u) {
  double cdf = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    last_positive = i;
    cdf += p[i];
    if (u < cdf) return static_cast<Token>(i);
  }
  // u landed in the rounding gap above the accumulated mass.
  return static_cast<Token>(last_positive);
}

Token argmax_token(const ProbVec& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = i;
  return static_cast<Token>(best);
}

Neighbors grid_neighbors(std::size_t index, const GridSpec& grid) {
  if (!grid.contains(index)) throw Error("not an image position");
  Neighbors n;
  if (grid.col(index) > 0) n.left = index - 1;
  if (grid.row(index) > 0) n.above = index - grid.width;
  return n;
}

SequenceState::SequenceState(std::vector<Token> prompt, GridSpec g)
    : prefix(std::move(prompt)), grid(g), archive(prefix.size()) {}

void SequenceState::append(Token t, const ProbVec* law) {
  prefix.push_back(t);
  if (archiving && law != nullptr)
    archive.emplace_back(*law);
  else
    archive.emplace_back(std::nullopt);
}

const ProbVec* SequenceState::archived(std::size_t index) const {
  if (index >= archive.size() || !archive[index]) return nullptr;
  return &*archive[index];
}

}  // namespace sjd
