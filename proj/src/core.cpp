#include "pirate/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pirate/errors.hpp"
#include "pirate/text.hpp"

namespace pirate {

Chunk make_chunk(std::string id, std::string text, ChunkSource source, std::size_t step) {
  if (text::trim(text).empty()) throw ContractViolation("chunk text is empty");
  return Chunk{std::move(id), std::move(text), source, step};
}

Embedding Embedding::normalized(std::vector<double> values) {
  double sq = 0.0;
  for (double v : values) sq += v * v;
  if (!(sq > 0.0) || !std::isfinite(sq)) throw ContractViolation("cannot normalize a zero or non-finite vector");
  const double inv = 1.0 / std::sqrt(sq);
  for (double& v : values) v *= inv;
  return Embedding(std::move(values));
}

double Embedding::norm() const {
  double sq = 0.0;
  for (double v : values_) sq += v * v;
  return std::sqrt(sq);
}

double dot(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) throw ContractViolation("embedding dimension mismatch");
  auto av = a.values();
  auto bv = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  return s;
}

double cosine_sim(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) throw ContractViolation("embedding dimension mismatch");
  auto av = a.values();
  auto bv = b.values();
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    ab += av[i] * bv[i];
    aa += av[i] * av[i];
    bb += bv[i] * bv[i];
  }
  if (!(aa > 0.0) || !(bb > 0.0)) throw ContractViolation("cosine similarity of a zero vector");
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) throw ContractViolation("softmax of an empty list");
  double hi = -std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (!std::isfinite(s)) throw ContractViolation("softmax input is not finite");
    hi = std::max(hi, s);
  }
  std::vector<double> out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - hi);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

Nearest nearest(const Embedding& query, std::span<const Embedding> store) {
  if (store.empty()) throw EmptyStoreError("nearest() on an empty store");
  Nearest best{0, -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < store.size(); ++i) {
    const double s = cosine_sim(query, store[i]);
    if (s > best.similarity) best = {i, s};
  }
  return best;
}

bool is_duplicate(const Embedding& candidate, std::span<const Embedding> store, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ContractViolation("duplicate threshold must be in (0, 1]");
  if (store.empty()) return false;
  return nearest(candidate, store).similarity >= threshold;
}

Anchor make_anchor(std::string_view raw, Embedding embedding, std::size_t created_step) {
  std::string folded = text::normalize(raw);
  if (folded.empty()) throw ContractViolation("anchor text is empty");
  return Anchor{std::move(folded), std::move(embedding), created_step};
}

std::optional<std::size_t> AnchorLedger::match(const Embedding& e, double threshold) const {
  if (anchors_.empty()) return std::nullopt;
  auto hit = nearest(e, embeddings_);
  if (hit.similarity >= threshold) return hit.index;
  return std::nullopt;
}

bool AnchorLedger::try_insert(Anchor anchor, double relevance, double threshold) {
  if (relevance < 0.0) throw ContractViolation("relevance must be nonnegative");
  if (match(anchor.embedding, threshold)) return false;
  embeddings_.push_back(anchor.embedding);
  anchors_.push_back(std::move(anchor));
  relevances_.push_back(relevance);
  return true;
}

void AnchorLedger::penalize(std::size_t i, double gamma) {
  double& r = relevances_.at(i);
  r = std::max(0.0, r - gamma);
}

double AnchorLedger::max_relevance() const noexcept {
  double hi = 0.0;
  for (double r : relevances_) hi = std::max(hi, r);
  return hi;
}

std::size_t AnchorLedger::dead_count() const noexcept {
  return static_cast<std::size_t>(std::count(relevances_.begin(), relevances_.end(), 0.0));
}

std::vector<std::size_t> AnchorLedger::live_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < relevances_.size(); ++i)
    if (relevances_[i] > 0.0) out.push_back(i);
  return out;
}

bool StolenKnowledgeBase::try_insert(Chunk chunk, Embedding embedding, double threshold) {
  if (contains_duplicate(embedding, threshold)) return false;
  chunk.source = ChunkSource::Stolen;
  chunks_.push_back(std::move(chunk));
  embeddings_.push_back(std::move(embedding));
  return true;
}

}  // namespace pirate
