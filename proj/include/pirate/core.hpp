#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pirate {

enum class ChunkSource { GroundTruth, Stolen };

struct Chunk {
  std::string id;
  std::string text;
  ChunkSource source = ChunkSource::GroundTruth;
  std::size_t step = 0;
};

// Throws ContractViolation when the text is blank.
Chunk make_chunk(std::string id, std::string text, ChunkSource source, std::size_t step = 0);

class Embedding {
 public:
  Embedding() = default;
  // Stores values as given. Use normalized() for embedder output.
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}

  // L2-normalized copy of values; throws ContractViolation on a zero vector.
  static Embedding normalized(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double norm() const;

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<double> values_;
};

double dot(const Embedding& a, const Embedding& b);

// dot(a,b)/(|a||b|). Throws ContractViolation on dimension mismatch or zero vectors.
double cosine_sim(const Embedding& a, const Embedding& b);

// Max-subtracted softmax. Throws ContractViolation on empty or non-finite input.
std::vector<double> softmax(std::span<const double> scores);

struct Nearest {
  std::size_t index = 0;
  double similarity = 0.0;
};

// Linear scan; ties go to the lowest index. Throws EmptyStoreError on an empty store.
Nearest nearest(const Embedding& query, std::span<const Embedding> store);

bool is_duplicate(const Embedding& candidate, std::span<const Embedding> store, double threshold);

struct Anchor {
  std::string text;
  Embedding embedding;
  std::size_t created_step = 0;
};

// Trims and case-folds the text; throws ContractViolation when it ends up empty.
Anchor make_anchor(std::string_view text, Embedding embedding, std::size_t created_step);

// Anchors paired with nonnegative relevance scores. Insertion refuses any
// anchor whose similarity to an existing one reaches the dedup threshold.
class AnchorLedger {
 public:
  std::size_t size() const noexcept { return anchors_.size(); }
  bool empty() const noexcept { return anchors_.empty(); }

  const std::vector<Anchor>& anchors() const noexcept { return anchors_; }
  std::span<const double> relevances() const noexcept { return relevances_; }
  std::span<const Embedding> embeddings() const noexcept { return embeddings_; }
  const Anchor& anchor(std::size_t i) const { return anchors_.at(i); }
  double relevance(std::size_t i) const { return relevances_.at(i); }

  // Index of the closest anchor when its similarity is >= threshold.
  std::optional<std::size_t> match(const Embedding& e, double threshold) const;

  // Returns false (and leaves the ledger unchanged) for a near-duplicate.
  bool try_insert(Anchor anchor, double relevance, double threshold);

  // r <- max(0, r - gamma)
  void penalize(std::size_t i, double gamma);

  double max_relevance() const noexcept;
  std::size_t dead_count() const noexcept;
  std::vector<std::size_t> live_indices() const;

 private:
  std::vector<Anchor> anchors_;
  std::vector<Embedding> embeddings_;
  std::vector<double> relevances_;
};

class StolenKnowledgeBase {
 public:
  std::size_t size() const noexcept { return chunks_.size(); }
  const std::vector<Chunk>& chunks() const noexcept { return chunks_; }
  std::span<const Embedding> embeddings() const noexcept { return embeddings_; }

  bool contains_duplicate(const Embedding& e, double threshold) const {
    return is_duplicate(e, embeddings_, threshold);
  }

  // Returns false for a near-duplicate of something already stored.
  bool try_insert(Chunk chunk, Embedding embedding, double threshold);

 private:
  std::vector<Chunk> chunks_;
  std::vector<Embedding> embeddings_;
};

}  // namespace pirate
