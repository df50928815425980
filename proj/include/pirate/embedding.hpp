#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pirate/core.hpp"
#include "pirate/http.hpp"

namespace pirate {

enum class EmbedderKind { DeterministicNgram, Remote };

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::DeterministicNgram;
  std::size_t dim = 256;
  std::uint64_t seed = 0;
  // remote only
  std::string endpoint;
  std::string model_name;
  double timeout_s = 30.0;
  int retries = 2;
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;
};

inline EmbedderSpec ngram_spec(std::uint64_t seed, std::size_t dim = 256) {
  EmbedderSpec spec;
  spec.seed = seed;
  spec.dim = dim;
  return spec;
}

// Throws ContractViolation for dim < 8 or an incomplete remote spec.
void validate(const EmbedderSpec& spec);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;

  // Unit-norm embedding of the text. Blank text is a ContractViolation.
  virtual Embedding embed(std::string_view text) = 0;

  // Elementwise embed(), order preserved. A failing element fails the whole
  // batch with a message naming its index.
  virtual std::vector<Embedding> embed_batch(std::span<const std::string> texts);
};

// Signed feature hashing of word unigrams and character 3-grams (words padded
// with boundary markers) over normalized text, then L2 normalization. A pure
// function of (text, seed, dim).
class NgramEmbedder final : public Embedder {
 public:
  NgramEmbedder(std::size_t dim, std::uint64_t seed);
  std::size_t dim() const override { return dim_; }
  Embedding embed(std::string_view text) override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// OpenAI-compatible embeddings client: POST {endpoint}/v1/embeddings.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(EmbedderSpec spec);
  std::size_t dim() const override { return spec_.dim; }
  Embedding embed(std::string_view text) override;
  std::vector<Embedding> embed_batch(std::span<const std::string> texts) override;

 private:
  std::vector<Embedding> request(std::span<const std::string> texts) const;

  EmbedderSpec spec_;
  JsonHttpClient client_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec);

}  // namespace pirate
