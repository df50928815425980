#include "pirate/embedding.hpp"

#include <future>
#include <semaphore>

#include "pirate/errors.hpp"
#include "pirate/text.hpp"

namespace pirate {

void validate(const EmbedderSpec& spec) {
  if (spec.dim < 8) throw ContractViolation("embedder dim must be >= 8");
  if (spec.kind == EmbedderKind::Remote) {
    if (spec.endpoint.empty()) throw ContractViolation("remote embedder needs an endpoint");
    if (spec.model_name.empty()) throw ContractViolation("remote embedder needs a model_name");
    if (spec.batch_size == 0 || spec.max_in_flight == 0)
      throw ContractViolation("remote embedder batch_size and max_in_flight must be positive");
  }
}

std::vector<Embedding> Embedder::embed_batch(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      out.push_back(embed(texts[i]));
    } catch (const ContractViolation& e) {
      throw ContractViolation("batch element " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

NgramEmbedder::NgramEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 8) throw ContractViolation("embedder dim must be >= 8");
}

Embedding NgramEmbedder::embed(std::string_view raw) {
  const auto tokens = text::words(raw);
  if (tokens.empty()) throw ContractViolation("cannot embed blank text");

  std::vector<double> acc(dim_, 0.0);
  auto add = [&](std::string_view feature) {
    const std::uint64_t h = text::hash64(feature, seed_);
    const double sign = (h >> 63) ? -1.0 : 1.0;
    acc[static_cast<std::size_t>((h & 0x7fffffffffffffffULL) % dim_)] += sign;
  };

  std::string feature;
  for (const auto& tok : tokens) {
    feature.assign("w:").append(tok);
    add(feature);
    auto cps = text::codepoints(tok);
    cps.insert(cps.begin(), "<");
    cps.emplace_back(">");
    for (std::size_t i = 0; i + 2 < cps.size(); ++i) {
      feature.assign("c:").append(cps[i]).append(cps[i + 1]).append(cps[i + 2]);
      add(feature);
    }
  }

  bool zero = true;
  for (double v : acc) zero = zero && v == 0.0;
  if (zero) {
    // Every feature cancelled out; fall back to a bucket keyed by the whole text.
    const std::string whole = text::join(tokens, " ");
    acc[static_cast<std::size_t>(text::hash64(whole, seed_ ^ 0x5bd1e995ULL) % dim_)] = 1.0;
  }
  return Embedding::normalized(std::move(acc));
}

RemoteEmbedder::RemoteEmbedder(EmbedderSpec spec)
    : spec_((validate(spec), std::move(spec))),
      client_(spec_.endpoint, HttpOptions{spec_.timeout_s, spec_.retries, 0.05, {}}) {}

std::vector<Embedding> RemoteEmbedder::request(std::span<const std::string> texts) const {
  nlohmann::json body{{"model", spec_.model_name}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
  const nlohmann::json resp = client_.post("/v1/embeddings", body);
  if (!resp.contains("data") || !resp["data"].is_array() || resp["data"].size() != texts.size())
    throw ProtocolError("embeddings response: 'data' missing or of wrong length");
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& item : resp["data"]) {
    if (!item.contains("embedding") || !item["embedding"].is_array())
      throw ProtocolError("embeddings response: data[i].embedding missing");
    std::vector<double> values;
    values.reserve(item["embedding"].size());
    for (const auto& v : item["embedding"]) {
      if (!v.is_number()) throw ProtocolError("embeddings response: non-numeric component");
      values.push_back(v.get<double>());
    }
    if (values.size() != spec_.dim)
      throw ProtocolError("embeddings response: expected dim " + std::to_string(spec_.dim) + ", got " +
                          std::to_string(values.size()));
    try {
      out.push_back(Embedding::normalized(std::move(values)));
    } catch (const ContractViolation&) {
      throw ProtocolError("embeddings response: zero vector");
    }
  }
  return out;
}

Embedding RemoteEmbedder::embed(std::string_view text) {
  if (text::trim(text).empty()) throw ContractViolation("cannot embed blank text");
  const std::string one(text::trim(text));
  return request(std::span<const std::string>(&one, 1)).front();
}

std::vector<Embedding> RemoteEmbedder::embed_batch(std::span<const std::string> texts) {
  std::vector<std::string> trimmed;
  trimmed.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (text::trim(texts[i]).empty())
      throw ContractViolation("batch element " + std::to_string(i) + ": cannot embed blank text");
    trimmed.emplace_back(text::trim(texts[i]));
  }

  std::counting_semaphore<> slots(static_cast<std::ptrdiff_t>(spec_.max_in_flight));
  std::vector<std::future<std::vector<Embedding>>> parts;
  for (std::size_t start = 0; start < trimmed.size(); start += spec_.batch_size) {
    const std::size_t len = std::min(spec_.batch_size, trimmed.size() - start);
    slots.acquire();
    parts.push_back(std::async(std::launch::async, [this, &trimmed, &slots, start, len] {
      struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
      } release{slots};
      return request(std::span<const std::string>(trimmed).subspan(start, len));
    }));
  }
  std::vector<Embedding> out;
  out.reserve(trimmed.size());
  for (auto& part : parts) {
    for (auto& e : part.get()) out.push_back(std::move(e));
  }
  return out;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec) {
  validate(spec);
  if (spec.kind == EmbedderKind::Remote) return std::make_unique<RemoteEmbedder>(spec);
  return std::make_unique<NgramEmbedder>(spec.dim, spec.seed);
}

}  // namespace pirate
