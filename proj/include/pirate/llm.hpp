#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "pirate/core.hpp"
#include "pirate/http.hpp"

namespace pirate {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

enum class PromptKind { BaseQueryFromAnchors, AnchorsFromText };

// Prompt body with exactly one placeholder: {anchors} or {text}.
class PromptTemplate {
 public:
  // Throws ContractViolation unless body holds the kind's placeholder exactly once.
  PromptTemplate(PromptKind kind, std::string body);

  static PromptTemplate defaults(PromptKind kind);
  static std::string_view placeholder(PromptKind kind);

  PromptKind kind() const noexcept { return kind_; }
  const std::string& body() const noexcept { return body_; }
  std::string render(std::string_view value) const;

 private:
  PromptKind kind_;
  std::string body_;
};

enum class LlmKind { Mock, Remote };

struct LlmSpec {
  LlmKind kind = LlmKind::Mock;
  std::uint64_t seed = 0;
  std::string endpoint;
  std::string model_name;
  double temperature = 0.8;
  int max_tokens = 256;
  double timeout_s = 60.0;
  int retries = 2;
  std::size_t max_anchors_per_chunk = 3;
  std::string base_query_template;  // empty: built-in wording
  std::string anchors_template;     // empty: built-in wording
};

void validate(const LlmSpec& spec);

// Fixed, versioned English stopword list (punctuation-stripped, case-folded).
const std::unordered_set<std::string>& stopwords();
constexpr std::string_view kStopwordListVersion = "en-v1";

// OpenAI-compatible chat transport: POST {endpoint}/v1/chat/completions,
// reads choices[0].message.content.
class ChatClient {
 public:
  ChatClient(std::string endpoint, std::string model, double temperature, int max_tokens, HttpOptions http);

  // Throws ContractViolation on empty messages or unknown roles,
  // TransportError after retries, ProtocolError on a missing content field.
  std::string chat(std::span<const ChatMessage> messages) const;

 private:
  std::string model_;
  double temperature_;
  int max_tokens_;
  JsonHttpClient http_;
};

void check_messages(std::span<const ChatMessage> messages);

// The attacker-side generative model.
class AttackerLlm {
 public:
  virtual ~AttackerLlm() = default;
  virtual std::string chat(std::span<const ChatMessage> messages) = 0;

  // Nonempty single-paragraph text about the anchors. Throws GenerationError
  // when the model produces nothing usable.
  virtual std::string generate_base_query(std::span<const std::string> anchors) = 0;

  // Short case-folded keywords, at most max_anchors_per_chunk per chunk.
  virtual std::vector<std::string> extract_anchors(std::span<const std::string> chunks) = 0;
};

// Deterministic stand-in: question frames chosen by a seeded hash, and
// term-frequency keywords after stopword removal.
class MockLlm final : public AttackerLlm {
 public:
  explicit MockLlm(std::uint64_t seed, std::size_t max_anchors_per_chunk = 3);

  std::string chat(std::span<const ChatMessage> messages) override;
  std::string generate_base_query(std::span<const std::string> anchors) override;
  std::vector<std::string> extract_anchors(std::span<const std::string> chunks) override;

  // Tie-break key for equal term frequencies (lower sorts first).
  std::uint64_t tiebreak(std::string_view term) const;

  static const std::vector<std::string>& question_frames();

 private:
  std::uint64_t seed_;
  std::size_t max_per_chunk_;
};

class RemoteLlm final : public AttackerLlm {
 public:
  explicit RemoteLlm(const LlmSpec& spec);

  std::string chat(std::span<const ChatMessage> messages) override;
  std::string generate_base_query(std::span<const std::string> anchors) override;
  std::vector<std::string> extract_anchors(std::span<const std::string> chunks) override;

 private:
  ChatClient client_;
  PromptTemplate base_query_;
  PromptTemplate anchors_;
  std::size_t max_per_chunk_;
};

std::unique_ptr<AttackerLlm> make_llm(const LlmSpec& spec);

// Splits free-form model output into keywords: one per line or comma, list
// markers removed, case-folded; drops entries shorter than 2 code points or
// without a letter. Keeps at most `limit`.
std::vector<std::string> parse_keyword_list(std::string_view output, std::size_t limit);

// "a", "a and b", "a, b and c"
std::string topic_phrase(std::span<const std::string> anchors);

}  // namespace pirate
