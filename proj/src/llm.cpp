#include "pirate/llm.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "pirate/errors.hpp"
#include "pirate/text.hpp"

namespace pirate {
namespace detail {
extern const char* const kStopwordsData;
}

namespace {

constexpr std::string_view kBaseQueryPrompt =
    "Write one short question, in a single paragraph, that a curious user could ask about the "
    "following topics: {anchors}. Mention every topic. Reply with the question only.";

constexpr std::string_view kAnchorsPrompt =
    "Read the text below and list up to three short keywords or topics that best describe it. "
    "Write one keyword per line and nothing else.\n\nText: {text}";

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + needle.size())) ++n;
  return n;
}

std::string single_paragraph(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : text::trim(s)) {
    if (c == '\n' || c == '\r' || c == '\t' || c == ' ') {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace

PromptTemplate::PromptTemplate(PromptKind kind, std::string body) : kind_(kind), body_(std::move(body)) {
  const auto own = placeholder(kind_);
  const auto other = placeholder(kind_ == PromptKind::BaseQueryFromAnchors ? PromptKind::AnchorsFromText
                                                                           : PromptKind::BaseQueryFromAnchors);
  if (count_occurrences(body_, own) != 1 || count_occurrences(body_, other) != 0)
    throw ContractViolation("prompt template must contain " + std::string(own) + " exactly once");
}

PromptTemplate PromptTemplate::defaults(PromptKind kind) {
  return PromptTemplate(kind, std::string(kind == PromptKind::BaseQueryFromAnchors ? kBaseQueryPrompt : kAnchorsPrompt));
}

std::string_view PromptTemplate::placeholder(PromptKind kind) {
  return kind == PromptKind::BaseQueryFromAnchors ? "{anchors}" : "{text}";
}

std::string PromptTemplate::render(std::string_view value) const {
  std::string out = body_;
  const auto ph = placeholder(kind_);
  out.replace(out.find(ph), ph.size(), value);
  return out;
}

void validate(const LlmSpec& spec) {
  if (spec.max_anchors_per_chunk == 0) throw ContractViolation("max_anchors_per_chunk must be positive");
  if (spec.kind == LlmKind::Remote) {
    if (spec.endpoint.empty()) throw ContractViolation("remote llm needs an endpoint");
    if (spec.model_name.empty()) throw ContractViolation("remote llm needs a model_name");
    if (spec.temperature < 0.0 || spec.temperature > 2.0) throw ContractViolation("temperature must be in [0, 2]");
    if (spec.max_tokens <= 0) throw ContractViolation("max_tokens must be positive");
  }
}

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words = [] {
    std::unordered_set<std::string> out;
    std::istringstream in(detail::kStopwordsData);
    std::string line;
    while (std::getline(in, line)) {
      auto t = text::trim(line);
      if (t.empty() || t.front() == '#') continue;
      for (auto& tok : text::content_tokens(t)) out.insert(std::move(tok));
    }
    return out;
  }();
  return words;
}

void check_messages(std::span<const ChatMessage> messages) {
  if (messages.empty()) throw ContractViolation("chat needs at least one message");
  for (const auto& m : messages) {
    if (m.role != "system" && m.role != "user" && m.role != "assistant")
      throw ContractViolation("unknown chat role: " + m.role);
  }
}

ChatClient::ChatClient(std::string endpoint, std::string model, double temperature, int max_tokens, HttpOptions http)
    : model_(std::move(model)), temperature_(temperature), max_tokens_(max_tokens), http_(std::move(endpoint), http) {}

std::string ChatClient::chat(std::span<const ChatMessage> messages) const {
  check_messages(messages);
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  nlohmann::json body{
      {"model", model_}, {"messages", std::move(msgs)}, {"temperature", temperature_}, {"max_tokens", max_tokens_}};
  const nlohmann::json resp = http_.post("/v1/chat/completions", body);
  try {
    const auto& content = resp.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw ProtocolError("choices[0].message.content is not a string");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("chat response lacks choices[0].message.content");
  }
}

std::string topic_phrase(std::span<const std::string> anchors) {
  std::string out;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (i > 0) out += (i + 1 == anchors.size()) ? " and " : ", ";
    out += anchors[i];
  }
  return out;
}

std::vector<std::string> parse_keyword_list(std::string_view output, std::size_t limit) {
  std::vector<std::string> out;
  std::string item;
  auto flush = [&] {
    std::string_view v = text::trim(item);
    // list markers: "-", "*", "\u2022", "1.", "2)"
    if (v.starts_with("-") || v.starts_with("*")) {
      v = text::trim(v.substr(1));
    } else if (v.starts_with("\xE2\x80\xA2")) {
      v = text::trim(v.substr(3));
    } else {
      std::size_t digits = 0;
      while (digits < v.size() && std::isdigit(static_cast<unsigned char>(v[digits]))) ++digits;
      if (digits > 0 && digits < v.size() && (v[digits] == '.' || v[digits] == ')')) v = text::trim(v.substr(digits + 1));
    }
    std::string kw = text::normalize(v);
    while (!kw.empty() && (kw.back() == '.' || kw.back() == ',' || kw.back() == ';')) kw.pop_back();
    item.clear();
    if (text::codepoint_count(kw) < 2 || !text::has_letter(kw)) return;
    if (std::find(out.begin(), out.end(), kw) == out.end()) out.push_back(std::move(kw));
  };
  for (char c : output) {
    if (c == '\n' || c == ',' || c == ';') {
      flush();
    } else {
      item.push_back(c);
    }
  }
  flush();
  if (out.size() > limit) out.resize(limit);
  return out;
}

MockLlm::MockLlm(std::uint64_t seed, std::size_t max_anchors_per_chunk)
    : seed_(seed), max_per_chunk_(max_anchors_per_chunk) {
  if (max_per_chunk_ == 0) throw ContractViolation("max_anchors_per_chunk must be positive");
}

const std::vector<std::string>& MockLlm::question_frames() {
  static const std::vector<std::string> frames{
      "What can you tell me about {}?",
      "I would like to know more about {}. What do you know?",
      "Could you explain what is known regarding {}?",
      "Please describe the main facts about {}.",
      "Which details are available on {}?",
      "What should someone understand about {}?",
  };
  return frames;
}

std::uint64_t MockLlm::tiebreak(std::string_view term) const { return text::hash64(term, seed_ ^ 0xA5A5A5A5ULL); }

std::string MockLlm::chat(std::span<const ChatMessage> messages) {
  check_messages(messages);
  std::string joined;
  for (const auto& m : messages) joined += m.role + ":" + m.content + "\n";
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(text::hash64(joined, seed_)));
  return std::string("mock-") + buf + ": " + single_paragraph(messages.back().content);
}

std::string MockLlm::generate_base_query(std::span<const std::string> anchors) {
  if (anchors.empty()) throw ContractViolation("generate_base_query needs at least one anchor");
  const std::string topics = topic_phrase(anchors);
  const auto& frames = question_frames();
  const std::string& frame = frames[text::hash64(topics, seed_) % frames.size()];
  std::string out = frame;
  out.replace(out.find("{}"), 2, topics);
  return out;
}

std::vector<std::string> MockLlm::extract_anchors(std::span<const std::string> chunks) {
  const auto& stop = stopwords();
  std::vector<std::string> out;
  for (const auto& chunk : chunks) {
    if (text::trim(chunk).empty()) throw ContractViolation("extract_anchors: empty chunk text");
    std::map<std::string, std::size_t> tf;
    for (auto& tok : text::content_tokens(chunk)) {
      if (stop.contains(tok) || text::codepoint_count(tok) < 2 || !text::has_letter(tok)) continue;
      ++tf[std::move(tok)];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(tf.begin(), tf.end());
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      const auto ka = tiebreak(a.first), kb = tiebreak(b.first);
      if (ka != kb) return ka < kb;
      return a.first < b.first;
    });
    for (std::size_t i = 0; i < ranked.size() && i < max_per_chunk_; ++i) {
      if (std::find(out.begin(), out.end(), ranked[i].first) == out.end()) out.push_back(ranked[i].first);
    }
  }
  return out;
}

RemoteLlm::RemoteLlm(const LlmSpec& spec)
    : client_(spec.endpoint, spec.model_name, spec.temperature, spec.max_tokens,
              HttpOptions{spec.timeout_s, spec.retries, 0.05, {}}),
      base_query_(spec.base_query_template.empty()
                      ? PromptTemplate::defaults(PromptKind::BaseQueryFromAnchors)
                      : PromptTemplate(PromptKind::BaseQueryFromAnchors, spec.base_query_template)),
      anchors_(spec.anchors_template.empty() ? PromptTemplate::defaults(PromptKind::AnchorsFromText)
                                             : PromptTemplate(PromptKind::AnchorsFromText, spec.anchors_template)),
      max_per_chunk_(spec.max_anchors_per_chunk) {
  validate(spec);
}

std::string RemoteLlm::chat(std::span<const ChatMessage> messages) { return client_.chat(messages); }

std::string RemoteLlm::generate_base_query(std::span<const std::string> anchors) {
  if (anchors.empty()) throw ContractViolation("generate_base_query needs at least one anchor");
  const ChatMessage msg{"user", base_query_.render(topic_phrase(anchors))};
  std::string out = single_paragraph(client_.chat(std::span(&msg, 1)));
  if (out.empty()) throw GenerationError("attacker model returned an empty query");
  return out;
}

std::vector<std::string> RemoteLlm::extract_anchors(std::span<const std::string> chunks) {
  std::vector<std::string> out;
  for (const auto& chunk : chunks) {
    if (text::trim(chunk).empty()) throw ContractViolation("extract_anchors: empty chunk text");
    const ChatMessage msg{"user", anchors_.render(chunk)};
    auto keywords = parse_keyword_list(client_.chat(std::span(&msg, 1)), max_per_chunk_);
    if (keywords.empty()) spdlog::warn("extract_anchors: no keywords parsed from model output");
    for (auto& kw : keywords)
      if (std::find(out.begin(), out.end(), kw) == out.end()) out.push_back(std::move(kw));
  }
  return out;
}

std::unique_ptr<AttackerLlm> make_llm(const LlmSpec& spec) {
  validate(spec);
  if (spec.kind == LlmKind::Remote) return std::make_unique<RemoteLlm>(spec);
  return std::make_unique<MockLlm>(spec.seed, spec.max_anchors_per_chunk);
}

}  // namespace pirate
