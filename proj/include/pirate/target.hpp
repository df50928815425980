#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pirate/core.hpp"
#include "pirate/embedding.hpp"
#include "pirate/llm.hpp"
#include "pirate/random.hpp"

namespace pirate {

// How the mock generator reacts to an injection command.
struct ComplianceModel {
  std::map<int, double> obey_prob;  // command id (1-based) -> probability
  double noise_rate = 0.0;          // per-token substitution probability
  std::size_t max_chunks_emitted = 10;
};

// Defaults shaped after the observed per-command behavior: command 1 is by far
// the most effective.
ComplianceModel default_compliance();

// Returns true to reject a query before retrieval.
using GuardHook = std::function<bool(std::string_view query)>;

GuardHook marker_guard(std::string marker);

// Agent prompt with {Context} and {Query} slots.
struct AgentTemplate {
  std::string name;
  std::string body;
};

AgentTemplate agent_template(std::string_view preset);  // "agent-a" | "agent-b" | "agent-c"

struct AgentConfig {
  std::size_t top_k = 5;
  double temperature = 0.8;
  std::filesystem::path kb_path;
  EmbedderSpec embedder = ngram_spec(1001);
  AgentTemplate prompt = agent_template("agent-b");
  ComplianceModel compliance = default_compliance();
  GuardHook guard;
  std::string guard_marker;  // config-level source of `guard`, when set
  std::uint64_t seed = 7;
  std::vector<std::string> command_pool;  // empty: default pool
  std::string admin_token;
};

// Throws ContractViolation naming the offending field.
void validate(const AgentConfig& config);

struct RetrievalEvent {
  std::size_t step = 0;
  std::uint64_t query_hash = 0;
  std::vector<std::string> retrieved_ids;
};

struct RetrievalLog {
  std::vector<RetrievalEvent> events;
};

// {kb_size, events:[{step, retrieved_ids}]}
nlohmann::json instrumentation_json(const RetrievalLog& log, std::size_t kb_size);
RetrievalLog retrieval_log_from_json(const nlohmann::json& j, std::size_t* kb_size = nullptr);

// JSONL with {id, text} per line. Throws LoadError naming the line.
std::vector<Chunk> load_knowledge_base(const std::filesystem::path& path);
std::vector<Chunk> parse_knowledge_base(std::istream& in);
void write_knowledge_base(const std::filesystem::path& path, const std::vector<Chunk>& chunks);

inline constexpr std::string_view kRefusal = "I'm sorry, but I can't help with that request.";
inline constexpr std::string_view kCannedAnswer = "Based on the available context, here is a short answer to your question.";

// The victim RAG agent: top-k retrieval over its private knowledge base, a
// prompt assembled from the retrieved context, and a mock generator that may
// obey an injection command by repeating the context as "Case N: " lines.
// Not thread-safe; TargetServer serializes access.
class TargetAgent {
 public:
  TargetAgent(AgentConfig config, std::vector<Chunk> kb);
  static TargetAgent from_config(AgentConfig config);

  std::vector<Chunk> retrieve_topk(std::string_view query);
  std::string answer(std::string_view query);

  // 0 when the query carries no known command suffix.
  int detect_command(std::string_view query) const;

  const RetrievalLog& retrieval_log() const noexcept { return log_; }
  std::size_t kb_size() const noexcept { return kb_.size(); }
  const std::vector<Chunk>& knowledge_base() const noexcept { return kb_; }
  const std::string& last_prompt() const noexcept { return last_prompt_; }
  const AgentConfig& config() const noexcept { return config_; }
  double effective_noise() const noexcept;

 private:
  std::string noisy(const std::string& text);

  AgentConfig config_;
  std::vector<Chunk> kb_;
  std::unique_ptr<Embedder> embedder_;
  std::vector<Embedding> store_;
  RetrievalLog log_;
  Rng rng_;
  std::string last_prompt_;
};

// What an attacker can do with a target: send a query, read the text reply.
class Target {
 public:
  virtual ~Target() = default;
  virtual std::string query(std::string_view q) = 0;
};

class InProcessTarget final : public Target {
 public:
  explicit InProcessTarget(TargetAgent& agent) : agent_(agent) {}
  std::string query(std::string_view q) override { return agent_.answer(q); }

 private:
  TargetAgent& agent_;
};

// Talks to a served agent over the chat-completions wire format.
class HttpTarget final : public Target {
 public:
  HttpTarget(std::string endpoint, HttpOptions http = {}, std::string model = "target");
  std::string query(std::string_view q) override;

 private:
  ChatClient client_;
};

// Fetches GET {endpoint}/instrumentation with the admin token.
nlohmann::json fetch_instrumentation(const std::string& endpoint, const std::string& admin_token);

class StartupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// HTTP front for a TargetAgent: POST /v1/chat/completions maps the last user
// message to answer(); GET /instrumentation (bearer admin token) returns the
// retrieval log. Requests are handled one at a time.
class TargetServer {
 public:
  TargetServer(TargetAgent& agent, std::string host = "127.0.0.1");
  ~TargetServer();
  TargetServer(const TargetServer&) = delete;
  TargetServer& operator=(const TargetServer&) = delete;

  // Binds (port 0 picks a free one) and starts serving in the background.
  // Throws StartupError when the port cannot be bound.
  void start(int port);
  void stop();
  // Blocks until stop() is called from elsewhere.
  void wait();
  int port() const noexcept { return port_; }
  std::string endpoint() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string host_;
  int port_ = 0;
};

}  // namespace pirate
