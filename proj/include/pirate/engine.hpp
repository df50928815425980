#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pirate/core.hpp"
#include "pirate/embedding.hpp"
#include "pirate/llm.hpp"
#include "pirate/random.hpp"
#include "pirate/target.hpp"

namespace pirate {

struct RunMode {
  bool bounded = true;
  std::size_t max_attacks = 300;

  static RunMode parse(std::string_view s);  // "bounded:N" | "unbounded"
  std::string to_string() const;
};

struct EngineConfig {
  int beta = 1;
  double alpha1 = 0.95;
  double alpha2 = 0.8;
  std::size_t n = 3;
  std::string initial_anchor = "information";
  std::vector<std::string> command_pool;  // empty: default pool
  RunMode mode;
  std::uint64_t seed = 0;
  std::string bootstrap_query = "What information can you provide?";
  // Penalize the anchors that formed the query, alongside the anchors
  // extracted from duplicate chunks.
  bool penalize_sampled_anchors = true;
  // Penalty for each sampled anchor when every command failed; 0 disables.
  double exhausted_step_penalty = 1.0;
  // Charge step t's anchor extraction and relevance update to step t+1's query time.
  bool gs_includes_extraction = true;
};

void validate(const EngineConfig& config);
const std::vector<std::string>& command_pool_of(const EngineConfig& config);

// Line-oriented chunk extraction learned from a bootstrap response.
struct ParsingRules {
  std::string pattern;  // ECMAScript regex matched against each line's start
  std::string label;    // human-readable description, e.g. "Case \d+:"
  std::size_t estimated_chunks = 0;

  std::vector<std::string> parse(std::string_view response) const;
};

nlohmann::json to_json(const ParsingRules& rules);
ParsingRules parsing_rules_from_json(const nlohmann::json& j);

// Finds the line-prefix pattern shared by the largest number of lines.
std::optional<ParsingRules> infer_parsing_rules(std::string_view response);

struct BootstrapResult {
  ParsingRules rules;
  int command_id = 0;
  std::size_t queries_sent = 0;
  std::string query;
  std::string response;
  std::vector<std::string> chunks;
};

nlohmann::json to_json(const BootstrapResult& b);
BootstrapResult bootstrap_result_from_json(const nlohmann::json& j);

// Sends the bootstrap query with each command until a response exposes a
// parseable line structure. Throws BootstrapError when none does.
BootstrapResult bootstrap(Target& target, const EngineConfig& config);

// n independent softmax draws over anchors with positive relevance; repeats
// collapsed, first-draw order kept. Throws ContractViolation with no live anchor.
std::vector<std::size_t> sample_anchors(const AnchorLedger& ledger, std::size_t n, Rng& rng);

// base + "\n" + command. Throws ContractViolation on empty input.
std::string inject(std::string_view base_query, std::string_view command);

// gamma_i = mean over duplicates j of softmax_i(sim(dup_j, anchor_i)).
std::vector<double> compute_penalties(std::span<const Embedding> duplicates, const AnchorLedger& ledger);

struct RelevanceUpdate {
  double seeded_relevance = 0.0;  // max relevance before this update
  std::vector<std::size_t> added;  // ledger indices of inserted anchors
  std::map<std::size_t, double> applied;  // hit index -> gamma
};

// New anchors enter with the pre-update maximum relevance; each hit anchor is
// penalized once by its gamma and clamped at zero; everything else is kept.
RelevanceUpdate update_relevances(AnchorLedger& ledger, std::vector<Anchor> new_anchors,
                                  std::span<const std::size_t> hits, std::span<const double> penalties,
                                  double alpha2);

struct CommandAttempt {
  int command_id = 0;
  std::size_t chunks = 0;
};

struct AttackStepRecord {
  std::size_t step = 0;
  std::vector<std::string> sampled_anchors;
  std::string base_query;
  bool base_query_fallback = false;
  int command_id = 0;  // command that yielded chunks; 0 when the pool was exhausted
  std::string poisoned_query;
  std::string raw_response;
  std::vector<CommandAttempt> attempts;
  std::vector<std::string> parsed_chunks;
  std::vector<std::string> fresh_chunks;
  std::vector<std::string> duplicate_chunks;
  std::vector<std::string> new_anchors;
  std::map<std::string, double> penalties;  // anchor text -> gamma applied
  double penalty_sum = 0.0;  // over the whole ledger, before restriction to hit anchors
  double relevance_max = 0.0;
  std::size_t relevance_zero = 0;
  std::size_t relevance_total = 0;
  double gen_time_seconds = 0.0;  // kept out of the JSON log, see timing_json
};

nlohmann::json to_json(const AttackStepRecord& r);
AttackStepRecord attack_step_from_json(const nlohmann::json& j);

// Result of sending one base query with the command pool and sorting the
// parsed chunks into fresh and duplicate ones.
struct Harvest {
  int command_id = 0;
  std::string poisoned_query;
  std::string raw_response;
  std::vector<CommandAttempt> attempts;
  std::vector<std::string> parsed;
  std::vector<std::string> fresh;
  std::vector<std::string> duplicates;
  std::vector<Embedding> duplicate_embeddings;
};

// Shared by every attacker: inject -> query -> parse until chunks come back,
// then insert non-duplicates into the stolen knowledge base. A transport
// failure is retried once before propagating.
Harvest harvest(std::string_view base_query, Target& target, const ParsingRules& rules,
                std::span<const std::string> command_pool, StolenKnowledgeBase& stolen, Embedder& embedder,
                double alpha1, std::size_t step);

// Adds bootstrap chunks to the stolen knowledge base as step 0.
void absorb_bootstrap(const BootstrapResult& boot, StolenKnowledgeBase& stolen, Embedder& embedder, double alpha1);

struct RunResult {
  std::vector<AttackStepRecord> log;
  StolenKnowledgeBase stolen;
  AnchorLedger ledger;
  std::vector<std::string> warnings;
};

// The adaptive attack loop over anchors and relevance scores.
class PirateEngine {
 public:
  PirateEngine(EngineConfig config, Embedder& attacker_embedder, AttackerLlm& attacker_llm, Target& target,
               ParsingRules rules);

  void absorb(const BootstrapResult& boot);

  bool should_stop() const;
  AttackStepRecord attack_once();

  // Runs until the mode's budget or zero relevance everywhere. on_step sees
  // every record as it is produced.
  RunResult run(const std::function<void(const AttackStepRecord&)>& on_step = {});

  const AnchorLedger& ledger() const noexcept { return ledger_; }
  const StolenKnowledgeBase& stolen() const noexcept { return stolen_; }
  const EngineConfig& config() const noexcept { return config_; }
  std::size_t steps() const noexcept { return step_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  EngineConfig config_;
  Embedder& embedder_;
  AttackerLlm& llm_;
  Target& target_;
  ParsingRules rules_;
  AnchorLedger ledger_;
  StolenKnowledgeBase stolen_;
  Rng rng_;
  std::size_t step_ = 0;
  double carried_seconds_ = 0.0;
  std::vector<std::string> warnings_;
};

}  // namespace pirate
