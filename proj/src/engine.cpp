#include "pirate/engine.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <set>

#include "pirate/commands.hpp"
#include "pirate/errors.hpp"
#include "pirate/text.hpp"

namespace pirate {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto nl = s.find('\n', pos);
    if (nl == std::string_view::npos) nl = s.size();
    auto line = s.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

std::string regex_escape(std::string_view s) {
  static constexpr std::string_view special = R"(\^$.|?*+()[]{}-/)";
  std::string out;
  for (char c : s) {
    if (special.find(c) != std::string_view::npos) out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

// Counts lines that match `re` at their start and leave a nonempty remainder.
std::size_t count_matches(const std::vector<std::string_view>& lines, const std::regex& re) {
  std::size_t n = 0;
  for (auto line : lines) {
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_search(line.begin(), line.end(), m, re, std::regex_constants::match_continuous) &&
        !text::trim(line.substr(static_cast<std::size_t>(m.length(0)))).empty())
      ++n;
  }
  return n;
}

}  // namespace

RunMode RunMode::parse(std::string_view s) {
  s = text::trim(s);
  if (s == "unbounded") return RunMode{false, 0};
  if (s == "bounded") return RunMode{true, 300};
  if (s.starts_with("bounded:")) {
    auto digits = s.substr(8);
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && n > 0) return RunMode{true, n};
  }
  throw ContractViolation("mode must be 'bounded:N' (N > 0) or 'unbounded', got '" + std::string(s) + "'");
}

std::string RunMode::to_string() const { return bounded ? "bounded:" + std::to_string(max_attacks) : "unbounded"; }

void validate(const EngineConfig& c) {
  if (c.beta <= 0) throw ContractViolation("engine.beta must be a positive integer");
  if (!(c.alpha1 > 0.0 && c.alpha1 <= 1.0)) throw ContractViolation("engine.alpha1 must be in (0, 1]");
  if (!(c.alpha2 > 0.0 && c.alpha2 <= 1.0)) throw ContractViolation("engine.alpha2 must be in (0, 1]");
  if (c.n < 1) throw ContractViolation("engine.n must be >= 1");
  if (text::trim(c.initial_anchor).empty()) throw ContractViolation("engine.initial_anchor must be nonempty");
  if (text::trim(c.bootstrap_query).empty()) throw ContractViolation("engine.bootstrap_query must be nonempty");
  for (const auto& cmd : c.command_pool)
    if (text::trim(cmd).empty()) throw ContractViolation("engine.command_pool holds an empty command");
  if (c.exhausted_step_penalty < 0.0) throw ContractViolation("engine.exhausted_step_penalty must be >= 0");
  if (c.mode.bounded && c.mode.max_attacks == 0) throw ContractViolation("engine.mode: bounded budget must be > 0");
}

const std::vector<std::string>& command_pool_of(const EngineConfig& config) {
  return config.command_pool.empty() ? default_command_pool() : config.command_pool;
}

std::vector<std::string> ParsingRules::parse(std::string_view response) const {
  const std::regex re(pattern, std::regex::ECMAScript | std::regex::optimize);
  std::vector<std::string> out;
  for (auto line : split_lines(response)) {
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_search(line.begin(), line.end(), m, re, std::regex_constants::match_continuous)) continue;
    auto rest = text::trim(line.substr(static_cast<std::size_t>(m.length(0))));
    if (!rest.empty()) out.emplace_back(rest);
  }
  return out;
}

nlohmann::json to_json(const ParsingRules& r) {
  return {{"pattern", r.pattern}, {"label", r.label}, {"estimated_chunks", r.estimated_chunks}};
}

ParsingRules parsing_rules_from_json(const nlohmann::json& j) {
  return ParsingRules{j.at("pattern").get<std::string>(), j.value("label", std::string()),
                      j.value("estimated_chunks", std::size_t{0})};
}

std::optional<ParsingRules> infer_parsing_rules(std::string_view response) {
  const auto lines = split_lines(response);

  struct Candidate {
    std::string pattern;
    std::string label;
  };
  std::vector<Candidate> candidates;

  // "<Label> <number>:" prefixes, one candidate per distinct label.
  static const std::regex labelled(R"(^([A-Za-z][A-Za-z]*(?: [A-Za-z]+)?) \d+\s*[:.)])");
  std::set<std::string> labels;
  for (auto line : lines) {
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_search(line.begin(), line.end(), m, labelled, std::regex_constants::match_continuous)) {
      const std::string label = m[1].str();
      if (labels.insert(label).second) {
        const char sep = line[static_cast<std::size_t>(m.length(0)) - 1];
        const std::string sep_re = sep == ':' ? ":" : sep == '.' ? "\\." : "\\)";
        candidates.push_back({"^" + regex_escape(label) + R"( \d+\s*)" + sep_re + R"(\s*)",
                              label + " \\d+" + std::string(1, sep)});
      }
    }
  }
  candidates.push_back({R"(^\d+[.)]\s+)", "numbered list"});
  candidates.push_back({"^(?:-|\\*|\xE2\x80\xA2)\\s+", "bullet list"});

  std::optional<ParsingRules> best;
  for (const auto& c : candidates) {
    const std::size_t n = count_matches(lines, std::regex(c.pattern, std::regex::ECMAScript));
    if (n > 0 && (!best || n > best->estimated_chunks)) best = ParsingRules{c.pattern, c.label, n};
  }
  return best;
}

nlohmann::json to_json(const BootstrapResult& b) {
  return {{"rules", to_json(b.rules)}, {"command_id", b.command_id}, {"queries_sent", b.queries_sent},
          {"query", b.query},          {"response", b.response},     {"chunks", b.chunks}};
}

BootstrapResult bootstrap_result_from_json(const nlohmann::json& j) {
  BootstrapResult b;
  b.rules = parsing_rules_from_json(j.at("rules"));
  b.command_id = j.at("command_id").get<int>();
  b.queries_sent = j.at("queries_sent").get<std::size_t>();
  b.query = j.value("query", std::string());
  b.response = j.value("response", std::string());
  b.chunks = j.at("chunks").get<std::vector<std::string>>();
  return b;
}

BootstrapResult bootstrap(Target& target, const EngineConfig& config) {
  const auto& pool = command_pool_of(config);
  BootstrapResult out;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    out.query = inject(config.bootstrap_query, pool[i]);
    out.response = target.query(out.query);
    ++out.queries_sent;
    if (auto rules = infer_parsing_rules(out.response)) {
      out.rules = std::move(*rules);
      out.command_id = static_cast<int>(i + 1);
      out.chunks = out.rules.parse(out.response);
      return out;
    }
  }
  throw BootstrapError("no injection command produced a parseable response to the bootstrap query");
}

std::vector<std::size_t> sample_anchors(const AnchorLedger& ledger, std::size_t n, Rng& rng) {
  if (n < 1) throw ContractViolation("sample_anchors: n must be >= 1");
  const auto live = ledger.live_indices();
  if (live.empty()) throw ContractViolation("sample_anchors: no anchor has positive relevance");
  std::vector<double> scores;
  scores.reserve(live.size());
  for (auto i : live) scores.push_back(ledger.relevance(i));
  const auto probs = softmax(scores);
  std::vector<std::size_t> picked;
  for (std::size_t draw = 0; draw < n; ++draw) {
    const std::size_t idx = live[rng.categorical(probs)];
    if (std::find(picked.begin(), picked.end(), idx) == picked.end()) picked.push_back(idx);
  }
  return picked;
}

std::string inject(std::string_view base_query, std::string_view command) {
  if (text::trim(base_query).empty()) throw ContractViolation("inject: empty base query");
  if (text::trim(command).empty()) throw ContractViolation("inject: empty command");
  std::string out(base_query);
  out += '\n';
  out += command;
  return out;
}

std::vector<double> compute_penalties(std::span<const Embedding> duplicates, const AnchorLedger& ledger) {
  if (duplicates.empty()) throw ContractViolation("compute_penalties: no duplicate chunks");
  if (ledger.empty()) throw ContractViolation("compute_penalties: empty anchor ledger");
  const auto anchors = ledger.embeddings();
  std::vector<double> gamma(anchors.size(), 0.0);
  std::vector<double> sims(anchors.size());
  for (const auto& dup : duplicates) {
    for (std::size_t i = 0; i < anchors.size(); ++i) sims[i] = cosine_sim(dup, anchors[i]);
    const auto v = softmax(sims);
    for (std::size_t i = 0; i < gamma.size(); ++i) gamma[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(duplicates.size());
  for (double& g : gamma) g *= inv;
  return gamma;
}

RelevanceUpdate update_relevances(AnchorLedger& ledger, std::vector<Anchor> new_anchors,
                                  std::span<const std::size_t> hits, std::span<const double> penalties,
                                  double alpha2) {
  RelevanceUpdate out;
  out.seeded_relevance = ledger.max_relevance();
  for (auto i : hits) {
    if (i >= ledger.size() || i >= penalties.size())
      throw ContractViolation("update_relevances: hit index outside the penalty vector");
    if (out.applied.contains(i)) continue;
    out.applied.emplace(i, penalties[i]);
    ledger.penalize(i, penalties[i]);
  }
  for (auto& a : new_anchors) {
    const std::size_t before = ledger.size();
    if (ledger.try_insert(std::move(a), out.seeded_relevance, alpha2)) out.added.push_back(before);
  }
  return out;
}

nlohmann::json to_json(const AttackStepRecord& r) {
  nlohmann::json attempts = nlohmann::json::array();
  for (const auto& a : r.attempts) attempts.push_back({{"command_id", a.command_id}, {"chunks", a.chunks}});
  nlohmann::json penalties = nlohmann::json::object();
  for (const auto& [k, v] : r.penalties) penalties[k] = v;
  return {
      {"step", r.step},
      {"sampled_anchors", r.sampled_anchors},
      {"base_query", r.base_query},
      {"base_query_fallback", r.base_query_fallback},
      {"command_id", r.command_id},
      {"poisoned_query", r.poisoned_query},
      {"raw_response", r.raw_response},
      {"attempts", std::move(attempts)},
      {"parsed_chunks", r.parsed_chunks},
      {"fresh_chunks", r.fresh_chunks},
      {"duplicate_chunks", r.duplicate_chunks},
      {"new_anchors", r.new_anchors},
      {"penalties", std::move(penalties)},
      {"penalty_sum", r.penalty_sum},
      {"relevance", {{"max", r.relevance_max}, {"count_zero", r.relevance_zero}, {"count_total", r.relevance_total}}},
  };
}

AttackStepRecord attack_step_from_json(const nlohmann::json& j) {
  AttackStepRecord r;
  r.step = j.at("step").get<std::size_t>();
  r.sampled_anchors = j.at("sampled_anchors").get<std::vector<std::string>>();
  r.base_query = j.at("base_query").get<std::string>();
  r.base_query_fallback = j.value("base_query_fallback", false);
  r.command_id = j.at("command_id").get<int>();
  r.poisoned_query = j.at("poisoned_query").get<std::string>();
  r.raw_response = j.at("raw_response").get<std::string>();
  for (const auto& a : j.at("attempts"))
    r.attempts.push_back({a.at("command_id").get<int>(), a.at("chunks").get<std::size_t>()});
  r.parsed_chunks = j.at("parsed_chunks").get<std::vector<std::string>>();
  r.fresh_chunks = j.at("fresh_chunks").get<std::vector<std::string>>();
  r.duplicate_chunks = j.at("duplicate_chunks").get<std::vector<std::string>>();
  r.new_anchors = j.at("new_anchors").get<std::vector<std::string>>();
  for (const auto& [k, v] : j.at("penalties").items()) r.penalties[k] = v.get<double>();
  r.penalty_sum = j.value("penalty_sum", 0.0);
  const auto& rel = j.at("relevance");
  r.relevance_max = rel.at("max").get<double>();
  r.relevance_zero = rel.at("count_zero").get<std::size_t>();
  r.relevance_total = rel.at("count_total").get<std::size_t>();
  return r;
}

namespace {

std::string query_with_retry(Target& target, const std::string& q) {
  try {
    return target.query(q);
  } catch (const TransportError& e) {
    spdlog::warn("target transport error, retrying once: {}", e.what());
    return target.query(q);
  }
}

}  // namespace

Harvest harvest(std::string_view base_query, Target& target, const ParsingRules& rules,
                std::span<const std::string> command_pool, StolenKnowledgeBase& stolen, Embedder& embedder,
                double alpha1, std::size_t step) {
  Harvest h;
  for (std::size_t i = 0; i < command_pool.size(); ++i) {
    h.poisoned_query = inject(base_query, command_pool[i]);
    h.raw_response = query_with_retry(target, h.poisoned_query);
    h.parsed = rules.parse(h.raw_response);
    h.attempts.push_back({static_cast<int>(i + 1), h.parsed.size()});
    if (!h.parsed.empty()) {
      h.command_id = static_cast<int>(i + 1);
      break;
    }
  }
  if (h.parsed.empty()) return h;

  auto embeddings = embedder.embed_batch(h.parsed);
  for (std::size_t j = 0; j < h.parsed.size(); ++j) {
    Chunk c{"s" + std::to_string(step) + "-" + std::to_string(j + 1), h.parsed[j], ChunkSource::Stolen, step};
    if (stolen.try_insert(std::move(c), embeddings[j], alpha1)) {
      h.fresh.push_back(h.parsed[j]);
    } else {
      h.duplicates.push_back(h.parsed[j]);
      h.duplicate_embeddings.push_back(std::move(embeddings[j]));
    }
  }
  return h;
}

void absorb_bootstrap(const BootstrapResult& boot, StolenKnowledgeBase& stolen, Embedder& embedder, double alpha1) {
  if (boot.chunks.empty()) return;
  auto embeddings = embedder.embed_batch(boot.chunks);
  for (std::size_t j = 0; j < boot.chunks.size(); ++j) {
    stolen.try_insert(Chunk{"s0-" + std::to_string(j + 1), boot.chunks[j], ChunkSource::Stolen, 0},
                      std::move(embeddings[j]), alpha1);
  }
}

PirateEngine::PirateEngine(EngineConfig config, Embedder& attacker_embedder, AttackerLlm& attacker_llm,
                           Target& target, ParsingRules rules)
    : config_(std::move(config)),
      embedder_(attacker_embedder),
      llm_(attacker_llm),
      target_(target),
      rules_(std::move(rules)),
      rng_(config_.seed) {
  validate(config_);
  ledger_.try_insert(make_anchor(config_.initial_anchor, embedder_.embed(config_.initial_anchor), 0),
                     static_cast<double>(config_.beta), config_.alpha2);
}

void PirateEngine::absorb(const BootstrapResult& boot) { absorb_bootstrap(boot, stolen_, embedder_, config_.alpha1); }

bool PirateEngine::should_stop() const {
  if (!(ledger_.max_relevance() > 0.0)) return true;
  return config_.mode.bounded && step_ >= config_.mode.max_attacks;
}

AttackStepRecord PirateEngine::attack_once() {
  if (should_stop()) throw ContractViolation("attack_once called after the stop condition was met");
  AttackStepRecord rec;
  rec.step = ++step_;

  const auto t0 = Clock::now();
  const auto sampled = sample_anchors(ledger_, config_.n, rng_);
  for (auto i : sampled) rec.sampled_anchors.push_back(ledger_.anchor(i).text);

  try {
    rec.base_query = llm_.generate_base_query(rec.sampled_anchors);
  } catch (const GenerationError&) {
    try {
      rec.base_query = llm_.generate_base_query(rec.sampled_anchors);
    } catch (const GenerationError&) {
      rec.base_query = text::join(rec.sampled_anchors, " ");
      rec.base_query_fallback = true;
    }
  }
  rec.gen_time_seconds = carried_seconds_ + seconds_since(t0);
  carried_seconds_ = 0.0;

  const auto& pool = command_pool_of(config_);
  Harvest h = harvest(rec.base_query, target_, rules_, pool, stolen_, embedder_, config_.alpha1, step_);
  rec.command_id = h.command_id;
  rec.poisoned_query = std::move(h.poisoned_query);
  rec.raw_response = std::move(h.raw_response);
  rec.attempts = std::move(h.attempts);
  rec.parsed_chunks = h.parsed;
  rec.fresh_chunks = h.fresh;
  rec.duplicate_chunks = h.duplicates;

  const auto t1 = Clock::now();
  if (h.parsed.empty()) {
    if (config_.exhausted_step_penalty > 0.0) {
      for (auto i : sampled) {
        rec.penalties[ledger_.anchor(i).text] = config_.exhausted_step_penalty;
        ledger_.penalize(i, config_.exhausted_step_penalty);
      }
    }
  } else {
    std::vector<Anchor> new_anchors;
    if (!h.fresh.empty()) {
      for (const auto& kw : llm_.extract_anchors(h.fresh)) {
        if (text::trim(kw).empty()) continue;
        new_anchors.push_back(make_anchor(kw, embedder_.embed(kw), step_));
      }
    }
    std::vector<double> gamma;
    std::vector<std::size_t> hits;
    if (!h.duplicates.empty()) {
      gamma = compute_penalties(h.duplicate_embeddings, ledger_);
      for (double g : gamma) rec.penalty_sum += g;
      for (const auto& kw : llm_.extract_anchors(h.duplicates)) {
        if (text::trim(kw).empty()) continue;
        if (auto idx = ledger_.match(embedder_.embed(kw), config_.alpha2)) hits.push_back(*idx);
      }
      if (config_.penalize_sampled_anchors) hits.insert(hits.end(), sampled.begin(), sampled.end());
    }
    const auto update = update_relevances(ledger_, std::move(new_anchors), hits, gamma, config_.alpha2);
    if (!update.added.empty() && !(update.seeded_relevance > 0.0)) {
      warnings_.push_back("step " + std::to_string(step_) + ": new anchors entered with zero relevance");
      spdlog::warn("{}", warnings_.back());
    }
    for (auto i : update.added) rec.new_anchors.push_back(ledger_.anchor(i).text);
    for (const auto& [i, g] : update.applied) rec.penalties[ledger_.anchor(i).text] = g;
  }

  rec.relevance_max = ledger_.max_relevance();
  rec.relevance_zero = ledger_.dead_count();
  rec.relevance_total = ledger_.size();
  if (config_.gs_includes_extraction) carried_seconds_ = seconds_since(t1);
  return rec;
}

RunResult PirateEngine::run(const std::function<void(const AttackStepRecord&)>& on_step) {
  RunResult out;
  while (!should_stop()) {
    out.log.push_back(attack_once());
    if (on_step) on_step(out.log.back());
  }
  out.stolen = stolen_;
  out.ledger = ledger_;
  out.warnings = warnings_;
  return out;
}

}  // namespace pirate
