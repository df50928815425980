#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pirate/engine.hpp"

namespace pirate {

// Fixed list of attack questions served round-robin.
class QueryPool {
 public:
  explicit QueryPool(std::vector<std::string> queries);

  // Plain UTF-8 text, one query per line; blank lines skipped.
  static QueryPool load(const std::filesystem::path& path);
  // Bundled synthetic general-knowledge questions.
  static QueryPool builtin();

  const std::string& next();
  std::size_t size() const noexcept { return queries_.size(); }
  std::size_t cursor() const noexcept { return cursor_; }
  const std::vector<std::string>& queries() const noexcept { return queries_; }

  // First n queries, n <= size().
  QueryPool take(std::size_t n) const;

 private:
  std::vector<std::string> queries_;
  std::size_t cursor_ = 0;
};

struct StaticConfig {
  std::vector<std::string> command_pool;  // empty: default pool
  double alpha1 = 0.95;
  std::size_t max_attacks = 300;
};

// Static-pool attacker: same harvesting and dedup as the adaptive engine,
// with base queries taken from the pool.
RunResult run_static(QueryPool& pool, Target& target, const ParsingRules& rules, const StaticConfig& config,
                     Embedder& attacker_embedder, const BootstrapResult* boot = nullptr,
                     const std::function<void(const AttackStepRecord&)>& on_step = {});

}  // namespace pirate
