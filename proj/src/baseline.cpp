#include "pirate/baseline.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "pirate/commands.hpp"
#include "pirate/errors.hpp"
#include "pirate/text.hpp"

namespace pirate {
namespace detail {
extern const char* const kQueryPoolData;
}

QueryPool::QueryPool(std::vector<std::string> queries) : queries_(std::move(queries)) {
  if (queries_.empty()) throw ContractViolation("query pool is empty");
  for (const auto& q : queries_)
    if (text::trim(q).empty()) throw ContractViolation("query pool holds a blank query");
}

namespace {

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

}  // namespace

QueryPool QueryPool::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(0, "cannot open query pool " + path.string());
  return QueryPool(read_lines(in));
}

QueryPool QueryPool::builtin() {
  std::istringstream in(detail::kQueryPoolData);
  return QueryPool(read_lines(in));
}

const std::string& QueryPool::next() {
  const std::string& q = queries_[cursor_];
  cursor_ = (cursor_ + 1) % queries_.size();
  return q;
}

QueryPool QueryPool::take(std::size_t n) const {
  if (n == 0 || n > queries_.size()) throw ContractViolation("QueryPool::take: n out of range");
  return QueryPool(std::vector<std::string>(queries_.begin(), queries_.begin() + static_cast<std::ptrdiff_t>(n)));
}

RunResult run_static(QueryPool& pool, Target& target, const ParsingRules& rules, const StaticConfig& config,
                     Embedder& attacker_embedder, const BootstrapResult* boot,
                     const std::function<void(const AttackStepRecord&)>& on_step) {
  const auto& commands = config.command_pool.empty() ? default_command_pool() : config.command_pool;
  RunResult out;
  if (boot) absorb_bootstrap(*boot, out.stolen, attacker_embedder, config.alpha1);
  for (std::size_t step = 1; step <= config.max_attacks; ++step) {
    AttackStepRecord rec;
    rec.step = step;
    const auto t0 = std::chrono::steady_clock::now();
    rec.base_query = pool.next();
    rec.gen_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Harvest h = harvest(rec.base_query, target, rules, commands, out.stolen, attacker_embedder, config.alpha1, step);
    rec.command_id = h.command_id;
    rec.poisoned_query = std::move(h.poisoned_query);
    rec.raw_response = std::move(h.raw_response);
    rec.attempts = std::move(h.attempts);
    rec.parsed_chunks = std::move(h.parsed);
    rec.fresh_chunks = std::move(h.fresh);
    rec.duplicate_chunks = std::move(h.duplicates);
    out.log.push_back(std::move(rec));
    if (on_step) on_step(out.log.back());
  }
  return out;
}

}  // namespace pirate
