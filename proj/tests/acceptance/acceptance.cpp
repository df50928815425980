// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any fails.

#include <httplib.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <optional>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "pirate/baseline.hpp"
#include "pirate/commands.hpp"
#include "pirate/config.hpp"
#include "pirate/engine.hpp"
#include "pirate/evaluation.hpp"
#include "pirate/random.hpp"
#include "pirate/run_io.hpp"
#include "pirate/target.hpp"
#include "pirate/text.hpp"

namespace fs = std::filesystem;
using namespace pirate;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failure reasons; the first few are kept for the summary line.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    pass_ = false;
    if (++failures_ <= 3) reasons_ += (reasons_.empty() ? "" : "; ") + what;
  }
  Outcome done(const std::string& detail) const {
    return {pass_, pass_ ? detail : detail + " [" + reasons_ + (failures_ > 3 ? "; ..." : "") + "]"};
  }

 private:
  bool pass_ = true;
  int failures_ = 0;
  std::string reasons_;
};

std::string fmt(double v, int precision = 1) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << v;
  return out.str();
}

double dot_plain(const Embedding& a, const Embedding& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) s += a.values()[k] * b.values()[k];
  return s;
}

// Index of the most similar stored vector when it reaches the threshold.
std::optional<std::size_t> first_match(const Embedding& e, const std::vector<Embedding>& store, double threshold) {
  std::optional<std::size_t> best;
  double best_sim = -2.0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const double s = dot_plain(e, store[i]);
    if (s > best_sim) {
      best_sim = s;
      best = i;
    }
  }
  if (best && best_sim >= threshold) return best;
  return std::nullopt;
}

AppConfig demo_config() { return load_config(fs::path(PIRATE_SOURCE_DIR) / "configs/demo.yaml"); }

// --- 1: replay ------------------------------------------------------------

Outcome replay_equivalence() {
  Check check;
  const auto t0 = Clock::now();
  AppConfig cfg = demo_config();
  cfg.attacker.engine.mode = RunMode::parse("bounded:50");
  TargetAgent agent = TargetAgent::from_config(cfg.agent);
  InProcessTarget target(agent);
  auto embedder = make_embedder(cfg.attacker.embedder);
  MockLlm llm(cfg.attacker.llm.seed, cfg.attacker.llm.max_anchors_per_chunk);
  const auto boot = bootstrap(target, cfg.attacker.engine);
  PirateEngine engine(cfg.attacker.engine, *embedder, llm, target, boot.rules);
  engine.absorb(boot);
  const RunResult run = engine.run();
  check.expect(run.log.size() == 50, "expected 50 steps, got " + std::to_string(run.log.size()));

  // Independent recomputation from the log alone.
  const auto& e = cfg.attacker.engine;
  MockLlm oracle_llm(cfg.attacker.llm.seed, cfg.attacker.llm.max_anchors_per_chunk);
  std::vector<std::string> anchor_text;
  std::vector<Embedding> anchor_vec;
  std::vector<double> rel;
  anchor_text.push_back(text::normalize(e.initial_anchor));
  anchor_vec.push_back(embedder->embed(e.initial_anchor));
  rel.push_back(e.beta);

  std::vector<std::string> kstar;
  std::vector<Embedding> kstar_vec;
  auto absorb = [&](const std::string& chunk) {
    const auto v = embedder->embed(chunk);
    if (first_match(v, kstar_vec, e.alpha1)) return false;
    kstar.push_back(chunk);
    kstar_vec.push_back(v);
    return true;
  };
  for (const auto& c : boot.chunks) absorb(c);

  for (const auto& r : run.log) {
    const std::string at = "step " + std::to_string(r.step);
    std::vector<std::size_t> sampled;
    for (const auto& s : r.sampled_anchors) {
      const auto it = std::find(anchor_text.begin(), anchor_text.end(), s);
      check.expect(it != anchor_text.end(), at + ": sampled unknown anchor");
      if (it == anchor_text.end()) return check.done("");
      const auto idx = static_cast<std::size_t>(it - anchor_text.begin());
      check.expect(rel[idx] > 0.0, at + ": sampled a dead anchor");
      sampled.push_back(idx);
    }

    std::vector<std::string> fresh, dups;
    std::vector<Embedding> dup_vecs;
    for (const auto& c : r.parsed_chunks) {
      if (absorb(c)) {
        fresh.push_back(c);
      } else {
        dups.push_back(c);
        dup_vecs.push_back(embedder->embed(c));
      }
    }
    check.expect(fresh == r.fresh_chunks && dups == r.duplicate_chunks, at + ": fresh/duplicate split differs");

    std::map<std::size_t, double> applied;
    if (r.parsed_chunks.empty()) {
      for (auto i : sampled) applied[i] = e.exhausted_step_penalty;
      for (const auto& [i, g] : applied) rel[i] = std::max(0.0, rel[i] - g);
    } else {
      // Penalties: softmax of similarities per duplicate, averaged, over the
      // ledger as it stood before this step's insertions.
      std::vector<double> gamma(rel.size(), 0.0);
      for (const auto& d : dup_vecs) {
        std::vector<double> ex(rel.size());
        double mx = -1e300, z = 0.0;
        for (std::size_t i = 0; i < rel.size(); ++i) mx = std::max(mx, dot_plain(d, anchor_vec[i]));
        for (std::size_t i = 0; i < rel.size(); ++i) z += ex[i] = std::exp(dot_plain(d, anchor_vec[i]) - mx);
        for (std::size_t i = 0; i < rel.size(); ++i) gamma[i] += ex[i] / z / static_cast<double>(dup_vecs.size());
      }
      if (!dups.empty()) {
        double sum = 0.0;
        for (double g : gamma) sum += g;
        check.expect(std::abs(sum - 1.0) < 1e-9, at + ": penalties do not sum to 1");
        check.expect(std::abs(sum - r.penalty_sum) < 1e-9, at + ": logged penalty sum differs");
        for (const auto& kw : oracle_llm.extract_anchors(dups))
          if (auto hit = first_match(embedder->embed(kw), anchor_vec, e.alpha2)) applied.emplace(*hit, gamma[*hit]);
        if (e.penalize_sampled_anchors)
          for (auto i : sampled) applied.emplace(i, gamma[i]);
      }
      const double seeded = *std::max_element(rel.begin(), rel.end());
      for (const auto& [i, g] : applied) rel[i] = std::max(0.0, rel[i] - g);
      std::vector<std::string> added;
      if (!fresh.empty()) {
        for (const auto& kw : oracle_llm.extract_anchors(fresh)) {
          const auto v = embedder->embed(kw);
          if (first_match(v, anchor_vec, e.alpha2)) continue;
          anchor_text.push_back(text::normalize(kw));
          anchor_vec.push_back(v);
          rel.push_back(seeded);
          added.push_back(anchor_text.back());
        }
      }
      check.expect(added == r.new_anchors, at + ": new anchors differ");
    }
    check.expect(applied.size() == r.penalties.size(), at + ": number of penalized anchors differs");
    for (const auto& [i, g] : applied) {
      const auto it = r.penalties.find(anchor_text[i]);
      check.expect(it != r.penalties.end() && std::abs(it->second - g) < 1e-9, at + ": penalty for " + anchor_text[i]);
    }
    check.expect(std::abs(*std::max_element(rel.begin(), rel.end()) - r.relevance_max) < 1e-9,
                 at + ": max relevance differs");
  }

  const auto& ledger = engine.ledger();
  check.expect(ledger.size() == rel.size(), "ledger size " + std::to_string(ledger.size()) + " vs " +
                                                std::to_string(rel.size()));
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(ledger.size(), rel.size()); ++i) {
    check.expect(ledger.anchor(i).text == anchor_text[i], "anchor " + std::to_string(i) + " text differs");
    worst = std::max(worst, std::abs(ledger.relevance(i) - rel[i]));
  }
  check.expect(worst <= 1e-9, "relevance mismatch " + std::to_string(worst));
  check.expect(engine.stolen().size() == kstar.size(), "stolen base size differs");
  for (std::size_t i = 0; i < std::min(kstar.size(), engine.stolen().size()); ++i)
    check.expect(engine.stolen().chunks()[i].text == kstar[i], "stolen chunk " + std::to_string(i) + " differs");
  const double elapsed = seconds_since(t0);
  check.expect(elapsed < 10.0, "took " + fmt(elapsed) + " s");
  return check.done(std::to_string(run.log.size()) + " steps, " + std::to_string(rel.size()) + " anchors, " +
                    std::to_string(kstar.size()) + " stolen chunks, max |dr| " + fmt(worst, 12) + ", " +
                    fmt(elapsed, 2) + " s");
}

// --- 2: penalty math ------------------------------------------------------

Embedding random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.uniform() * 2.0 - 1.0;
  return Embedding::normalized(std::move(v));
}

Outcome penalty_math() {
  Check check;
  Rng rng(4242);
  double worst = 0.0;
  for (int instance = 0; instance < 1000; ++instance) {
    const std::size_t dim = 4 + rng.below(29);
    const std::size_t anchors = 1 + rng.below(20), dups = 1 + rng.below(10);
    AnchorLedger ledger;
    for (std::size_t i = 0; i < anchors; ++i)
      ledger.try_insert(make_anchor("a" + std::to_string(i), random_unit(rng, dim), 0), rng.uniform(), 1.0);
    std::vector<Embedding> d;
    for (std::size_t j = 0; j < dups; ++j) d.push_back(random_unit(rng, dim));
    const auto gamma = compute_penalties(d, ledger);

    std::vector<double> expected(ledger.size(), 0.0);
    for (const auto& dup : d) {
      double z = 0.0;
      for (const auto& a : ledger.embeddings()) z += std::exp(dot_plain(dup, a));
      for (std::size_t i = 0; i < ledger.size(); ++i)
        expected[i] += std::exp(dot_plain(dup, ledger.embeddings()[i])) / z / static_cast<double>(d.size());
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < gamma.size(); ++i) {
      check.expect(gamma[i] >= 0.0 && gamma[i] <= 1.0, "gamma outside [0,1]");
      worst = std::max(worst, std::abs(gamma[i] - expected[i]));
      sum += gamma[i];
    }
    check.expect(std::abs(sum - 1.0) <= 1e-9, "sum " + fmt(sum, 12));
  }
  check.expect(worst <= 1e-9, "oracle mismatch " + std::to_string(worst));
  return check.done("1000 instances, max |gamma - oracle| " + fmt(worst, 15));
}

// --- 3: sampling ----------------------------------------------------------

Outcome sampling_distribution() {
  Check check;
  // Relevances ln 3 and ln 1 shifted by one: ln 1 = 0 would mark the second
  // anchor dead, and softmax is unchanged by a common shift.
  AnchorLedger ledger;
  ledger.try_insert(make_anchor("first", Embedding::normalized({1.0, 0.0}), 0), 1.0 + std::log(3.0), 0.9);
  ledger.try_insert(make_anchor("second", Embedding::normalized({0.0, 1.0}), 0), 1.0 + std::log(1.0), 0.9);
  Rng rng(777);
  std::size_t first = 0;
  const std::size_t draws = 10000;
  for (std::size_t i = 0; i < draws; ++i) first += sample_anchors(ledger, 1, rng).front() == 0;
  const double p0 = static_cast<double>(first) / draws, p1 = 1.0 - p0;
  check.expect(std::abs(p0 - 0.75) <= 0.02 && std::abs(p1 - 0.25) <= 0.02, "frequencies " + fmt(p0, 4));
  return check.done("10000 draws: " + fmt(p0, 4) + " / " + fmt(p1, 4) + " vs 0.75 / 0.25");
}

// --- 4 and 5: demo benchmark ----------------------------------------------

struct BenchRun {
  RunResult result;
  RunReport report;
  BootstrapResult boot;
  double seconds = 0.0;
};

BenchRun bench(const AppConfig& cfg, bool pirate, std::size_t static_pool_size = 0) {
  BenchRun out;
  const auto t0 = Clock::now();
  TargetAgent agent = TargetAgent::from_config(cfg.agent);
  InProcessTarget target(agent);
  auto embedder = make_embedder(cfg.attacker.embedder);
  out.boot = bootstrap(target, cfg.attacker.engine);
  if (pirate) {
    auto llm = make_llm(cfg.attacker.llm);
    PirateEngine engine(cfg.attacker.engine, *embedder, *llm, target, out.boot.rules);
    engine.absorb(out.boot);
    out.result = engine.run();
  } else {
    QueryPool pool = QueryPool::builtin().take(static_pool_size);
    StaticConfig sc;
    sc.alpha1 = cfg.attacker.engine.alpha1;
    sc.max_attacks = cfg.attacker.engine.mode.bounded ? cfg.attacker.engine.mode.max_attacks : pool.size();
    out.result = run_static(pool, target, out.boot.rules, sc, *embedder, &out.boot);
  }
  out.seconds = seconds_since(t0);

  RunArtifacts a;
  a.log = out.result.log;
  a.bootstrap = out.boot;
  for (const auto& c : out.result.stolen.chunks()) a.stolen.push_back(c.text);
  a.truth = agent.knowledge_base();
  a.instrumentation = Instrumentation{agent.retrieval_log(), agent.kb_size()};
  auto target_embedder = make_embedder(cfg.agent.embedder);
  out.report = build_report(a, *embedder, target_embedder.get());
  return out;
}

Outcome termination(const BenchRun& run) {
  Check check;
  check.expect(run.seconds < 300.0, "took " + fmt(run.seconds) + " s");
  const auto& ledger = run.result.ledger;
  check.expect(ledger.max_relevance() == 0.0, "max relevance " + fmt(ledger.max_relevance(), 6));
  check.expect(ledger.dead_count() == ledger.size(), "live anchors remain");
  std::size_t prev = 0;
  for (const auto& r : run.result.log) {
    check.expect(r.relevance_zero >= prev, "dead count fell at step " + std::to_string(r.step));
    prev = r.relevance_zero;
  }
  return check.done(std::to_string(run.result.log.size()) + " attacks in " + fmt(run.seconds) + " s, " +
                    std::to_string(ledger.size()) + " anchors all at zero relevance");
}

Outcome dominance(const BenchRun& unbounded, const BenchRun& pirate100, const BenchRun& static100) {
  Check check;
  const double nav = unbounded.report.nav_pct.value_or(0.0), lk = unbounded.report.lk_pct.value_or(0.0);
  check.expect(nav >= 90.0, "unbounded Nav " + fmt(nav));
  check.expect(lk >= 80.0, "unbounded LK " + fmt(lk));
  const double pn = pirate100.report.nav_pct.value_or(0.0), sn = static100.report.nav_pct.value_or(0.0);
  check.expect(pn > sn, "bounded Nav " + fmt(pn) + " vs static " + fmt(sn));
  check.expect(pirate100.report.ulc > static100.report.ulc, "bounded ULC " + std::to_string(pirate100.report.ulc) +
                                                                " vs static " + std::to_string(static100.report.ulc));
  return check.done("unbounded Nav " + fmt(nav) + " LK " + fmt(lk) + "; 100 attacks: Pirate Nav " + fmt(pn) +
                    " ULC " + std::to_string(pirate100.report.ulc) + " vs static Nav " + fmt(sn) + " ULC " +
                    std::to_string(static100.report.ulc));
}

// --- 6: metric oracles ----------------------------------------------------

std::size_t lcs_recursive_table(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
  return t[a.size()][b.size()];
}

Outcome metric_oracles(const BenchRun& run, const AppConfig& cfg) {
  Check check;
  static const std::vector<std::string> alphabet{"fever", "cough", "rash", "pain", "sleep", "dose", "ulcer", "gout"};
  Rng rng(606);
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::string> a(rng.below(25)), b(rng.below(25));
    for (auto& w : a) w = alphabet[rng.below(alphabet.size())];
    for (auto& w : b) w = alphabet[rng.below(alphabet.size())];
    const auto lcs = lcs_recursive_table(a, b);
    double expected = 0.0;
    if (lcs > 0) {
      const double p = double(lcs) / double(a.size()), r = double(lcs) / double(b.size());
      expected = 2.0 * p * r / (p + r);
    }
    std::string sa, sb;
    for (const auto& w : a) sa += w + " ";
    for (const auto& w : b) sb += w + " ";
    check.expect(rouge_l(sa, sb) == expected, "rouge mismatch on pair " + std::to_string(i));
  }

  // ULC: every extracted chunk in order, compared against all earlier counted ones.
  auto embedder = make_embedder(cfg.attacker.embedder);
  std::vector<std::string> all(run.boot.chunks);
  for (const auto& r : run.result.log) all.insert(all.end(), r.parsed_chunks.begin(), r.parsed_chunks.end());
  std::vector<Embedding> vecs;
  for (const auto& s : all) vecs.push_back(embedder->embed(s));
  std::vector<std::size_t> counted;
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    bool dup = false;
    for (auto j : counted) dup = dup || dot_plain(vecs[i], vecs[j]) > 0.95;
    if (!dup) counted.push_back(i);
  }
  check.expect(counted.size() == run.report.ulc,
               "ULC " + std::to_string(run.report.ulc) + " vs oracle " + std::to_string(counted.size()));
  check.expect(all.size() == run.report.lc, "LC differs");

  // Nav: set union of retrieved ids.
  AppConfig c = cfg;
  c.attacker.engine.mode = RunMode::parse("bounded:100");
  TargetAgent agent = TargetAgent::from_config(c.agent);
  InProcessTarget target(agent);
  const auto boot = bootstrap(target, c.attacker.engine);
  auto llm = make_llm(c.attacker.llm);
  PirateEngine engine(c.attacker.engine, *embedder, *llm, target, boot.rules);
  engine.run();
  std::set<std::string> ids;
  for (const auto& ev : agent.retrieval_log().events) ids.insert(ev.retrieved_ids.begin(), ev.retrieved_ids.end());
  const double nav = navigation_coverage(agent.retrieval_log(), agent.kb_size());
  check.expect(nav == 100.0 * static_cast<double>(ids.size()) / static_cast<double>(agent.kb_size()), "Nav differs");
  return check.done("1000 ROUGE-L pairs exact, ULC " + std::to_string(counted.size()) + " over " +
                    std::to_string(all.size()) + " chunks, Nav " + fmt(nav));
}

// --- 7: conservation ------------------------------------------------------

Outcome conservation() {
  Check check;
  AppConfig cfg = demo_config();
  cfg.agent.compliance.obey_prob = {{1, 1.0}, {2, 1.0}, {3, 1.0}, {4, 1.0}};
  cfg.agent.compliance.noise_rate = 0.0;
  cfg.attacker.engine.mode = RunMode::parse("bounded:300");
  const BenchRun run = bench(cfg, true);
  const double nav = run.report.nav_pct.value_or(-1.0), lk = run.report.lk_pct.value_or(-2.0);
  check.expect(nav == lk, "Nav " + fmt(nav, 3) + " vs LK " + fmt(lk, 3));
  return check.done(std::to_string(run.result.log.size()) + " attacks, Nav " + fmt(nav, 3) + " == LK " + fmt(lk, 3));
}

// --- 8: wire fidelity -----------------------------------------------------

Outcome wire_fidelity() {
  Check check;
  AppConfig cfg = demo_config();
  TargetAgent local = TargetAgent::from_config(cfg.agent);
  TargetAgent served = TargetAgent::from_config(cfg.agent);
  TargetServer server(served);
  server.start(0);
  HttpTarget remote(server.endpoint());

  Rng rng(88);
  const auto& kb = local.knowledge_base();
  std::size_t same = 0;
  for (int i = 0; i < 50; ++i) {
    const auto& chunk = kb[rng.below(kb.size())].text;
    const auto words = text::words(chunk);
    std::string q = words[rng.below(words.size())] + " " + words[rng.below(words.size())] + "?";
    if (i % 3 != 2) q = inject(q, default_command_pool()[rng.below(4)]);
    const auto a = local.answer(q);
    const auto b = remote.query(q);
    same += a == b;
  }
  check.expect(same == 50, std::to_string(50 - same) + " answers differ");

  httplib::Client client("127.0.0.1", server.port());
  const std::vector<std::string> bad{"not json", R"({"messages": []})", R"({"messages": [{"role": "user"}]})",
                                     R"({"model": "x"})", R"({"messages": [{"role": "system", "content": "hi"}]})"};
  std::size_t rejected = 0;
  for (const auto& body : bad) {
    const auto res = client.Post("/v1/chat/completions", body, "application/json");
    rejected += res && res->status == 400;
  }
  check.expect(rejected == bad.size(), std::to_string(bad.size() - rejected) + " malformed requests not rejected");
  server.stop();
  return check.done("50/50 identical answers, " + std::to_string(rejected) + "/" + std::to_string(bad.size()) +
                    " malformed requests answered 400");
}

// --- 9: determinism -------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pirate");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

Outcome determinism() {
  Check check;
  const fs::path root = fs::temp_directory_path() / ("pirate-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  const auto config = (fs::path(PIRATE_SOURCE_DIR) / "configs/demo.yaml").string();
  check.expect(cli({"attack", "--config", config, "--in-process", "--mode", "bounded:100", "--out",
                    (root / "seed").string()}) == 0,
               "seed run failed");
  const auto manifest = (root / "seed" / artifact::kManifest).string();
  check.expect(cli({"attack", "--manifest", manifest, "--out", (root / "a").string()}) == 0, "replay a failed");
  check.expect(cli({"attack", "--manifest", manifest, "--out", (root / "b").string()}) == 0, "replay b failed");
  const auto a = slurp(root / "a" / artifact::kAttackLog), b = slurp(root / "b" / artifact::kAttackLog);
  check.expect(!a.empty() && a == b, "attack logs differ");
  check.expect(a == slurp(root / "seed" / artifact::kAttackLog), "replay differs from the original run");
  check.expect(slurp(root / "a" / artifact::kStolen) == slurp(root / "b" / artifact::kStolen), "stolen bases differ");
  fs::remove_all(root);
  return check.done("two replays of one manifest: " + std::to_string(a.size()) + " identical log bytes");
}

}  // namespace

int main() {
  bool all = true;
  auto report = [&](int n, const std::string& name, const Outcome& o) {
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << name << "): " << o.detail << std::endl;
  };
  auto guarded = [&](int n, const std::string& name, const std::function<Outcome()>& fn) {
    try {
      report(n, name, fn());
    } catch (const std::exception& e) {
      report(n, name, Outcome{false, std::string("exception: ") + e.what()});
    }
  };

  guarded(1, "algorithm replay", replay_equivalence);
  guarded(2, "penalty math", penalty_math);
  guarded(3, "sampling distribution", sampling_distribution);

  std::optional<BenchRun> unbounded, pirate100, static100;
  AppConfig cfg;
  try {
    cfg = demo_config();
    AppConfig u = cfg;
    u.attacker.engine.mode = RunMode::parse("unbounded");
    unbounded = bench(u, true);
    AppConfig b = cfg;
    b.attacker.engine.mode = RunMode::parse("bounded:100");
    pirate100 = bench(b, true);
    static100 = bench(b, false, 100);
  } catch (const std::exception& e) {
    std::cerr << "benchmark failed: " << e.what() << '\n';
  }
  if (unbounded) {
    guarded(4, "termination", [&] { return termination(*unbounded); });
  } else {
    report(4, "termination", {false, "benchmark did not run"});
  }
  if (unbounded && pirate100 && static100) {
    guarded(5, "extraction dominance", [&] { return dominance(*unbounded, *pirate100, *static100); });
  } else {
    report(5, "extraction dominance", {false, "benchmark did not run"});
  }
  if (pirate100) {
    guarded(6, "metric oracles", [&] { return metric_oracles(*pirate100, cfg); });
  } else {
    report(6, "metric oracles", {false, "benchmark did not run"});
  }
  guarded(7, "full-compliance conservation", conservation);
  guarded(8, "wire fidelity", wire_fidelity);
  guarded(9, "determinism", determinism);
  return all ? 0 : 1;
}
