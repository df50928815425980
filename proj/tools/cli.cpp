#include "cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "pirate/baseline.hpp"
#include "pirate/config.hpp"
#include "pirate/corpus.hpp"
#include "pirate/engine.hpp"
#include "pirate/evaluation.hpp"
#include "pirate/run_io.hpp"
#include "pirate/target.hpp"

namespace pirate::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kInProcess = "in-process";

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

bool is_url(const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

AppConfig load_app_config(const std::string& path) {
  return load_config(path.empty() ? fs::path(PIRATE_DEMO_CONFIG) : fs::path(path));
}

// --- serve-target ----------------------------------------------------------

struct ServeArgs {
  std::string config;
  std::string host = "127.0.0.1";
  int port = 8080;
  double duration_s = 0.0;
};

int serve_target(const ServeArgs& args, std::ostream& out, std::ostream& err) {
  AppConfig config;
  std::vector<Chunk> kb;
  try {
    config = load_app_config(args.config);
    kb = load_knowledge_base(config.agent.kb_path);
  } catch (const LoadError& e) {
    err << "invalid config: " << e.what() << '\n';
    return kInvalidConfig;
  }
  TargetAgent agent(config.agent, std::move(kb));
  TargetServer server(agent, args.host);
  try {
    server.start(args.port);
  } catch (const StartupError& e) {
    err << e.what() << '\n';
    return kPortBusy;
  }
  out << "serving " << agent.kb_size() << " chunks at " << server.endpoint() << std::endl;

  g_stop = false;
  auto previous_int = std::signal(SIGINT, on_signal);
  auto previous_term = std::signal(SIGTERM, on_signal);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(args.duration_s);
  while (!g_stop && (args.duration_s <= 0.0 || std::chrono::steady_clock::now() < deadline))
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  std::signal(SIGINT, previous_int);
  std::signal(SIGTERM, previous_term);
  server.stop();
  return kOk;
}

// --- attack ----------------------------------------------------------------

struct AttackArgs {
  std::string config;
  std::string manifest;
  std::string target;
  bool in_process = false;
  std::string mode;
  std::string attacker;
  std::string pool;
  std::size_t pool_size = 0;
  std::string out;
};

nlohmann::json seeds_of(const AppConfig& c) {
  return {{"agent", c.agent.seed},
          {"target_embedder", c.agent.embedder.seed},
          {"attacker_embedder", c.attacker.embedder.seed},
          {"llm", c.attacker.llm.seed},
          {"engine", c.attacker.engine.seed}};
}

int attack(const AttackArgs& args, std::ostream& out, std::ostream& err) {
  AppConfig config;
  std::string target_spec = kInProcess;
  try {
    if (!args.manifest.empty()) {
      const auto manifest = read_json_file(args.manifest);
      config = config_from_json(manifest.at("config"));
      target_spec = manifest.value("target", std::string(kInProcess));
    } else {
      config = load_app_config(args.config);
    }
    if (!args.mode.empty()) config.attacker.engine.mode = RunMode::parse(args.mode);
    if (args.attacker == "static") config.attacker.kind = AttackerKind::Static;
    else if (args.attacker == "pirate") config.attacker.kind = AttackerKind::Pirate;
    if (!args.pool.empty()) config.attacker.pool_path = fs::absolute(args.pool);
    if (args.pool_size) config.attacker.pool_size = args.pool_size;
  } catch (const MissingArtifactError& e) {
    err << e.what() << '\n';
    return kMissingArtifacts;
  } catch (const std::exception& e) {
    err << "invalid config: " << e.what() << '\n';
    return kInvalidConfig;
  }
  if (!args.target.empty()) target_spec = args.target;
  if (args.in_process) target_spec = kInProcess;
  if (target_spec != kInProcess && !is_url(target_spec)) {
    err << "--target must be an http(s) URL\n";
    return kInvalidConfig;
  }

  const fs::path out_dir = args.out.empty() ? fs::path("run") : fs::path(args.out);
  const bool in_process = target_spec == kInProcess;

  std::optional<TargetAgent> agent;
  std::unique_ptr<Target> target;
  try {
    if (in_process) {
      agent.emplace(TargetAgent::from_config(config.agent));
      target = std::make_unique<InProcessTarget>(*agent);
    } else {
      target = std::make_unique<HttpTarget>(target_spec);
    }
  } catch (const LoadError& e) {
    err << "invalid config: " << e.what() << '\n';
    return kInvalidConfig;
  }

  nlohmann::json manifest{
      {"tool_version", kToolVersion},
      {"created_at", utc_now()},
      {"config", to_json(config)},
      {"seeds", seeds_of(config)},
      {"target", target_spec},
      {"mode", config.attacker.engine.mode.to_string()},
      {"attacker", config.attacker.kind == AttackerKind::Static ? "static" : "pirate"},
      {"artifacts",
       {{"bootstrap", artifact::kBootstrap},
        {"attack_log", artifact::kAttackLog},
        {"timings", artifact::kTimings},
        {"stolen_kb", artifact::kStolen}}},
  };
  if (fs::exists(config.agent.kb_path))
    manifest["kb"] = {{"path", fs::absolute(config.agent.kb_path).string()},
                      {"digest", file_digest(config.agent.kb_path)}};
  if (in_process) manifest["artifacts"]["instrumentation"] = artifact::kInstrumentation;

  RunWriter writer(out_dir);
  auto finish = [&](const std::string& status, std::size_t steps, std::size_t stolen) {
    manifest["finished_at"] = utc_now();
    manifest["status"] = status;
    manifest["steps"] = steps;
    manifest["stolen_chunks"] = stolen;
    writer.write_manifest(manifest);
    if (agent) writer.write_instrumentation(instrumentation_json(agent->retrieval_log(), agent->kb_size()));
  };

  std::size_t steps = 0;
  auto on_step = [&](const AttackStepRecord& r) {
    writer.append_step(r);
    ++steps;
  };

  try {
    const BootstrapResult boot = bootstrap(*target, config.attacker.engine);
    writer.write_bootstrap(boot);
    auto embedder = make_embedder(config.attacker.embedder);

    RunResult result;
    if (config.attacker.kind == AttackerKind::Static) {
      QueryPool pool = config.attacker.pool_path.empty() ? QueryPool::builtin() : QueryPool::load(config.attacker.pool_path);
      if (config.attacker.pool_size) pool = pool.take(std::min(config.attacker.pool_size, pool.size()));
      StaticConfig sc;
      sc.command_pool = config.attacker.engine.command_pool;
      sc.alpha1 = config.attacker.engine.alpha1;
      const RunMode& mode = config.attacker.engine.mode;
      sc.max_attacks = mode.bounded ? mode.max_attacks : pool.size();
      result = run_static(pool, *target, boot.rules, sc, *embedder, &boot, on_step);
    } else {
      auto llm = make_llm(config.attacker.llm);
      PirateEngine engine(config.attacker.engine, *embedder, *llm, *target, boot.rules);
      engine.absorb(boot);
      result = engine.run(on_step);
    }
    writer.write_stolen(result.stolen.chunks());
    manifest["warnings"] = result.warnings;
    finish("complete", steps, result.stolen.size());
    out << "run written to " << out_dir.string() << ": " << steps << " attacks, " << result.stolen.size()
        << " stolen chunks\n";
    return kOk;
  } catch (const BootstrapError& e) {
    finish("bootstrap_failed", steps, 0);
    err << "bootstrap failed: " << e.what() << '\n';
    return kBootstrapFailed;
  } catch (const TransportError& e) {
    finish("transport_failed", steps, 0);
    err << "transport failure: " << e.what() << '\n';
    return kTransportFailed;
  } catch (const LoadError& e) {
    finish("invalid_config", steps, 0);
    err << "invalid config: " << e.what() << '\n';
    return kInvalidConfig;
  }
}

// --- score -----------------------------------------------------------------

struct ScoreArgs {
  std::string run;
  std::string truth;
  std::string instrumentation;
  std::string admin_token;
  std::string config;
};

int score(const ScoreArgs& args, std::ostream& out, std::ostream& err) {
  const fs::path dir(args.run);
  try {
    LoadedRun run = load_run(dir);
    AppConfig config = args.config.empty() ? config_from_json(run.manifest.at("config")) : load_app_config(args.config);

    fs::path truth_path;
    if (!args.truth.empty()) {
      truth_path = args.truth;
      if (!fs::exists(truth_path)) throw MissingArtifactError(truth_path);
    } else if (!config.agent.kb_path.empty() && fs::exists(config.agent.kb_path)) {
      truth_path = config.agent.kb_path;
    }
    if (!truth_path.empty()) run.artifacts.truth = load_knowledge_base(truth_path);

    std::optional<nlohmann::json> doc;
    if (is_url(args.instrumentation)) {
      const char* env_token = std::getenv("PIRATE_ADMIN_TOKEN");
      const std::string token = !args.admin_token.empty() ? args.admin_token
                                : env_token               ? std::string(env_token)
                                                          : config.agent.admin_token;
      doc = fetch_instrumentation(args.instrumentation, token);
    } else if (!args.instrumentation.empty()) {
      doc = read_json_file(args.instrumentation);
    } else if (fs::exists(dir / artifact::kInstrumentation)) {
      doc = read_json_file(dir / artifact::kInstrumentation);
    }
    if (doc) {
      Instrumentation inst;
      inst.log = retrieval_log_from_json(*doc, &inst.kb_size);
      run.artifacts.instrumentation = std::move(inst);
    }

    auto attacker_embedder = make_embedder(config.attacker.embedder);
    std::unique_ptr<Embedder> target_embedder;
    if (run.artifacts.truth) target_embedder = make_embedder(config.agent.embedder);
    const RunReport report = build_report(run.artifacts, *attacker_embedder, target_embedder.get());
    write_report(report, dir);
    out << summary_row(report) << '\n';
    return kOk;
  } catch (const MissingArtifactError& e) {
    err << e.what() << '\n';
    return kMissingArtifacts;
  } catch (const IntegrityError& e) {
    err << "corrupt run: " << e.what() << '\n';
    return kFailure;
  } catch (const LoadError& e) {
    err << e.what() << '\n';
    return kInvalidConfig;
  } catch (const TransportError& e) {
    err << "instrumentation fetch failed: " << e.what() << '\n';
    return kTransportFailed;
  } catch (const ProtocolError& e) {
    err << "instrumentation fetch failed: " << e.what() << '\n';
    return kTransportFailed;
  }
}

// --- gen-kb ----------------------------------------------------------------

struct GenArgs {
  std::size_t chunks = 200;
  std::uint64_t seed = 0;
  std::string out;
};

int gen_kb(const GenArgs& args, std::ostream& out) {
  const auto corpus = generate_corpus(args.chunks, args.seed);
  if (args.out.empty()) {
    for (const auto& c : corpus) out << nlohmann::json{{"id", c.id}, {"text", c.text}}.dump() << '\n';
  } else {
    write_knowledge_base(args.out, corpus);
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive knowledge-extraction attacks against RAG agents"};
  app.require_subcommand(1);
  app.footer(
      "Config entries can be overridden with PIRATE_<SECTION>__<KEY> environment variables,\n"
      "e.g. PIRATE_AGENT__TOP_K=3 or PIRATE_ATTACKER__ENGINE__MODE=unbounded.\n"
      "Exit codes: 0 ok, 2 invalid config, 3 port busy, 4 bootstrap failed,\n"
      "5 transport failure, 6 missing artifacts.");

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve-target", "Serve a simulated RAG agent over HTTP");
  serve->add_option("--config", serve_args.config, "YAML config (default: bundled demo)");
  serve->add_option("--host", serve_args.host, "Bind address")->capture_default_str();
  serve->add_option("--port", serve_args.port, "Port, 0 for any free port")->capture_default_str();
  serve->add_option("--duration", serve_args.duration_s, "Stop after this many seconds (0: until signalled)");

  AttackArgs attack_args;
  auto* atk = app.add_subcommand("attack", "Run an extraction attack and write a run directory");
  auto* cfg_opt = atk->add_option("--config", attack_args.config, "YAML config (default: bundled demo)");
  atk->add_option("--manifest", attack_args.manifest, "Replay the configuration of an earlier run")->excludes(cfg_opt);
  auto* target_opt = atk->add_option("--target", attack_args.target, "Base URL of a served target");
  atk->add_flag("--in-process", attack_args.in_process, "Attack the simulator in this process")->excludes(target_opt);
  atk->add_option("--mode", attack_args.mode, "bounded:N or unbounded");
  atk->add_option("--attacker", attack_args.attacker, "pirate or static")
      ->check(CLI::IsMember({"pirate", "static"}));
  atk->add_option("--pool", attack_args.pool, "Query pool file for the static attacker");
  atk->add_option("--pool-size", attack_args.pool_size, "Use only the first N pool queries");
  atk->add_option("--out", attack_args.out, "Run directory")->required();

  ScoreArgs score_args;
  auto* sc = app.add_subcommand("score", "Compute metrics for a run directory");
  sc->add_option("--run", score_args.run, "Run directory")->required();
  sc->add_option("--truth", score_args.truth, "Ground-truth knowledge base (default: the run's kb_path)");
  sc->add_option("--instrumentation", score_args.instrumentation,
                 "Retrieval log file or served target URL (default: the run's instrumentation.json)");
  sc->add_option("--admin-token", score_args.admin_token, "Bearer token for a served target's instrumentation");
  sc->add_option("--config", score_args.config, "Config for embedders (default: the run's manifest)");

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen-kb", "Generate a synthetic knowledge base as JSONL");
  gen->add_option("--chunks", gen_args.chunks, "Number of chunks")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_args.seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", gen_args.out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kFailure;
  }

  try {
    if (*serve) return serve_target(serve_args, out, err);
    if (*atk) return attack(attack_args, out, err);
    if (*sc) return score(score_args, out, err);
    if (*gen) return gen_kb(gen_args, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace pirate::cli
