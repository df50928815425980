#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "helpers.hpp"
#include "pirate/config.hpp"
#include "pirate/corpus.hpp"
#include "pirate/run_io.hpp"
#include "pirate/target.hpp"

namespace pirate {
namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pirate");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Scratch directory holding a small knowledge base and a config pointing at it.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    write_knowledge_base(dir_ / "kb.jsonl", generate_corpus(30, 5));
    write_config("{1: 1.0}", "bounded:8");
  }

  void write_config(const std::string& obey, const std::string& mode) {
    std::ofstream(dir_ / "config.yaml") << "agent:\n  kb_path: kb.jsonl\n  top_k: 3\n  admin_token: t0k\n"
                                        << "  compliance:\n    obey_prob: " << obey << "\n    noise_rate: 0.0\n"
                                        << "attacker:\n  engine:\n    mode: " << mode << "\n";
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  testing::TempDir dir_{"cli"};
};

TEST_F(CliTest, GenKbToFileAndStdout) {
  const auto r = run_cli({"gen-kb", "--chunks", "5", "--seed", "3", "--out", path("gen.jsonl")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(load_knowledge_base(path("gen.jsonl")).size(), 5u);
  const auto s = run_cli({"gen-kb", "--chunks", "2"});
  EXPECT_EQ(std::count(s.out.begin(), s.out.end(), '\n'), 2);
}

TEST_F(CliTest, AttackThenScore) {
  const auto a = run_cli({"attack", "--config", path("config.yaml"), "--in-process", "--out", path("run")});
  ASSERT_EQ(a.code, cli::kOk) << a.err;
  for (const char* f : {artifact::kManifest, artifact::kBootstrap, artifact::kAttackLog, artifact::kTimings,
                        artifact::kStolen, artifact::kInstrumentation})
    EXPECT_TRUE(std::filesystem::exists(dir_ / "run" / f)) << f;
  const auto manifest = read_json_file(dir_ / "run" / artifact::kManifest);
  EXPECT_EQ(manifest["status"], "complete");
  EXPECT_EQ(manifest["steps"], 8);
  EXPECT_EQ(manifest["target"], "in-process");
  EXPECT_FALSE(manifest["config"]["agent"].contains("admin_token"));

  const auto s = run_cli({"score", "--run", path("run")});
  ASSERT_EQ(s.code, cli::kOk) << s.err;
  EXPECT_NE(s.out.find("Nav "), std::string::npos);
  const auto report = read_json_file(dir_ / "run" / artifact::kReport);
  EXPECT_TRUE(report["nav_available"].get<bool>());
  EXPECT_EQ(report["attacks"], 8);
  EXPECT_FALSE(report["lk_pct"].is_null());
  EXPECT_TRUE(std::filesystem::exists(dir_ / "run" / artifact::kCurves));
}

TEST_F(CliTest, StaticAttackerHonoursPoolSize) {
  const auto a = run_cli({"attack", "--config", path("config.yaml"), "--in-process", "--attacker", "static",
                          "--pool-size", "5", "--mode", "unbounded", "--out", path("static")});
  ASSERT_EQ(a.code, cli::kOk) << a.err;
  EXPECT_EQ(load_attack_log(dir_ / "static" / artifact::kAttackLog).size(), 5u);
}

TEST_F(CliTest, ReplayFromManifest) {
  ASSERT_EQ(run_cli({"attack", "--config", path("config.yaml"), "--in-process", "--out", path("a")}).code, 0);
  ASSERT_EQ(run_cli({"attack", "--manifest", path("a/manifest.json"), "--out", path("b")}).code, 0);
  std::ifstream la(path("a/attack_log.jsonl")), lb(path("b/attack_log.jsonl"));
  std::stringstream sa, sb;
  sa << la.rdbuf();
  sb << lb.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
}

TEST_F(CliTest, MissingArtifactsExitSix) {
  EXPECT_EQ(run_cli({"score", "--run", path("nowhere")}).code, cli::kMissingArtifacts);
  ASSERT_EQ(run_cli({"attack", "--config", path("config.yaml"), "--in-process", "--out", path("run")}).code, 0);
  EXPECT_EQ(run_cli({"score", "--run", path("run"), "--truth", path("absent.jsonl")}).code, cli::kMissingArtifacts);
  std::filesystem::remove(dir_ / "run" / artifact::kAttackLog);
  EXPECT_EQ(run_cli({"score", "--run", path("run")}).code, cli::kMissingArtifacts);
  EXPECT_EQ(run_cli({"attack", "--manifest", path("none.json"), "--in-process", "--out", path("x")}).code,
            cli::kMissingArtifacts);
}

TEST_F(CliTest, InvalidConfigExitTwo) {
  std::ofstream(dir_ / "bad.yaml") << "agent:\n  kb_path: kb.jsonl\n  top_k: 0\n";
  const auto r = run_cli({"attack", "--config", path("bad.yaml"), "--in-process", "--out", path("r")});
  EXPECT_EQ(r.code, cli::kInvalidConfig);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli({"serve-target", "--config", path("bad.yaml")}).code, cli::kInvalidConfig);
  EXPECT_EQ(run_cli({"attack", "--config", path("config.yaml"), "--mode", "sometimes", "--in-process", "--out",
                     path("r")}).code,
            cli::kInvalidConfig);
}

TEST_F(CliTest, BusyPortExitThree) {
  TargetAgent agent(AgentConfig{}, generate_corpus(3, 1));
  TargetServer holder(agent);
  holder.start(0);
  const auto r = run_cli({"serve-target", "--config", path("config.yaml"), "--port", std::to_string(holder.port())});
  EXPECT_EQ(r.code, cli::kPortBusy);
}

TEST_F(CliTest, ServeForAShortDuration) {
  const auto r = run_cli({"serve-target", "--config", path("config.yaml"), "--port", "0", "--duration", "0.2"});
  EXPECT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_NE(r.out.find("serving 30 chunks at http://127.0.0.1:"), std::string::npos);
}

TEST_F(CliTest, AllRefusalExitFour) {
  write_config("{1: 0, 2: 0, 3: 0, 4: 0}", "bounded:5");
  const auto r = run_cli({"attack", "--config", path("config.yaml"), "--in-process", "--out", path("r")});
  EXPECT_EQ(r.code, cli::kBootstrapFailed);
  EXPECT_EQ(read_json_file(dir_ / "r" / artifact::kManifest)["status"], "bootstrap_failed");
}

TEST_F(CliTest, UnreachableTargetExitFive) {
  const auto r =
      run_cli({"attack", "--config", path("config.yaml"), "--target", "http://127.0.0.1:9", "--out", path("r")});
  EXPECT_EQ(r.code, cli::kTransportFailed);
}

TEST_F(CliTest, AttackAgainstServedTargetAndRemoteInstrumentation) {
  auto config = load_config(dir_ / "config.yaml");
  TargetAgent agent(config.agent, load_knowledge_base(config.agent.kb_path));
  TargetServer server(agent);
  server.start(0);
  ASSERT_EQ(run_cli({"attack", "--config", path("config.yaml"), "--target", server.endpoint(), "--out", path("h")})
                .code,
            0);
  EXPECT_FALSE(std::filesystem::exists(dir_ / "h" / artifact::kInstrumentation));
  const auto s = run_cli({"score", "--run", path("h"), "--instrumentation", server.endpoint(), "--admin-token", "t0k"});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_TRUE(read_json_file(dir_ / "h" / artifact::kReport)["nav_available"].get<bool>());
  const auto denied =
      run_cli({"score", "--run", path("h"), "--instrumentation", server.endpoint(), "--admin-token", "wrong"});
  EXPECT_NE(denied.code, 0);
}

}  // namespace
}  // namespace pirate
