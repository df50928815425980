#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "pirate/embedding.hpp"
#include "pirate/engine.hpp"
#include "pirate/llm.hpp"
#include "pirate/target.hpp"

namespace pirate {

enum class AttackerKind { Pirate, Static };

struct AttackerConfig {
  AttackerKind kind = AttackerKind::Pirate;
  EmbedderSpec embedder = ngram_spec(2002);
  LlmSpec llm;
  EngineConfig engine;
  std::filesystem::path pool_path;  // static attacker; empty: bundled questions
  std::size_t pool_size = 0;        // 0: whole pool
};

struct AppConfig {
  AgentConfig agent;
  AttackerConfig attacker;
};

// Every default pre-filled.
AppConfig default_config();

// YAML file; relative paths resolve against the file's directory. Environment
// variables PIRATE_<SECTION>__<KEY>[__<KEY>...] override individual entries,
// e.g. PIRATE_AGENT__TOP_K=3 or PIRATE_ATTACKER__ENGINE__MODE=unbounded.
// Throws ConfigError carrying the offending line.
AppConfig load_config(const std::filesystem::path& path);
AppConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir = {});

inline constexpr std::string_view kEnvPrefix = "PIRATE_";

nlohmann::json to_json(const AppConfig& config);
AppConfig config_from_json(const nlohmann::json& j);

}  // namespace pirate
