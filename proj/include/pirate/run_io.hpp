#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pirate/engine.hpp"
#include "pirate/errors.hpp"
#include "pirate/evaluation.hpp"

namespace pirate {

inline constexpr std::string_view kToolVersion = "0.1.0";

namespace artifact {
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kBootstrap = "bootstrap.json";
inline constexpr const char* kAttackLog = "attack_log.jsonl";
inline constexpr const char* kTimings = "timings.jsonl";
inline constexpr const char* kStolen = "stolen_kb.jsonl";
inline constexpr const char* kInstrumentation = "instrumentation.json";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kCurves = "curves.csv";
}  // namespace artifact

// A run directory lacks a required file.
class MissingArtifactError : public LoadError {
 public:
  explicit MissingArtifactError(const std::filesystem::path& path)
      : LoadError(0, "missing artifact " + path.string()) {}
};

// {step, gen_time_seconds}
nlohmann::json timing_json(const AttackStepRecord& r);

// Streams the artifacts of one run. Each step is flushed as it arrives so an
// interrupted run leaves a readable prefix.
class RunWriter {
 public:
  explicit RunWriter(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }

  void write_manifest(const nlohmann::json& manifest) const;
  void write_bootstrap(const BootstrapResult& boot) const;
  void append_step(const AttackStepRecord& record);
  void write_stolen(const std::vector<Chunk>& stolen) const;
  void write_instrumentation(const nlohmann::json& doc) const;

 private:
  std::filesystem::path dir_;
  std::ofstream log_;
  std::ofstream timings_;
};

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

// Stable content hash of a file, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

std::vector<AttackStepRecord> load_attack_log(const std::filesystem::path& path);
std::vector<Chunk> load_stolen(const std::filesystem::path& path);

struct LoadedRun {
  nlohmann::json manifest;
  RunArtifacts artifacts;  // truth and instrumentation left to the caller
};

// Reads manifest, bootstrap, log (+ timings when present) and stolen chunks.
LoadedRun load_run(const std::filesystem::path& dir);

}  // namespace pirate
