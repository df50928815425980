#include "pirate/run_io.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "pirate/text.hpp"

namespace pirate {
namespace fs = std::filesystem;

nlohmann::json timing_json(const AttackStepRecord& r) {
  return {{"step", r.step}, {"gen_time_seconds", r.gen_time_seconds}};
}

RunWriter::RunWriter(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
  log_.open(dir_ / artifact::kAttackLog, std::ios::trunc);
  timings_.open(dir_ / artifact::kTimings, std::ios::trunc);
  if (!log_ || !timings_) throw std::runtime_error("cannot write run directory " + dir_.string());
}

void RunWriter::write_manifest(const nlohmann::json& manifest) const {
  write_json_file(dir_ / artifact::kManifest, manifest);
}

void RunWriter::write_bootstrap(const BootstrapResult& boot) const {
  write_json_file(dir_ / artifact::kBootstrap, to_json(boot));
}

void RunWriter::append_step(const AttackStepRecord& record) {
  log_ << to_json(record).dump() << '\n';
  log_.flush();
  timings_ << timing_json(record).dump() << '\n';
  timings_.flush();
}

void RunWriter::write_stolen(const std::vector<Chunk>& stolen) const {
  std::ofstream out(dir_ / artifact::kStolen, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + (dir_ / artifact::kStolen).string());
  for (const auto& c : stolen) out << nlohmann::json{{"id", c.id}, {"text", c.text}, {"step", c.step}}.dump() << '\n';
}

void RunWriter::write_instrumentation(const nlohmann::json& doc) const {
  write_json_file(dir_ / artifact::kInstrumentation, doc);
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(0, path.filename().string() + ": " + e.what());
  }
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError(path);
  std::stringstream ss;
  ss << in.rdbuf();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(text::hash64(ss.str(), 0)));
  return buf;
}

namespace {

template <typename F>
void for_each_jsonl(const fs::path& path, F&& f) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw LoadError(lineno, path.filename().string() + ": invalid JSON");
    }
    try {
      f(j);
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(lineno, path.filename().string() + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<AttackStepRecord> load_attack_log(const fs::path& path) {
  std::vector<AttackStepRecord> out;
  for_each_jsonl(path, [&](const nlohmann::json& j) { out.push_back(attack_step_from_json(j)); });
  return out;
}

std::vector<Chunk> load_stolen(const fs::path& path) {
  std::vector<Chunk> out;
  for_each_jsonl(path, [&](const nlohmann::json& j) {
    Chunk c;
    c.id = j.at("id").get<std::string>();
    c.text = j.at("text").get<std::string>();
    c.source = ChunkSource::Stolen;
    c.step = j.value("step", std::size_t{0});
    out.push_back(std::move(c));
  });
  return out;
}

LoadedRun load_run(const fs::path& dir) {
  LoadedRun run;
  run.manifest = read_json_file(dir / artifact::kManifest);
  run.artifacts.log = load_attack_log(dir / artifact::kAttackLog);

  if (fs::exists(dir / artifact::kTimings)) {
    std::map<std::size_t, double> seconds;
    for_each_jsonl(dir / artifact::kTimings, [&](const nlohmann::json& j) {
      seconds[j.at("step").get<std::size_t>()] = j.at("gen_time_seconds").get<double>();
    });
    for (auto& r : run.artifacts.log) {
      if (auto it = seconds.find(r.step); it != seconds.end()) r.gen_time_seconds = it->second;
    }
  }
  if (fs::exists(dir / artifact::kBootstrap))
    run.artifacts.bootstrap = bootstrap_result_from_json(read_json_file(dir / artifact::kBootstrap));
  for (auto& c : load_stolen(dir / artifact::kStolen)) run.artifacts.stolen.push_back(std::move(c.text));
  return run;
}

}  // namespace pirate
