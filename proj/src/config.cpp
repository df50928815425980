#include "pirate/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "pirate/errors.hpp"

extern char** environ;

namespace pirate {
namespace {

std::size_t line_of(const YAML::Node& node) {
  const auto mark = node.Mark();
  return mark.line >= 0 ? static_cast<std::size_t>(mark.line) + 1 : 0;
}

// Walks the document, remembering the line of every field it reads so that
// range errors raised later by validate() can be pinned back to the source.
class Reader {
 public:
  explicit Reader(std::filesystem::path base_dir) : base_dir_(std::move(base_dir)) {}

  void expect_map(const YAML::Node& node, const std::string& path) {
    if (!node.IsMap()) throw ConfigError(line_of(node), path + ": expected a mapping");
    lines_[path] = line_of(node);
  }

  void allow(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> keys) {
    expect_map(node, path);
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
        throw ConfigError(line_of(kv.first), "unknown key '" + join(path, key) + "'");
    }
  }

  template <typename T>
  void read(const YAML::Node& parent, const std::string& path, const char* key, T& out) {
    const YAML::Node node = parent[key];
    if (!node) return;
    const auto full = join(path, key);
    lines_[full] = line_of(node);
    try {
      if constexpr (std::is_same_v<T, std::size_t>) {
        const auto v = node.as<long long>();
        if (v < 0) throw ConfigError(line_of(node), full + ": must be non-negative");
        out = static_cast<std::size_t>(v);
      } else {
        out = node.as<T>();
      }
    } catch (const YAML::Exception&) {
      throw ConfigError(line_of(node), full + ": expected " + type_name<T>());
    }
  }

  void read_path(const YAML::Node& parent, const std::string& path, const char* key, std::filesystem::path& out) {
    std::string s;
    read(parent, path, key, s);
    if (s.empty()) return;
    std::filesystem::path p(s);
    out = (p.is_relative() && !base_dir_.empty()) ? base_dir_ / p : p;
  }

  void read_list(const YAML::Node& parent, const std::string& path, const char* key, std::vector<std::string>& out) {
    const YAML::Node node = parent[key];
    if (!node) return;
    const auto full = join(path, key);
    lines_[full] = line_of(node);
    if (!node.IsSequence()) throw ConfigError(line_of(node), full + ": expected a list of strings");
    out.clear();
    for (const auto& item : node) {
      if (!item.IsScalar()) throw ConfigError(line_of(item), full + ": expected a list of strings");
      out.push_back(item.as<std::string>());
    }
  }

  // Best line for a validation message that names a dotted field.
  std::size_t line_for(const std::string& message) const {
    std::size_t best_len = 0, line = 0;
    for (const auto& [path, l] : lines_) {
      if (path.size() > best_len && message.find(path) != std::string::npos) {
        best_len = path.size();
        line = l;
      }
    }
    return line;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  template <typename T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_same_v<T, std::string>) return "a string";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else return "an integer";
  }

  std::filesystem::path base_dir_;
  std::map<std::string, std::size_t> lines_;
};

EmbedderKind embedder_kind(const std::string& s, std::size_t line, const std::string& path) {
  if (s == "ngram") return EmbedderKind::DeterministicNgram;
  if (s == "remote") return EmbedderKind::Remote;
  throw ConfigError(line, path + ": expected 'ngram' or 'remote', got '" + s + "'");
}

void read_embedder(Reader& r, const YAML::Node& node, const std::string& path, EmbedderSpec& spec) {
  if (!node) return;
  r.allow(node, path,
          {"kind", "dim", "seed", "endpoint", "model_name", "timeout_s", "retries", "batch_size", "max_in_flight"});
  if (node["kind"]) spec.kind = embedder_kind(node["kind"].as<std::string>(), line_of(node["kind"]), path + ".kind");
  r.read(node, path, "dim", spec.dim);
  r.read(node, path, "seed", spec.seed);
  r.read(node, path, "endpoint", spec.endpoint);
  r.read(node, path, "model_name", spec.model_name);
  r.read(node, path, "timeout_s", spec.timeout_s);
  r.read(node, path, "retries", spec.retries);
  r.read(node, path, "batch_size", spec.batch_size);
  r.read(node, path, "max_in_flight", spec.max_in_flight);
}

void read_agent(Reader& r, const YAML::Node& node, AgentConfig& a) {
  if (!node) return;
  r.allow(node, "agent",
          {"top_k", "temperature", "kb_path", "template", "seed", "admin_token", "guard_marker", "command_pool",
           "embedder", "compliance"});
  r.read(node, "agent", "top_k", a.top_k);
  r.read(node, "agent", "temperature", a.temperature);
  r.read_path(node, "agent", "kb_path", a.kb_path);
  r.read(node, "agent", "seed", a.seed);
  r.read(node, "agent", "admin_token", a.admin_token);
  r.read(node, "agent", "guard_marker", a.guard_marker);
  r.read_list(node, "agent", "command_pool", a.command_pool);
  if (const YAML::Node t = node["template"]) {
    std::string s;
    r.read(node, "agent", "template", s);
    if (s == "agent-a" || s == "agent-b" || s == "agent-c") {
      a.prompt = agent_template(s);
    } else {
      a.prompt = {"custom", s};
    }
  }
  read_embedder(r, node["embedder"], "agent.embedder", a.embedder);
  if (const YAML::Node c = node["compliance"]) {
    r.allow(c, "agent.compliance", {"obey_prob", "noise_rate", "max_chunks_emitted"});
    if (const YAML::Node probs = c["obey_prob"]) {
      r.expect_map(probs, "agent.compliance.obey_prob");
      a.compliance.obey_prob.clear();
      for (const auto& kv : probs) {
        try {
          a.compliance.obey_prob[kv.first.as<int>()] = kv.second.as<double>();
        } catch (const YAML::Exception&) {
          throw ConfigError(line_of(kv.first), "agent.compliance.obey_prob: expected <command id>: <probability>");
        }
      }
    }
    r.read(c, "agent.compliance", "noise_rate", a.compliance.noise_rate);
    r.read(c, "agent.compliance", "max_chunks_emitted", a.compliance.max_chunks_emitted);
  }
}

void read_llm(Reader& r, const YAML::Node& node, LlmSpec& l) {
  if (!node) return;
  const std::string path = "attacker.llm";
  r.allow(node, path,
          {"kind", "seed", "endpoint", "model_name", "temperature", "max_tokens", "timeout_s", "retries",
           "max_anchors_per_chunk", "base_query_template", "anchors_template"});
  if (const YAML::Node k = node["kind"]) {
    const auto s = k.as<std::string>();
    if (s == "mock") l.kind = LlmKind::Mock;
    else if (s == "remote") l.kind = LlmKind::Remote;
    else throw ConfigError(line_of(k), path + ".kind: expected 'mock' or 'remote', got '" + s + "'");
  }
  r.read(node, path, "seed", l.seed);
  r.read(node, path, "endpoint", l.endpoint);
  r.read(node, path, "model_name", l.model_name);
  r.read(node, path, "temperature", l.temperature);
  r.read(node, path, "max_tokens", l.max_tokens);
  r.read(node, path, "timeout_s", l.timeout_s);
  r.read(node, path, "retries", l.retries);
  r.read(node, path, "max_anchors_per_chunk", l.max_anchors_per_chunk);
  r.read(node, path, "base_query_template", l.base_query_template);
  r.read(node, path, "anchors_template", l.anchors_template);
}

void read_engine(Reader& r, const YAML::Node& node, EngineConfig& e) {
  if (!node) return;
  const std::string path = "attacker.engine";
  r.allow(node, path,
          {"beta", "alpha1", "alpha2", "n", "initial_anchor", "mode", "seed", "bootstrap_query", "command_pool",
           "penalize_sampled_anchors", "exhausted_step_penalty", "gs_includes_extraction"});
  r.read(node, path, "beta", e.beta);
  r.read(node, path, "alpha1", e.alpha1);
  r.read(node, path, "alpha2", e.alpha2);
  r.read(node, path, "n", e.n);
  r.read(node, path, "initial_anchor", e.initial_anchor);
  if (const YAML::Node m = node["mode"]) {
    std::string s;
    r.read(node, path, "mode", s);
    try {
      e.mode = RunMode::parse(s);
    } catch (const ContractViolation& ex) {
      throw ConfigError(line_of(m), path + ".mode: " + ex.what());
    }
  }
  r.read(node, path, "seed", e.seed);
  r.read(node, path, "bootstrap_query", e.bootstrap_query);
  r.read_list(node, path, "command_pool", e.command_pool);
  r.read(node, path, "penalize_sampled_anchors", e.penalize_sampled_anchors);
  r.read(node, path, "exhausted_step_penalty", e.exhausted_step_penalty);
  r.read(node, path, "gs_includes_extraction", e.gs_includes_extraction);
}

void read_attacker(Reader& r, const YAML::Node& node, AttackerConfig& a) {
  if (!node) return;
  r.allow(node, "attacker", {"kind", "pool_path", "pool_size", "embedder", "llm", "engine"});
  if (const YAML::Node k = node["kind"]) {
    const auto s = k.as<std::string>();
    if (s == "pirate") a.kind = AttackerKind::Pirate;
    else if (s == "static") a.kind = AttackerKind::Static;
    else throw ConfigError(line_of(k), "attacker.kind: expected 'pirate' or 'static', got '" + s + "'");
  }
  r.read_path(node, "attacker", "pool_path", a.pool_path);
  r.read(node, "attacker", "pool_size", a.pool_size);
  read_embedder(r, node["embedder"], "attacker.embedder", a.embedder);
  read_llm(r, node["llm"], a.llm);
  read_engine(r, node["engine"], a.engine);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

void apply_env_overrides(YAML::Node& root) {
  for (char** env = environ; env && *env; ++env) {
    const std::string entry(*env);
    if (entry.rfind(kEnvPrefix, 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    const std::string name = entry.substr(kEnvPrefix.size(), eq - kEnvPrefix.size());
    const std::string value = entry.substr(eq + 1);
    if (name.find("__") == std::string::npos) continue;  // not a config path

    std::vector<std::string> keys;
    std::size_t pos = 0;
    while (true) {
      const auto next = name.find("__", pos);
      keys.push_back(lower(name.substr(pos, next - pos)));
      if (next == std::string::npos) break;
      pos = next + 2;
    }
    if (std::any_of(keys.begin(), keys.end(), [](const std::string& k) { return k.empty(); }))
      throw ConfigError(0, "malformed override variable " + entry.substr(0, eq));

    YAML::Node parsed;
    try {
      parsed = YAML::Load(value);
    } catch (const YAML::Exception& e) {
      throw ConfigError(0, entry.substr(0, eq) + ": " + e.msg);
    }
    // Node-to-node assignment rebinds the underlying data, so descend by
    // pushing fresh handles instead of reassigning one.
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
      const YAML::Node existing = chain.back()[keys[i]];
      if (!existing.IsDefined() || existing.IsNull()) chain.back()[keys[i]] = YAML::Node(YAML::NodeType::Map);
      YAML::Node child = chain.back()[keys[i]];
      if (!child.IsMap()) throw ConfigError(0, entry.substr(0, eq) + ": '" + keys[i] + "' is not a section");
      chain.push_back(child);
    }
    chain.back()[keys.back()] = parsed.IsNull() ? YAML::Node(value) : parsed;
  }
}

AppConfig build(const YAML::Node& loaded, const std::filesystem::path& base_dir, bool env) {
  YAML::Node root = (!loaded || loaded.IsNull()) ? YAML::Node(YAML::NodeType::Map) : loaded;
  if (env) apply_env_overrides(root);

  AppConfig config = default_config();
  Reader r(base_dir);
  r.allow(root, "", {"agent", "attacker"});
  read_agent(r, root["agent"], config.agent);
  read_attacker(r, root["attacker"], config.attacker);

  // Section validators name fields relative to their own section.
  auto check = [&](const std::string& section, auto&& fn) {
    try {
      fn();
    } catch (const ContractViolation& e) {
      std::string msg = e.what();
      if (!section.empty() && msg.rfind(section, 0) != 0) {
        const auto leaf = section.substr(section.rfind('.') + 1);
        msg = msg.rfind(leaf + ".", 0) == 0 ? section.substr(0, section.size() - leaf.size()) + msg
                                            : section + ": " + msg;
      }
      throw ConfigError(r.line_for(msg), msg);
    }
  };
  check("agent", [&] { validate(config.agent); });
  check("agent.embedder", [&] { validate(config.agent.embedder); });
  check("attacker.embedder", [&] { validate(config.attacker.embedder); });
  check("attacker.llm", [&] { validate(config.attacker.llm); });
  check("attacker.engine", [&] { validate(config.attacker.engine); });
  if (config.agent.kb_path.empty()) throw ConfigError(0, "agent.kb_path is required");
  return config;
}

std::string embedder_kind_name(EmbedderKind k) { return k == EmbedderKind::Remote ? "remote" : "ngram"; }

nlohmann::json embedder_json(const EmbedderSpec& s) {
  nlohmann::json j{{"kind", embedder_kind_name(s.kind)}, {"dim", s.dim}, {"seed", s.seed}};
  if (s.kind == EmbedderKind::Remote) {
    j["endpoint"] = s.endpoint;
    j["model_name"] = s.model_name;
    j["timeout_s"] = s.timeout_s;
    j["retries"] = s.retries;
    j["batch_size"] = s.batch_size;
    j["max_in_flight"] = s.max_in_flight;
  }
  return j;
}

}  // namespace

AppConfig default_config() {
  AppConfig c;
  c.attacker.llm.seed = 2002;
  c.attacker.engine.seed = 2002;
  return c;
}

AppConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.mark.line >= 0 ? static_cast<std::size_t>(e.mark.line) + 1 : 0, e.msg);
  }
  return build(root, base_dir, true);
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::absolute(path).parent_path());
}

nlohmann::json to_json(const AppConfig& c) {
  const auto& a = c.agent;
  nlohmann::json obey = nlohmann::json::object();
  for (const auto& [id, p] : a.compliance.obey_prob) obey[std::to_string(id)] = p;
  nlohmann::json agent{
      {"top_k", a.top_k},
      {"temperature", a.temperature},
      {"kb_path", a.kb_path.empty() ? std::string() : std::filesystem::absolute(a.kb_path).string()},
      {"template", a.prompt.name == "custom" ? a.prompt.body : a.prompt.name},
      {"seed", a.seed},
      {"embedder", embedder_json(a.embedder)},
      {"compliance",
       {{"obey_prob", obey},
        {"noise_rate", a.compliance.noise_rate},
        {"max_chunks_emitted", a.compliance.max_chunks_emitted}}},
  };
  if (!a.guard_marker.empty()) agent["guard_marker"] = a.guard_marker;
  if (!a.command_pool.empty()) agent["command_pool"] = a.command_pool;
  // The admin token is a credential and stays out of snapshots.

  const auto& t = c.attacker;
  nlohmann::json llm{{"kind", t.llm.kind == LlmKind::Remote ? "remote" : "mock"},
                     {"seed", t.llm.seed},
                     {"temperature", t.llm.temperature},
                     {"max_tokens", t.llm.max_tokens},
                     {"max_anchors_per_chunk", t.llm.max_anchors_per_chunk}};
  if (t.llm.kind == LlmKind::Remote) {
    llm["endpoint"] = t.llm.endpoint;
    llm["model_name"] = t.llm.model_name;
    llm["timeout_s"] = t.llm.timeout_s;
    llm["retries"] = t.llm.retries;
  }
  if (!t.llm.base_query_template.empty()) llm["base_query_template"] = t.llm.base_query_template;
  if (!t.llm.anchors_template.empty()) llm["anchors_template"] = t.llm.anchors_template;

  const auto& e = t.engine;
  nlohmann::json engine{{"beta", e.beta},
                        {"alpha1", e.alpha1},
                        {"alpha2", e.alpha2},
                        {"n", e.n},
                        {"initial_anchor", e.initial_anchor},
                        {"mode", e.mode.to_string()},
                        {"seed", e.seed},
                        {"bootstrap_query", e.bootstrap_query},
                        {"penalize_sampled_anchors", e.penalize_sampled_anchors},
                        {"exhausted_step_penalty", e.exhausted_step_penalty},
                        {"gs_includes_extraction", e.gs_includes_extraction}};
  if (!e.command_pool.empty()) engine["command_pool"] = e.command_pool;

  nlohmann::json attacker{{"kind", t.kind == AttackerKind::Static ? "static" : "pirate"},
                          {"pool_size", t.pool_size},
                          {"embedder", embedder_json(t.embedder)},
                          {"llm", llm},
                          {"engine", engine}};
  if (!t.pool_path.empty()) attacker["pool_path"] = std::filesystem::absolute(t.pool_path).string();
  return {{"agent", agent}, {"attacker", attacker}};
}

AppConfig config_from_json(const nlohmann::json& j) {
  // JSON is a subset of YAML, so the snapshot goes through the same reader.
  YAML::Node root;
  try {
    root = YAML::Load(j.dump());
  } catch (const YAML::Exception& e) {
    throw ConfigError(0, e.msg);
  }
  return build(root, {}, false);
}

}  // namespace pirate
