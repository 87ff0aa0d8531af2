// Copyright 2026 The contradial Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Run configuration. One TOML file with top-level constants, one section per
// backend role, scorer slots, and per-stage sections. Unknown keys are
// rejected so a typo never silently falls back to a default.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "toml.hpp"

#include "contradial/backend.hpp"
#include "contradial/errors.hpp"
#include "contradial/pipeline.hpp"
#include "contradial/prompts.hpp"
#include "contradial/scoring.hpp"

namespace contradial::config {

inline const std::vector<std::string>& backend_roles() {
  static const std::vector<std::string> roles{"analyzer", "red_team", "detector", "collector"};
  return roles;
}

struct BackendSpec {
  std::string kind = "mock";  // mock | http
  std::string id;             // report label; defaults to "mock" or the model name
  std::string script;
  std::string base_url;
  std::string model;
  std::string api_key_env = "CONTRADIAL_API_KEY";
  bool fine_tuned = false;
  GenParams params;
  int timeout_seconds = 120;
  std::size_t max_retries = 3;
  double requests_per_second = 0.0;

  std::string effective_id() const {
    if (!id.empty()) return id;
    return kind == "http" ? model : "mock";
  }
};

struct DetectionSection {
  ShotMode mode = ShotMode::zero_shot;
  bool with_explanation = false;
  pipeline::ParseStyle parse = pipeline::ParseStyle::label;
  std::string rules = "vicuna_llama";
  std::string demo_pool;  // corpus file for few-shot demos; defaults to --corpus
};

struct AnnotationSection {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string log = "annotations.jsonl";
  std::string static_dir = "ui/dist";
  std::size_t annotators_per_item = 2;
  bool reveal_reference = false;
};

struct CollectionSection {
  std::size_t max_uses = 3;
  std::size_t target = 10;
  double dedup_threshold = 0.8;
  std::size_t attempts_per_use = 3;
};

struct Config {
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  std::size_t max_parallelism = 64;
  double eta = scoring::kDefaultEta;
  double tau = scoring::kDefaultTau;
  std::vector<double> alphas = scoring::default_alphas();
  std::vector<double> grid = scoring::default_grid();
  double bucket_width = scoring::kDefaultBucketWidth;
  std::map<std::string, BackendSpec> backends;
  scoring::ScorerPlugin s1{scoring::ScorerSlot::s1, scoring::ScorerKind::lexical_f1, std::nullopt};
  scoring::ScorerPlugin s2{scoring::ScorerSlot::s2, scoring::ScorerKind::log_precision, std::nullopt};
  DetectionSection detection;
  std::map<std::string, std::string> templates;  // key -> instruction override
  AnnotationSection annotation;
  CollectionSection collection;

  /// Range checks that do not depend on which subcommand runs.
  void validate() const {
    scoring::check_eta(eta);
    if (parallelism < 1 || parallelism > max_parallelism)
      throw ConfigError("parallelism must lie in [1, " + std::to_string(max_parallelism) + "]");
    if (alphas.empty()) throw ConfigError("alphas must be non-empty");
    if (grid.empty()) throw ConfigError("grid must be non-empty");
    if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("grid must be ascending");
    if (!(bucket_width > 0.0)) throw ConfigError("bucket_width must be > 0");
    for (const auto& [role, b] : backends) {
      if (b.kind != "mock" && b.kind != "http")
        throw ConfigError("[" + role + "] kind must be \"mock\" or \"http\"");
      b.params.validate();
    }
    s1.validate();
    s2.validate();
    if (annotation.annotators_per_item < 2)
      throw ConfigError("annotation.annotators_per_item must be >= 2");
    if (collection.max_uses < 1) throw ConfigError("collection.max_uses must be >= 1");
    TemplateSet t;
    for (const auto& [k, v] : templates) t.override_instruction(k, v);
  }

  TemplateSet template_set() const {
    TemplateSet t;
    for (const auto& [k, v] : templates) t.override_instruction(k, v);
    return t;
  }

  const BackendSpec& backend(const std::string& role) const {
    auto f = backends.find(role);
    if (f == backends.end()) throw ConfigError("no backend configured for role '" + role + "'");
    return f->second;
  }
};

namespace detail {

inline void check_keys(const toml::table& t, std::string_view where,
                       std::initializer_list<std::string_view> allowed) {
  for (auto&& [k, _] : t) {
    bool ok = false;
    for (auto a : allowed) ok = ok || k.str() == a;
    if (!ok) throw ConfigError("unknown key '" + std::string(k.str()) + "' in " + std::string(where));
  }
}

template <typename T>
T get(const toml::table& t, std::string_view key, T fallback, std::string_view where) {
  const auto* node = t.get(key);
  if (!node) return fallback;
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = node->value<double>()) return *v;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node->value_exact<bool>()) return *v;
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node->value_exact<std::string>()) return *v;
  } else {
    if (auto v = node->value_exact<std::int64_t>()) {
      if (*v < 0) throw ConfigError(std::string(where) + "." + std::string(key) + " must be >= 0");
      return static_cast<T>(*v);
    }
  }
  throw ConfigError("wrong type for " + std::string(where) + "." + std::string(key));
}

inline std::vector<double> get_list(const toml::table& t, std::string_view key,
                                    std::vector<double> fallback, std::string_view where) {
  const auto* node = t.get(key);
  if (!node) return fallback;
  const auto* arr = node->as_array();
  if (!arr) throw ConfigError(std::string(where) + "." + std::string(key) + " must be an array");
  std::vector<double> out;
  for (const auto& v : *arr) {
    auto d = v.value<double>();
    if (!d) throw ConfigError(std::string(where) + "." + std::string(key) + " must hold numbers");
    out.push_back(*d);
  }
  return out;
}

inline const toml::table* section(const toml::table& root, std::string_view name) {
  const auto* node = root.get(name);
  if (!node) return nullptr;
  const auto* t = node->as_table();
  if (!t) throw ConfigError("'" + std::string(name) + "' must be a table");
  return t;
}

inline BackendSpec parse_backend(const toml::table& t, const std::string& role) {
  check_keys(t, role,
             {"kind", "id", "script", "base_url", "model", "api_key_env", "fine_tuned", "temperature",
              "top_p", "max_tokens", "seed", "timeout_seconds", "max_retries",
              "requests_per_second"});
  BackendSpec b;
  b.kind = get<std::string>(t, "kind", b.kind, role);
  b.id = get<std::string>(t, "id", b.id, role);
  b.script = get<std::string>(t, "script", b.script, role);
  b.base_url = get<std::string>(t, "base_url", b.base_url, role);
  b.model = get<std::string>(t, "model", b.model, role);
  b.api_key_env = get<std::string>(t, "api_key_env", b.api_key_env, role);
  b.fine_tuned = get<bool>(t, "fine_tuned", b.fine_tuned, role);
  b.params.temperature = get<double>(t, "temperature", b.params.temperature, role);
  b.params.top_p = get<double>(t, "top_p", b.params.top_p, role);
  b.params.max_tokens = static_cast<int>(get<std::size_t>(t, "max_tokens", 1600, role));
  if (t.contains("seed"))
    b.params.seed = static_cast<std::int64_t>(get<std::size_t>(t, "seed", 0, role));
  b.timeout_seconds = static_cast<int>(get<std::size_t>(t, "timeout_seconds", 120, role));
  b.max_retries = get<std::size_t>(t, "max_retries", b.max_retries, role);
  b.requests_per_second = get<double>(t, "requests_per_second", b.requests_per_second, role);
  return b;
}

inline scoring::ScorerPlugin parse_scorer(const toml::table& t, scoring::ScorerSlot slot,
                                          scoring::ScorerPlugin fallback) {
  const std::string where = "scorers." + std::string(to_string(slot));
  check_keys(t, where, {"kind", "endpoint"});
  scoring::ScorerPlugin p = fallback;
  if (t.contains("kind")) p.kind = scoring::parse_scorer_kind(get<std::string>(t, "kind", "", where));
  if (t.contains("endpoint")) p.endpoint = get<std::string>(t, "endpoint", "", where);
  return p;
}

}  // namespace detail

inline Config parse_config(std::string_view content, std::string_view source = "config") {
  toml::table root;
  try {
    root = toml::parse(content, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string(source) + ": " + std::string(e.description()));
  }
  using detail::get;
  detail::check_keys(root, "top level",
                     {"seed", "parallelism", "max_parallelism", "eta", "tau", "alphas", "grid",
                      "bucket_width", "analyzer", "red_team", "detector", "collector", "scorers",
                      "detection", "templates", "annotation", "collection"});
  Config c;
  c.seed = get<std::uint64_t>(root, "seed", c.seed, "top level");
  c.parallelism = get<std::size_t>(root, "parallelism", c.parallelism, "top level");
  c.max_parallelism = get<std::size_t>(root, "max_parallelism", c.max_parallelism, "top level");
  c.eta = get<double>(root, "eta", c.eta, "top level");
  c.tau = get<double>(root, "tau", c.tau, "top level");
  c.alphas = detail::get_list(root, "alphas", c.alphas, "top level");
  c.grid = detail::get_list(root, "grid", c.grid, "top level");
  c.bucket_width = get<double>(root, "bucket_width", c.bucket_width, "top level");

  for (const auto& role : backend_roles())
    if (const auto* t = detail::section(root, role)) c.backends[role] = detail::parse_backend(*t, role);

  if (const auto* s = detail::section(root, "scorers")) {
    detail::check_keys(*s, "scorers", {"s1", "s2"});
    if (const auto* t = detail::section(*s, "s1"))
      c.s1 = detail::parse_scorer(*t, scoring::ScorerSlot::s1, c.s1);
    if (const auto* t = detail::section(*s, "s2"))
      c.s2 = detail::parse_scorer(*t, scoring::ScorerSlot::s2, c.s2);
  }

  if (const auto* t = detail::section(root, "detection")) {
    detail::check_keys(*t, "detection", {"mode", "with_explanation", "parse", "rules", "demo_pool"});
    const auto mode = get<std::string>(*t, "mode", "zero_shot", "detection");
    if (mode == "zero_shot") c.detection.mode = ShotMode::zero_shot;
    else if (mode == "few_shot") c.detection.mode = ShotMode::few_shot;
    else throw ConfigError("detection.mode must be zero_shot or few_shot");
    c.detection.with_explanation = get<bool>(*t, "with_explanation", false, "detection");
    const auto parse = get<std::string>(*t, "parse", "label", "detection");
    if (parse == "label") c.detection.parse = pipeline::ParseStyle::label;
    else if (parse == "rules") c.detection.parse = pipeline::ParseStyle::rules;
    else throw ConfigError("detection.parse must be label or rules");
    c.detection.rules = get<std::string>(*t, "rules", c.detection.rules, "detection");
    c.detection.demo_pool = get<std::string>(*t, "demo_pool", "", "detection");
  }

  if (const auto* t = detail::section(root, "templates")) {
    for (auto&& [k, v] : *t) {
      auto s = v.value_exact<std::string>();
      if (!s) throw ConfigError("templates." + std::string(k.str()) + " must be a string");
      c.templates[std::string(k.str())] = *s;
    }
  }

  if (const auto* t = detail::section(root, "annotation")) {
    detail::check_keys(*t, "annotation",
                       {"host", "port", "log", "static_dir", "annotators_per_item", "reveal_reference"});
    auto& a = c.annotation;
    a.host = get<std::string>(*t, "host", a.host, "annotation");
    a.port = static_cast<int>(get<std::size_t>(*t, "port", static_cast<std::size_t>(a.port), "annotation"));
    a.log = get<std::string>(*t, "log", a.log, "annotation");
    a.static_dir = get<std::string>(*t, "static_dir", a.static_dir, "annotation");
    a.annotators_per_item = get<std::size_t>(*t, "annotators_per_item", a.annotators_per_item, "annotation");
    a.reveal_reference = get<bool>(*t, "reveal_reference", a.reveal_reference, "annotation");
  }

  if (const auto* t = detail::section(root, "collection")) {
    detail::check_keys(*t, "collection", {"max_uses", "target", "dedup_threshold", "attempts_per_use"});
    auto& col = c.collection;
    col.max_uses = get<std::size_t>(*t, "max_uses", col.max_uses, "collection");
    col.target = get<std::size_t>(*t, "target", col.target, "collection");
    col.dedup_threshold = get<double>(*t, "dedup_threshold", col.dedup_threshold, "collection");
    col.attempts_per_use = get<std::size_t>(*t, "attempts_per_use", col.attempts_per_use, "collection");
  }
  return c;
}

inline Config load_config(const std::string& path) {
  std::string content;
  try {
    content = read_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse_config(content, path);
}

inline ordered_json to_json(const BackendSpec& b) {
  ordered_json j;
  j["kind"] = b.kind;
  j["id"] = b.effective_id();
  if (b.kind == "mock") {
    j["script"] = b.script;
  } else {
    j["base_url"] = b.base_url;
    j["model"] = b.model;
    j["timeout_seconds"] = b.timeout_seconds;
    j["max_retries"] = b.max_retries;
    j["requests_per_second"] = b.requests_per_second;
  }
  j["fine_tuned"] = b.fine_tuned;
  j["temperature"] = b.params.temperature;
  j["top_p"] = b.params.top_p;
  j["max_tokens"] = b.params.max_tokens;
  if (b.params.seed) j["seed"] = *b.params.seed;
  return j;
}

/// Effective configuration snapshot for run manifests.
inline ordered_json to_json(const Config& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["parallelism"] = c.parallelism;
  j["eta"] = c.eta;
  j["tau"] = c.tau;
  j["alphas"] = c.alphas;
  j["grid"] = c.grid;
  j["bucket_width"] = c.bucket_width;
  ordered_json backends = ordered_json::object();
  for (const auto& role : backend_roles())
    if (auto f = c.backends.find(role); f != c.backends.end()) backends[role] = to_json(f->second);
  j["backends"] = std::move(backends);
  auto scorer = [](const scoring::ScorerPlugin& p) {
    ordered_json s{{"kind", std::string(to_string(p.kind))}};
    if (p.endpoint) s["endpoint"] = *p.endpoint;
    return s;
  };
  j["scorers"] = {{"s1", scorer(c.s1)}, {"s2", scorer(c.s2)}};
  j["detection"] = {{"mode", c.detection.mode == ShotMode::few_shot ? "few_shot" : "zero_shot"},
                    {"with_explanation", c.detection.with_explanation},
                    {"parse", std::string(pipeline::to_string(c.detection.parse))},
                    {"rules", c.detection.rules}};
  if (!c.templates.empty()) j["templates"] = c.templates;
  return j;
}

/// Builds the backend for a role. Mock scripts are read eagerly so a missing
/// file is a configuration error, not an evaluation error.
inline std::shared_ptr<Backend> make_backend(const BackendSpec& spec) {
  if (spec.kind == "mock") {
    if (spec.script.empty()) throw ConfigError("mock backend needs a script");
    try {
      return std::make_shared<MockBackend>(parse_script(read_file(spec.script)), spec.effective_id());
    } catch (const MalformedLine& e) {
      throw ConfigError(spec.script + ": " + e.what());
    } catch (const Error& e) {
      if (e.kind() == "ConfigError") throw;
      throw ConfigError(e.what());
    }
  }
  if (spec.kind == "http") {
    HttpBackendOptions o;
    o.base_url = spec.base_url;
    o.model = spec.model;
    o.api_key_env = spec.api_key_env;
    o.timeout = std::chrono::seconds(spec.timeout_seconds);
    o.retry.max_retries = static_cast<int>(spec.max_retries);
    o.requests_per_second = spec.requests_per_second;
    o.id = spec.effective_id();
    return std::make_shared<HttpBackend>(o);
  }
  throw ConfigError("unknown backend kind '" + spec.kind + "'");
}

}  // namespace contradial::config
