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

// Command-line front end. `dispatch` is the whole program minus main(), so
// tests drive it in-process.
//
// Exit codes: 0 success, 1 evaluation error, 2 configuration or usage error.

#pragma once

#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "contradial/annotation.hpp"
#include "contradial/annotation_server.hpp"
#include "contradial/backend.hpp"
#include "contradial/collection.hpp"
#include "contradial/config.hpp"
#include "contradial/corpus.hpp"
#include "contradial/pipeline.hpp"
#include "contradial/report.hpp"
#include "contradial/scoring.hpp"

namespace contradial::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitEval = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kVersion = "0.1.0";

namespace detail {

/// Flag values; unset optionals leave the config untouched.
struct Flags {
  std::string config_path;
  std::string corpus;
  std::string out;
  std::optional<std::string> backend;
  std::optional<std::string> script;
  std::optional<std::string> base_url;
  std::optional<std::string> model;
  std::optional<std::string> detector_backend;
  std::optional<std::string> detector_script;
  std::optional<std::string> strategy;
  bool use_explanation = false;
  std::string explanations;
  std::optional<double> eta;
  std::optional<double> tau;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> parallelism;
  std::optional<std::string> mode;
  bool with_explanation = false;
  std::optional<std::string> parse;
  std::optional<std::string> rules;
  // split
  double fraction = 0.2;
  std::string train_out;
  std::string test_out;
  // stats
  std::size_t reuse_limit = 3;
  // collect
  std::string topics;
  std::optional<std::size_t> target;
  std::optional<std::size_t> max_uses;
  std::string existing;
  std::string rejections;
  std::string queue;
  // calibrate
  std::string points;
  std::string annotations;
  // serve
  std::optional<std::string> log;
  std::string items;
  std::string annotators;
  std::optional<std::size_t> per_item;
  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<std::string> static_dir;
  // report
  std::string in;
  std::string format = "table";
};

inline config::Config effective_config(const Flags& f) {
  config::Config c = f.config_path.empty() ? config::Config{} : config::load_config(f.config_path);
  if (f.eta) c.eta = *f.eta;
  if (f.tau) c.tau = *f.tau;
  if (f.seed) c.seed = *f.seed;
  if (f.parallelism) c.parallelism = *f.parallelism;
  if (f.mode) {
    if (*f.mode == "zero_shot") c.detection.mode = ShotMode::zero_shot;
    else if (*f.mode == "few_shot") c.detection.mode = ShotMode::few_shot;
    else throw ConfigError("--mode must be zero_shot or few_shot");
  }
  if (f.with_explanation) c.detection.with_explanation = true;
  if (f.parse) {
    if (*f.parse == "label") c.detection.parse = pipeline::ParseStyle::label;
    else if (*f.parse == "rules") c.detection.parse = pipeline::ParseStyle::rules;
    else throw ConfigError("--parse must be label or rules");
  }
  if (f.rules) c.detection.rules = *f.rules;
  if (f.target) c.collection.target = *f.target;
  if (f.max_uses) c.collection.max_uses = *f.max_uses;
  if (f.log) c.annotation.log = *f.log;
  if (f.per_item) c.annotation.annotators_per_item = *f.per_item;
  if (f.host) c.annotation.host = *f.host;
  if (f.port) c.annotation.port = *f.port;
  if (f.static_dir) c.annotation.static_dir = *f.static_dir;
  return c;
}

/// Applies --backend/--script (and friends) to one role.
inline void override_backend(config::Config& c, const std::string& role,
                             const std::optional<std::string>& kind,
                             const std::optional<std::string>& script,
                             const std::optional<std::string>& base_url = std::nullopt,
                             const std::optional<std::string>& model = std::nullopt) {
  if (!kind && !script && !base_url && !model) return;
  auto& b = c.backends[role];
  if (kind) b.kind = *kind;
  if (script) b.script = *script;
  if (base_url) b.base_url = *base_url;
  if (model) b.model = *model;
}

inline std::string file_digest(const std::string& path) { return prompt_digest(read_file(path)); }

/// Everything needed to re-run: the effective config, seeds, backend ids and
/// input digests. Parallelism and output paths are left out on purpose:
/// they do not change results, and reports must match byte for byte.
inline ordered_json manifest(const std::string& command, const config::Config& c,
                             const std::vector<std::string>& roles,
                             const std::vector<std::pair<std::string, std::string>>& inputs) {
  ordered_json m;
  m["tool"] = "contradial";
  m["version"] = kVersion;
  m["command"] = command;
  m["seed"] = c.seed;
  auto cfg = config::to_json(c);
  cfg.erase("parallelism");
  ordered_json backends = ordered_json::object();
  bool fine_tuned = false;
  for (const auto& role : roles) {
    if (auto f = c.backends.find(role); f != c.backends.end()) {
      backends[role] = f->second.effective_id();
      if (role == "red_team" || (roles.size() == 1)) fine_tuned = f->second.fine_tuned;
    }
  }
  m["backends"] = std::move(backends);
  m["fine_tuned"] = fine_tuned;
  ordered_json in = ordered_json::object();
  for (const auto& [name, path] : inputs)
    in[name] = {{"path", path}, {"sha256", file_digest(path)}};
  m["inputs"] = std::move(in);
  m["config"] = std::move(cfg);
  return m;
}

inline void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required ") + flag);
}

inline pipeline::DetectionConfig detection_config(const config::Config& c, const Corpus& corpus) {
  pipeline::DetectionConfig d;
  d.mode = c.detection.mode;
  d.with_explanation = c.detection.with_explanation;
  d.parse = c.detection.parse;
  d.rules = load_rule_set(c.detection.rules);
  d.templates = c.template_set();
  d.parallelism = c.parallelism;
  d.parallelism_cap = c.max_parallelism;
  if (d.mode == ShotMode::few_shot) {
    const auto pool = c.detection.demo_pool.empty() ? corpus : load_corpus(c.detection.demo_pool);
    d.demos = pipeline::choose_demos(pool, c.seed);
  }
  return d;
}

inline void write_failure(const std::string& out, const char* kind, const ordered_json& manifest,
                          const Error& e) {
  if (out.empty()) return;
  ordered_json j;
  j["kind"] = kind;
  j["manifest"] = manifest;
  j["status"] = "failed";
  j["error"] = {{"kind", e.kind()}, {"message", e.what()}};
  report::write_json(out, j);
}

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_stats(const Flags& f, std::ostream& out) {
  require(f.corpus, "--corpus");
  const auto corpus = load_corpus(f.corpus);
  const auto j = stats_to_json(corpus_stats(corpus, f.reuse_limit));
  if (!f.out.empty()) report::write_json(f.out, j);
  out << j.dump(2) << '\n';
  return kExitOk;
}

inline int cmd_split(const Flags& f, std::ostream& out) {
  require(f.corpus, "--corpus");
  require(f.train_out, "--train-out");
  require(f.test_out, "--test-out");
  const auto c = effective_config(f);
  const auto split = split_corpus(load_corpus(f.corpus), f.fraction, c.seed);
  save_corpus(f.train_out, split.train);
  save_corpus(f.test_out, split.test);
  out << "train " << split.train.size() << ", test " << split.test.size() << '\n';
  return kExitOk;
}

inline int cmd_detect(const Flags& f, std::ostream& out) {
  require(f.corpus, "--corpus");
  auto c = effective_config(f);
  override_backend(c, "analyzer", f.backend, f.script, f.base_url, f.model);
  c.validate();
  const auto corpus = load_corpus(f.corpus);
  auto analyzer = config::make_backend(c.backend("analyzer"));
  auto cfg = detection_config(c, corpus);
  cfg.params = c.backend("analyzer").params;
  const auto m = manifest("detect", c, {"analyzer"}, {{"corpus", f.corpus}});
  try {
    const auto rep = pipeline::run_detection(corpus, *analyzer, cfg);
    const auto j = report::to_json(rep, m);
    if (!f.out.empty()) report::write_json(f.out, j);
    out << report::render_table(j);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    write_failure(f.out, "detection", m, e);
    throw;
  }
  return kExitOk;
}

inline int cmd_explain(const Flags& f, std::ostream& out) {
  require(f.corpus, "--corpus");
  auto c = effective_config(f);
  override_backend(c, "analyzer", f.backend, f.script, f.base_url, f.model);
  c.validate();
  const auto corpus = load_corpus(f.corpus);
  auto analyzer = config::make_backend(c.backend("analyzer"));
  pipeline::ExplanationConfig cfg;
  cfg.templates = c.template_set();
  cfg.s1 = scoring::make_scorer(c.s1);
  cfg.s2 = scoring::make_scorer(c.s2);
  cfg.eta = c.eta;
  cfg.alphas = c.alphas;
  cfg.bucket_width = c.bucket_width;
  cfg.params = c.backend("analyzer").params;
  cfg.parallelism = c.parallelism;
  cfg.parallelism_cap = c.max_parallelism;
  const auto m = manifest("explain", c, {"analyzer"}, {{"corpus", f.corpus}});
  try {
    const auto rep = pipeline::run_explanation_eval(corpus, *analyzer, cfg);
    const auto j = report::to_json(rep, m);
    if (!f.out.empty()) report::write_json(f.out, j);
    out << report::render_table(j);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    write_failure(f.out, "explanation", m, e);
    throw;
  }
  return kExitOk;
}

inline int cmd_modify(const Flags& f, std::ostream& out) {
  require(f.corpus, "--corpus");
  auto c = effective_config(f);
  override_backend(c, "red_team", f.backend, f.script, f.base_url, f.model);
  override_backend(c, "detector", f.detector_backend, f.detector_script);
  c.validate();
  const auto corpus = load_corpus(f.corpus);
  auto red_team = config::make_backend(c.backend("red_team"));
  auto detector = config::make_backend(c.backend("detector"));

  pipeline::ModificationConfig cfg;
  if (f.strategy) {
    if (*f.strategy == "direct") cfg.strategy = EditStrategy::direct;
    else if (*f.strategy == "joint") cfg.strategy = EditStrategy::joint;
    else throw ConfigError("--strategy must be direct or joint");
  }
  cfg.use_explanation = f.use_explanation;
  std::vector<std::pair<std::string, std::string>> inputs{{"corpus", f.corpus}};
  if (cfg.use_explanation) {
    if (f.explanations.empty()) throw ConfigError("--use-explanation needs --explanations");
    json ej;
    try {
      ej = json::parse(read_file(f.explanations));
    } catch (const json::exception& e) {
      throw ConfigError(f.explanations + ": " + e.what());
    }
    cfg.explanations = report::explanations_from_json(ej);
    inputs.emplace_back("explanations", f.explanations);
  }
  cfg.tau = c.tau;
  cfg.templates = c.template_set();
  cfg.params = c.backend("red_team").params;
  cfg.parallelism = c.parallelism;
  cfg.parallelism_cap = c.max_parallelism;
  cfg.detection = detection_config(c, corpus);
  cfg.detection.params = c.backend("detector").params;

  const auto m = manifest("modify", c, {"red_team", "detector"}, inputs);
  auto checkpoint = [&](const pipeline::ModificationReport& r) {
    if (!f.out.empty()) report::write_json(f.out, report::to_json(r, m));
  };
  const auto rep = pipeline::run_modification(corpus, *red_team, *detector, cfg, checkpoint);
  out << report::render_table(report::to_json(rep, m));
  return kExitOk;
}

inline int cmd_collect(const Flags& f, std::ostream& out) {
  require(f.topics, "--topics");
  require(f.out, "--out");
  auto c = effective_config(f);
  override_backend(c, "collector", f.backend, f.script, f.base_url, f.model);
  c.validate();
  auto topics = collection::load_topics(f.topics, c.collection.max_uses);
  const Corpus existing = f.existing.empty() ? Corpus{} : load_corpus(f.existing);
  auto collector = config::make_backend(c.backend("collector"));
  collection::CollectionConfig cfg;
  cfg.validation.dedup_threshold = c.collection.dedup_threshold;
  cfg.templates = c.template_set();
  cfg.params = c.backend("collector").params;
  cfg.parallelism = c.parallelism;
  cfg.attempts_per_use = c.collection.attempts_per_use;

  const auto rejections_path = f.rejections.empty() ? f.out + ".rejections.jsonl" : f.rejections;
  const auto queue_path = f.queue.empty() ? f.out + ".queue.jsonl" : f.queue;
  auto emit = [&](const collection::CollectionResult& r) {
    save_corpus(f.out, r.accepted, true);
    std::string rej, q;
    for (const auto& x : r.rejections) rej += collection::to_json(x).dump() + "\n";
    for (const auto& x : r.queue) q += collection::to_json(x).dump() + "\n";
    std::ofstream(rejections_path, std::ios::binary | std::ios::trunc) << rej;
    std::ofstream(queue_path, std::ios::binary | std::ios::trunc) << q;
    out << "accepted " << r.accepted.size() << ", rejected " << r.rejections.size() << '\n';
  };
  try {
    emit(collection::collect(topics, *collector, c.collection.target, existing, cfg));
  } catch (const collection::BudgetsExhausted& e) {
    emit(e.partial());
    throw;
  }
  return kExitOk;
}

inline int cmd_calibrate(const Flags& f, std::ostream& out) {
  auto c = effective_config(f);
  c.validate();
  std::vector<scoring::CalibrationPoint> points;
  std::vector<std::pair<std::string, std::string>> inputs;
  if (!f.points.empty()) {
    std::size_t line_no = 0;
    const auto content = read_file(f.points);
    for (auto line : text::split_lines(content)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      try {
        const auto j = json::parse(line);
        points.push_back({j.at("combined").get<double>(), j.at("valid").get<bool>()});
      } catch (const json::exception& e) {
        throw MalformedLine(line_no, e.what());
      }
    }
    inputs.emplace_back("points", f.points);
  } else if (!f.annotations.empty()) {
    auto store = annotation::AnnotationStore::replay(read_file(f.annotations));
    for (const auto& [_, p] : store->calibration_export(c.grid).points) points.push_back(p);
    inputs.emplace_back("annotations", f.annotations);
  } else {
    throw ConfigError("calibrate needs --points or --annotations");
  }
  const auto cal = scoring::calibrate_tau(points, c.grid);
  const auto j = report::to_json(cal, points, c.grid, manifest("calibrate", c, {}, inputs));
  if (!f.out.empty()) report::write_json(f.out, j);
  out << report::render_table(j);
  return kExitOk;
}

inline int cmd_agreement(const Flags& f, std::ostream& out) {
  require(f.annotations, "--annotations");
  const auto c = effective_config(f);
  auto store = annotation::AnnotationStore::replay(read_file(f.annotations));
  const auto j = report::to_json(store->agreement(), f.model.value_or("model"),
                                 manifest("agreement", c, {}, {{"annotations", f.annotations}}));
  if (!f.out.empty()) report::write_json(f.out, j);
  out << report::render_table(j);
  return kExitOk;
}

inline int cmd_serve(const Flags& f, std::ostream& out) {
  auto c = effective_config(f);
  c.validate();
  annotation::AnnotationStore store(c.annotation.log);
  std::stringstream ids(f.annotators);
  for (std::string id; std::getline(ids, id, ',');)
    if (!text::trim(id).empty()) store.register_annotator(std::string(text::trim(id)));
  if (!f.items.empty())
    store.enqueue(annotation::parse_items(read_file(f.items)), c.annotation.annotators_per_item, c.seed);
  annotation::ServerOptions opts;
  opts.host = c.annotation.host;
  opts.port = c.annotation.port;
  opts.static_dir = c.annotation.static_dir;
  opts.reveal_reference = c.annotation.reveal_reference;
  opts.grid = c.grid;
  annotation::AnnotationServer server(store, opts);
  const int port = server.bind();
  out << "listening on " << opts.host << ':' << port
      << (server.serves_ui() ? " (serving UI)" : " (API only)") << std::endl;
  server.listen();
  return kExitOk;
}

inline int cmd_report(const Flags& f, std::ostream& out) {
  require(f.in, "--in");
  json j;
  try {
    j = json::parse(read_file(f.in));
  } catch (const json::exception& e) {
    throw ConfigError(f.in + ": " + e.what());
  }
  if (f.format == "json") {
    out << j.dump(2) << '\n';
  } else if (j.value("status", "") == "failed") {
    out << j.value("kind", "") << " run failed: " << j["error"].value("message", "") << '\n';
    return kExitEval;
  } else {
    out << report::render_table(j);
  }
  return kExitOk;
}

}  // namespace detail

inline int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contradiction detection, explanation and modification for dialogue models",
               "contradial"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  detail::Flags f;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config_path, "TOML configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "Random seed");
  };
  auto corpus_opt = [&](CLI::App* sub) {
    sub->add_option("--corpus", f.corpus, "Corpus file (JSONL)");
  };
  auto backend_opts = [&](CLI::App* sub) {
    sub->add_option("--backend", f.backend, "Backend kind for the primary role (mock|http)")
        ->check(CLI::IsMember({"mock", "http"}));
    sub->add_option("--script", f.script, "Mock script for the primary role");
    sub->add_option("--base-url", f.base_url, "OpenAI-compatible endpoint base URL");
    sub->add_option("--model", f.model, "Model name sent to the endpoint");
    sub->add_option("--parallelism", f.parallelism, "Concurrent backend requests");
  };

  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  common(stats);
  corpus_opt(stats);
  stats->add_option("--out", f.out, "Write statistics JSON here");
  stats->add_option("--reuse-limit", f.reuse_limit, "Topic reuse limit K");

  auto* split = app.add_subcommand("split", "Stratified train/test split");
  common(split);
  corpus_opt(split);
  split->add_option("--fraction", f.fraction, "Test fraction");
  split->add_option("--train-out", f.train_out, "Train corpus output");
  split->add_option("--test-out", f.test_out, "Test corpus output");

  auto* detect = app.add_subcommand("detect", "Contradiction detection");
  common(detect);
  corpus_opt(detect);
  backend_opts(detect);
  detect->add_option("--out", f.out, "Report JSON");
  detect->add_option("--mode", f.mode, "zero_shot or few_shot");
  detect->add_flag("--with-explanation", f.with_explanation, "Ask for an explanation too");
  detect->add_option("--parse", f.parse, "label or rules");
  detect->add_option("--rules", f.rules, "Rule set name or JSON file");

  auto* explain = app.add_subcommand("explain", "Explanation generation and scoring");
  common(explain);
  corpus_opt(explain);
  backend_opts(explain);
  explain->add_option("--out", f.out, "Report JSON");
  explain->add_option("--eta", f.eta, "Weight of the second score, in (0, 1)");

  auto* modify = app.add_subcommand("modify", "Revise contradictory dialogues and re-detect");
  common(modify);
  corpus_opt(modify);
  backend_opts(modify);
  modify->add_option("--out", f.out, "Report JSON");
  modify->add_option("--strategy", f.strategy, "direct or joint");
  modify->add_flag("--use-explanation", f.use_explanation, "Guide revisions with explanations");
  modify->add_option("--explanations", f.explanations, "Explanation report from `explain`");
  modify->add_option("--tau", f.tau, "Explanation acceptance threshold");
  modify->add_option("--detector-backend", f.detector_backend, "Detector backend kind")
      ->check(CLI::IsMember({"mock", "http"}));
  modify->add_option("--detector-script", f.detector_script, "Mock script for the detector");
  modify->add_option("--mode", f.mode, "Detector prompt: zero_shot or few_shot");
  modify->add_option("--parse", f.parse, "Detector parse style: label or rules");
  modify->add_option("--rules", f.rules, "Rule set name or JSON file");

  auto* collect = app.add_subcommand("collect", "Generate synthetic contradictory dialogues");
  common(collect);
  backend_opts(collect);
  collect->add_option("--topics", f.topics, "category<TAB>keyword file");
  collect->add_option("--out", f.out, "Corpus file to append accepted dialogues to");
  collect->add_option("--target", f.target, "Dialogues to accept");
  collect->add_option("--max-uses", f.max_uses, "Per-topic budget");
  collect->add_option("--existing", f.existing, "Corpus to deduplicate against");
  collect->add_option("--rejections", f.rejections, "Rejection log (JSONL)");
  collect->add_option("--queue", f.queue, "Annotation queue items (JSONL)");

  auto* calibrate = app.add_subcommand("calibrate", "Choose tau from validity-labelled scores");
  common(calibrate);
  calibrate->add_option("--points", f.points, "JSONL of {combined, valid}");
  calibrate->add_option("--annotations", f.annotations, "Annotation event log");
  calibrate->add_option("--out", f.out, "Report JSON");

  auto* agreement = app.add_subcommand("agreement", "Human-evaluation means and kappa from an annotation log");
  common(agreement);
  agreement->add_option("--annotations", f.annotations, "Annotation event log");
  agreement->add_option("--model", f.model, "Model name for the table row");
  agreement->add_option("--out", f.out, "Report JSON");

  auto* serve = app.add_subcommand("serve", "Run the annotation service");
  common(serve);
  serve->add_option("--log", f.log, "Event log");
  serve->add_option("--items", f.items, "Items to enqueue (JSONL)");
  serve->add_option("--annotators", f.annotators, "Comma-separated annotator ids to register");
  serve->add_option("--per-item", f.per_item, "Annotators per item");
  serve->add_option("--host", f.host, "Bind address");
  serve->add_option("--port", f.port, "Port");
  serve->add_option("--static-dir", f.static_dir, "UI bundle directory");

  auto* rep = app.add_subcommand("report", "Re-render a stored report");
  rep->add_option("--in", f.in, "Report JSON")->required();
  rep->add_option("--format", f.format, "table or json")->check(CLI::IsMember({"table", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (stats->parsed()) return detail::cmd_stats(f, out);
    if (split->parsed()) return detail::cmd_split(f, out);
    if (detect->parsed()) return detail::cmd_detect(f, out);
    if (explain->parsed()) return detail::cmd_explain(f, out);
    if (modify->parsed()) return detail::cmd_modify(f, out);
    if (collect->parsed()) return detail::cmd_collect(f, out);
    if (calibrate->parsed()) return detail::cmd_calibrate(f, out);
    if (agreement->parsed()) return detail::cmd_agreement(f, out);
    if (serve->parsed()) return detail::cmd_serve(f, out);
    if (rep->parsed()) return detail::cmd_report(f, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << e.kind() << ": " << e.what() << '\n';
    return kExitEval;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitEval;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace contradial::cli
