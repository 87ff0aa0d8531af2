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

// Human-evaluation state: items, annotator assignments, scores. All state is
// derived from an append-only JSONL event log, so reopening a log replays
// the exact state it recorded.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "contradial/corpus.hpp"
#include "contradial/errors.hpp"
#include "contradial/metrics.hpp"
#include "contradial/scoring.hpp"

namespace contradial::annotation {

inline constexpr int kMaxCriterionScore = 2;

struct AnnotationItem {
  std::string item_id;
  json dialogue;  // null when the item carries no dialogue
  std::string candidate;
  std::string reference;
  std::optional<double> combined;
  std::vector<std::string> annotators;
};

struct AnnotationRecord {
  std::string item_id;
  std::string annotator_id;
  int label_consistency = 0;
  int fluency = 0;
  int completeness = 0;
  int validity = 0;
  std::string timestamp;

  bool operator==(const AnnotationRecord&) const = default;
};

inline const std::vector<std::string>& criteria() {
  static const std::vector<std::string> names{"label_consistency", "fluency", "completeness"};
  return names;
}

inline int criterion_value(const AnnotationRecord& r, std::string_view name) {
  if (name == "label_consistency") return r.label_consistency;
  if (name == "fluency") return r.fluency;
  if (name == "completeness") return r.completeness;
  if (name == "validity") return r.validity;
  throw ConfigError("unknown criterion '" + std::string(name) + "'");
}

/// Throws OutOfRange naming the first offending criterion.
inline void check_ranges(const AnnotationRecord& r) {
  for (const auto& c : criteria()) {
    const int v = criterion_value(r, c);
    if (v < 0 || v > kMaxCriterionScore) throw OutOfRange(c);
  }
  if (r.validity != 0 && r.validity != 1) throw OutOfRange("validity");
}

inline ordered_json to_json(const AnnotationRecord& r) {
  ordered_json j;
  j["item_id"] = r.item_id;
  j["annotator_id"] = r.annotator_id;
  j["label_consistency"] = r.label_consistency;
  j["fluency"] = r.fluency;
  j["completeness"] = r.completeness;
  j["validity"] = r.validity;
  j["timestamp"] = r.timestamp;
  return j;
}

/// Missing criteria are an OutOfRange error for that criterion.
inline AnnotationRecord record_from_json(const json& j) {
  AnnotationRecord r;
  r.item_id = j.value("item_id", "");
  r.annotator_id = j.value("annotator_id", "");
  auto get = [&](const char* name) {
    if (!j.contains(name) || !j[name].is_number_integer()) throw OutOfRange(name);
    return j[name].get<int>();
  };
  r.label_consistency = get("label_consistency");
  r.fluency = get("fluency");
  r.completeness = get("completeness");
  r.validity = get("validity");
  r.timestamp = j.value("timestamp", "");
  return r;
}

inline ordered_json to_json(const AnnotationItem& it, bool with_reference = true) {
  ordered_json j;
  j["item_id"] = it.item_id;
  j["dialogue"] = it.dialogue;
  j["candidate"] = it.candidate;
  if (with_reference) j["reference"] = it.reference;
  if (it.combined) j["combined"] = *it.combined;
  j["annotators"] = it.annotators;
  return j;
}

inline AnnotationItem item_from_json(const json& j) {
  AnnotationItem it;
  it.item_id = j.at("item_id").get<std::string>();
  if (it.item_id.empty()) throw ConfigError("item_id must be non-empty");
  if (j.contains("dialogue")) it.dialogue = j["dialogue"];
  it.candidate = j.value("candidate", "");
  it.reference = j.value("reference", "");
  if (j.contains("combined") && !j["combined"].is_null()) it.combined = j["combined"].get<double>();
  if (j.contains("annotators")) it.annotators = j["annotators"].get<std::vector<std::string>>();
  return it;
}

/// Items file: one item object per line (the collection queue format).
inline std::vector<AnnotationItem> parse_items(std::string_view content) {
  std::vector<AnnotationItem> out;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(item_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw MalformedLine(line_no, e.what());
    }
  }
  return out;
}

struct Agreement {
  std::size_t complete_items = 0;
  std::size_t pairs = 0;
  /// Pairwise kappa averaged over annotator pairs, per criterion and validity.
  std::map<std::string, double> kappa;
  /// Mean of per-item means.
  std::map<std::string, double> mean_per_item;
  /// Mean of per-annotator means.
  std::map<std::string, double> mean_per_annotator;
};

inline ordered_json to_json(const Agreement& a) {
  ordered_json j;
  j["complete_items"] = a.complete_items;
  j["pairs"] = a.pairs;
  j["kappa"] = a.kappa;
  j["mean_per_item"] = a.mean_per_item;
  j["mean_per_annotator"] = a.mean_per_annotator;
  return j;
}

struct CalibrationExport {
  std::vector<std::pair<std::string, scoring::CalibrationPoint>> points;
  std::vector<double> grid;
  /// Empty when every exported point is valid.
  std::optional<scoring::TauCalibration> calibration;
};

inline ordered_json to_json(const CalibrationExport& e) {
  ordered_json j;
  auto pts = ordered_json::array();
  for (const auto& [id, p] : e.points)
    pts.push_back({{"item_id", id}, {"combined", p.combined}, {"valid", p.valid}});
  j["points"] = std::move(pts);
  j["grid"] = e.grid;
  if (e.calibration) {
    j["tau"] = e.calibration->tau;
    j["saturated"] = e.calibration->saturated;
    j["max_invalid"] = e.calibration->max_invalid;
  } else {
    j["tau"] = nullptr;
  }
  return j;
}

struct AnnotatorProgress {
  std::size_t assigned = 0;
  std::size_t submitted = 0;
};

struct Progress {
  std::size_t items = 0;
  std::size_t complete = 0;
  std::map<std::string, AnnotatorProgress> annotators;
};

inline ordered_json to_json(const Progress& p) {
  ordered_json j;
  j["items"] = p.items;
  j["complete"] = p.complete;
  ordered_json per = ordered_json::object();
  for (const auto& [id, a] : p.annotators)
    per[id] = {{"assigned", a.assigned}, {"submitted", a.submitted}};
  j["annotators"] = std::move(per);
  return j;
}

/// Thread-safe. Every mutation is validated, appended to the log, then
/// applied; readers take the same lock and so see a consistent snapshot.
class AnnotationStore {
 public:
  /// In-memory store with no log.
  AnnotationStore() = default;

  /// Opens (creating if needed) the log at `path` and replays it. A trailing
  /// line without a newline is a torn write: it is dropped and truncated.
  explicit AnnotationStore(std::string path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_)) {
      const auto content = read_file(path_);
      const auto keep = replay_content(content);
      if (keep < content.size()) std::filesystem::resize_file(path_, keep);
    }
    log_.open(path_, std::ios::binary | std::ios::app);
    if (!log_) throw ConfigError("cannot open annotation log " + path_);
  }

  /// Rebuilds state from log bytes; a torn trailing line is ignored.
  static std::unique_ptr<AnnotationStore> replay(std::string_view content) {
    auto s = std::make_unique<AnnotationStore>();
    s->replay_content(content);
    return s;
  }

  void register_annotator(const std::string& id) {
    std::lock_guard lock(mu_);
    if (id.empty()) throw ConfigError("annotator id must be non-empty");
    if (annotator_set_.count(id)) return;
    commit({{"event", "annotator"}, {"id", id}});
  }

  /// Round-robin assignment starting at annotator `seed mod N` (annotators
  /// in registration order); consecutive items continue the rotation.
  std::map<std::string, std::vector<std::string>> enqueue(std::vector<AnnotationItem> items,
                                                          std::size_t per_item,
                                                          std::uint64_t seed) {
    std::lock_guard lock(mu_);
    if (per_item < 2) throw ConfigError("annotators_per_item must be >= 2");
    if (annotators_.size() < per_item)
      throw InsufficientAnnotators("need " + std::to_string(per_item) + " annotators, have " +
                                   std::to_string(annotators_.size()));
    std::set<std::string> fresh;
    for (const auto& it : items) {
      if (item_index_.count(it.item_id) || !fresh.insert(it.item_id).second)
        throw DuplicateId("duplicate item id '" + it.item_id + "'");
    }
    const auto n = annotators_.size();
    std::size_t slot = static_cast<std::size_t>(seed % n);
    std::map<std::string, std::vector<std::string>> assignment;
    for (auto& it : items) {
      it.annotators.clear();
      for (std::size_t k = 0; k < per_item; ++k) it.annotators.push_back(annotators_[(slot + k) % n]);
      slot = (slot + per_item) % n;
      assignment[it.item_id] = it.annotators;
      commit({{"event", "item"}, {"item", to_json(it)}});
    }
    return assignment;
  }

  /// Returns the item's reference explanation, revealed once scored.
  std::string submit(const AnnotationRecord& r) {
    std::lock_guard lock(mu_);
    const auto& item = find_item(r.item_id);
    if (std::find(item.annotators.begin(), item.annotators.end(), r.annotator_id) ==
        item.annotators.end())
      throw NotAssigned("annotator '" + r.annotator_id + "' is not assigned to '" + r.item_id + "'");
    check_ranges(r);
    commit({{"event", "score"}, {"record", to_json(r)}});
    return item.reference;
  }

  std::optional<AnnotationItem> next_task(const std::string& annotator) const {
    std::lock_guard lock(mu_);
    for (const auto& it : items_) {
      if (std::find(it.annotators.begin(), it.annotators.end(), annotator) == it.annotators.end())
        continue;
      if (!records_.count({it.item_id, annotator})) return it;
    }
    return std::nullopt;
  }

  std::optional<AnnotationRecord> record(const std::string& item_id,
                                         const std::string& annotator) const {
    std::lock_guard lock(mu_);
    auto f = records_.find({item_id, annotator});
    if (f == records_.end()) return std::nullopt;
    return f->second;
  }

  Progress progress() const {
    std::lock_guard lock(mu_);
    Progress p;
    p.items = items_.size();
    for (const auto& id : annotators_) p.annotators[id];
    for (const auto& it : items_) {
      if (is_complete(it)) ++p.complete;
      for (const auto& a : it.annotators) {
        ++p.annotators[a].assigned;
        if (records_.count({it.item_id, a})) ++p.annotators[a].submitted;
      }
    }
    return p;
  }

  Agreement agreement() const {
    std::lock_guard lock(mu_);
    std::vector<const AnnotationItem*> complete;
    for (const auto& it : items_)
      if (is_complete(it)) complete.push_back(&it);
    if (complete.empty()) throw NoCompleteItems("no item has every assigned score");

    Agreement out;
    out.complete_items = complete.size();
    std::vector<std::string> dims = criteria();
    dims.emplace_back("validity");

    // Pairs are keyed in sorted order, so the result does not depend on
    // which annotator of a pair is listed first.
    std::map<std::pair<std::string, std::string>, std::vector<const AnnotationItem*>> shared;
    for (const auto* it : complete) {
      auto ids = it->annotators;
      std::sort(ids.begin(), ids.end());
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t k = i + 1; k < ids.size(); ++k) shared[{ids[i], ids[k]}].push_back(it);
    }
    out.pairs = shared.size();
    for (const auto& dim : dims) {
      double sum = 0.0;
      for (const auto& [pair, its] : shared) {
        std::vector<int> a, b;
        for (const auto* it : its) {
          a.push_back(criterion_value(records_.at({it->item_id, pair.first}), dim));
          b.push_back(criterion_value(records_.at({it->item_id, pair.second}), dim));
        }
        sum += metrics::cohen_kappa(a, b);
      }
      out.kappa[dim] = sum / static_cast<double>(shared.size());
    }

    for (const auto& dim : criteria()) {
      double item_sum = 0.0;
      std::map<std::string, std::pair<double, std::size_t>> per_annotator;
      for (const auto* it : complete) {
        double s = 0.0;
        for (const auto& a : it->annotators) {
          const double v = criterion_value(records_.at({it->item_id, a}), dim);
          s += v;
          auto& acc = per_annotator[a];
          acc.first += v;
          ++acc.second;
        }
        item_sum += s / static_cast<double>(it->annotators.size());
      }
      out.mean_per_item[dim] = item_sum / static_cast<double>(complete.size());
      double ann_sum = 0.0;
      for (const auto& [_, acc] : per_annotator) ann_sum += acc.first / static_cast<double>(acc.second);
      out.mean_per_annotator[dim] = ann_sum / static_cast<double>(per_annotator.size());
    }
    return out;
  }

  /// One point per item with a combined score and at least one validity
  /// label. Validity is the majority vote; a tie counts as invalid.
  CalibrationExport calibration_export(const std::vector<double>& grid = scoring::default_grid()) const {
    std::lock_guard lock(mu_);
    CalibrationExport out;
    out.grid = grid;
    std::vector<scoring::CalibrationPoint> pts;
    for (const auto& it : items_) {
      if (!it.combined) continue;
      std::size_t votes = 0, valid = 0;
      for (const auto& a : it.annotators) {
        auto f = records_.find({it.item_id, a});
        if (f == records_.end()) continue;
        ++votes;
        valid += f->second.validity == 1 ? 1 : 0;
      }
      if (votes == 0) continue;
      scoring::CalibrationPoint p{*it.combined, 2 * valid > votes};
      out.points.emplace_back(it.item_id, p);
      pts.push_back(p);
    }
    if (pts.empty()) throw NoScoredItems("no item has both a combined score and a validity label");
    if (std::any_of(pts.begin(), pts.end(), [](const auto& p) { return !p.valid; }))
      out.calibration = scoring::calibrate_tau(pts, grid);
    return out;
  }

  /// Canonical dump of the full state; equal states give equal dumps.
  ordered_json state_json() const {
    std::lock_guard lock(mu_);
    ordered_json j;
    j["annotators"] = annotators_;
    auto items = ordered_json::array();
    for (const auto& it : items_) items.push_back(to_json(it));
    j["items"] = std::move(items);
    auto recs = ordered_json::array();
    for (const auto& [_, r] : records_) recs.push_back(to_json(r));
    j["records"] = std::move(recs);
    return j;
  }

  std::size_t event_count() const {
    std::lock_guard lock(mu_);
    return events_;
  }

 private:
  using Key = std::pair<std::string, std::string>;

  const AnnotationItem& find_item(const std::string& id) const {
    auto f = item_index_.find(id);
    if (f == item_index_.end()) throw UnknownItem("unknown item '" + id + "'");
    return items_[f->second];
  }

  bool is_complete(const AnnotationItem& it) const {
    return std::all_of(it.annotators.begin(), it.annotators.end(),
                       [&](const std::string& a) { return records_.count({it.item_id, a}) > 0; });
  }

  void commit(const ordered_json& event) {
    if (log_.is_open()) {
      log_ << event.dump() << '\n';
      log_.flush();
      if (!log_) throw ConfigError("write to annotation log failed");
    }
    apply(event);
  }

  void apply(const json& e) {
    const auto kind = e.at("event").get<std::string>();
    if (kind == "annotator") {
      const auto id = e.at("id").get<std::string>();
      if (annotator_set_.insert(id).second) annotators_.push_back(id);
    } else if (kind == "item") {
      auto it = item_from_json(e.at("item"));
      item_index_[it.item_id] = items_.size();
      items_.push_back(std::move(it));
    } else if (kind == "score") {
      auto r = record_from_json(e.at("record"));
      records_[{r.item_id, r.annotator_id}] = std::move(r);
    } else {
      throw ConfigError("unknown annotation event '" + kind + "'");
    }
    ++events_;
  }

  /// Applies every complete line; returns the byte length consumed.
  std::size_t replay_content(std::string_view content) {
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
      const auto nl = content.find('\n', pos);
      if (nl == std::string_view::npos) break;
      ++line_no;
      const auto line = content.substr(pos, nl - pos);
      if (!text::trim(line).empty()) {
        try {
          apply(json::parse(line));
        } catch (const json::exception& e) {
          throw MalformedLine(line_no, e.what());
        }
      }
      pos = nl + 1;
    }
    return pos;
  }

  mutable std::mutex mu_;
  std::string path_;
  std::ofstream log_;
  std::vector<std::string> annotators_;
  std::set<std::string> annotator_set_;
  std::vector<AnnotationItem> items_;
  std::map<std::string, std::size_t> item_index_;
  std::map<Key, AnnotationRecord> records_;
  std::size_t events_ = 0;
};

}  // namespace contradial::annotation
