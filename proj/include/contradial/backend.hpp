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

// Chat-completion backends: an OpenAI-compatible HTTP client and a
// scripted mock, plus order-preserving bounded-parallel batching.

#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <variant>
#include <vector>

#include "contradial/corpus.hpp"
#include "contradial/errors.hpp"
#include "contradial/prompts.hpp"
#include "httplib.h"
#include "json.hpp"

namespace contradial {

struct GenParams {
  double temperature = 0.9;
  double top_p = 0.9;
  int max_tokens = 1600;
  std::optional<std::int64_t> seed;

  void validate() const {
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
    if (max_tokens <= 0) throw ConfigError("max_tokens must be > 0");
  }
};

struct Completion {
  std::string text;
  std::string backend_id;
  std::int64_t latency_ms = 0;
};

enum class BackendRole { analyzer, red_team, detector_for_reeval, collector };

inline std::string_view to_string(BackendRole r) {
  switch (r) {
    case BackendRole::analyzer: return "analyzer";
    case BackendRole::red_team: return "red_team";
    case BackendRole::detector_for_reeval: return "detector";
    case BackendRole::collector: return "collector";
  }
  return "?";
}

/// Lowercase hex SHA-256 of the prompt text; the mock script key.
inline std::string prompt_digest(std::string_view text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
  static const char* kHex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  /// Safe to call concurrently.
  virtual Completion complete(const RenderedPrompt& prompt, const GenParams& params) = 0;
};

// ---------------------------------------------------------------------------
// Mock

struct ScriptEntry {
  enum class Match { digest, queue };
  Match match = Match::digest;
  std::string key;
  std::string response;
};

inline std::vector<ScriptEntry> parse_script(std::string_view content) {
  std::vector<ScriptEntry> entries;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      if (!j.is_object()) throw std::invalid_argument("entry is not an object");
      for (const auto& [k, _] : j.items())
        if (k != "match" && k != "key" && k != "response")
          throw std::invalid_argument("unknown key '" + k + "'");
      ScriptEntry e;
      const auto match = j.at("match").get<std::string>();
      if (match == "digest") {
        e.match = ScriptEntry::Match::digest;
        e.key = j.at("key").get<std::string>();
      } else if (match == "queue") {
        e.match = ScriptEntry::Match::queue;
      } else {
        throw std::invalid_argument("match must be \"digest\" or \"queue\"");
      }
      e.response = j.at("response").get<std::string>();
      entries.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw MalformedLine(line_no, e.what());
    } catch (const std::invalid_argument& e) {
      throw MalformedLine(line_no, e.what());
    }
  }
  return entries;
}

inline std::string script_line(const ScriptEntry& e) {
  ordered_json j;
  j["match"] = e.match == ScriptEntry::Match::digest ? "digest" : "queue";
  if (e.match == ScriptEntry::Match::digest) j["key"] = e.key;
  j["response"] = e.response;
  return j.dump();
}

/// Answers from a script: digest entries first, then the ordered queue.
/// Later digest entries for the same key replace earlier ones.
class MockBackend : public Backend {
 public:
  using DelayFn = std::function<std::chrono::milliseconds(const std::string& digest)>;

  explicit MockBackend(std::vector<ScriptEntry> script, std::string id = "mock")
      : id_(std::move(id)) {
    for (auto& e : script) {
      if (e.match == ScriptEntry::Match::digest)
        by_digest_[e.key] = std::move(e.response);
      else
        queue_.push_back(std::move(e.response));
    }
  }

  static std::shared_ptr<MockBackend> from_file(const std::string& path,
                                                std::string id = "mock") {
    return std::make_shared<MockBackend>(parse_script(read_file(path)), std::move(id));
  }

  std::string id() const override { return id_; }

  /// Test hook: sleep before answering, e.g. to shuffle completion order.
  void set_delay(DelayFn fn) { delay_ = std::move(fn); }

  Completion complete(const RenderedPrompt& prompt, const GenParams&) override {
    const auto start = std::chrono::steady_clock::now();
    const auto digest = prompt_digest(prompt.text);
    if (delay_) std::this_thread::sleep_for(delay_(digest));
    std::string text;
    if (auto it = by_digest_.find(digest); it != by_digest_.end()) {
      text = it->second;
    } else {
      std::lock_guard<std::mutex> lock(mu_);
      if (queue_.empty()) throw ScriptMiss(digest);
      text = std::move(queue_.front());
      queue_.pop_front();
    }
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    return Completion{std::move(text), id_, ms.count()};
  }

 private:
  std::string id_;
  std::unordered_map<std::string, std::string> by_digest_;
  std::mutex mu_;
  std::deque<std::string> queue_;
  DelayFn delay_;
};

// ---------------------------------------------------------------------------
// HTTP

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{500};

  std::chrono::milliseconds delay(int attempt) const { return base_delay * (1 << attempt); }
};

/// Token bucket; `rate` <= 0 disables limiting.
class TokenBucket {
 public:
  explicit TokenBucket(double rate = 0.0, double burst = 1.0)
      : rate_(rate), burst_(std::max(1.0, burst)), tokens_(burst_),
        last_(std::chrono::steady_clock::now()) {}

  void acquire() {
    if (rate_ <= 0.0) return;
    for (;;) {
      std::chrono::duration<double> wait{};
      {
        std::lock_guard<std::mutex> lock(mu_);
        const auto now = std::chrono::steady_clock::now();
        tokens_ = std::min(burst_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
        last_ = now;
        if (tokens_ >= 1.0) {
          tokens_ -= 1.0;
          return;
        }
        wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
      }
      std::this_thread::sleep_for(wait);
    }
  }

 private:
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

struct HttpBackendOptions {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string model;
  std::string api_key_env = "CONTRADIAL_API_KEY";
  std::chrono::seconds timeout{120};
  RetryPolicy retry;
  double requests_per_second = 0.0;
  std::string id;  // defaults to "http:<model>"
};

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;  // without trailing slash
};

inline ParsedUrl parse_base_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base_url needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.scheme_host_port = url.substr(0, path_start);
  if (path_start != std::string::npos) out.path = url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

/// POSTs `{base_url}/chat/completions` and reads `choices[0].message.content`.
/// Transport failures and HTTP 429/5xx are retried with exponential backoff.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions opts)
      : opts_(std::move(opts)), url_(parse_base_url(opts_.base_url)),
        bucket_(opts_.requests_per_second) {
    if (const char* key = std::getenv(opts_.api_key_env.c_str())) api_key_ = key;
  }

  std::string id() const override { return opts_.id.empty() ? "http:" + opts_.model : opts_.id; }

  Completion complete(const RenderedPrompt& prompt, const GenParams& params) override {
    nlohmann::ordered_json body;
    body["model"] = opts_.model;
    body["messages"] = nlohmann::ordered_json::array(
        {nlohmann::ordered_json{{"role", "user"}, {"content", prompt.text}}});
    body["temperature"] = params.temperature;
    body["top_p"] = params.top_p;
    body["max_tokens"] = params.max_tokens;
    if (params.seed) body["seed"] = *params.seed;
    const auto payload = body.dump();

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto start = std::chrono::steady_clock::now();
    std::string last_error;
    for (int attempt = 0; attempt <= opts_.retry.max_retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(opts_.retry.delay(attempt - 1));
      bucket_.acquire();
      httplib::Client client(url_.scheme_host_port);
      client.set_connection_timeout(opts_.timeout);
      client.set_read_timeout(opts_.timeout);
      auto res = client.Post(url_.path + "/chat/completions", headers, payload,
                             "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status < 200 || res->status >= 300)
        throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      return Completion{extract_content(res->body), id(), ms.count()};
    }
    throw TransportError(last_error + " after " + std::to_string(opts_.retry.max_retries) +
                         " retries");
  }

  static std::string extract_content(const std::string& body) {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("response is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() ||
        j["choices"].empty())
      throw ProtocolError("response has no choices");
    const auto& first = j["choices"][0];
    if (!first.is_object() || !first.contains("message") || !first["message"].is_object())
      throw ProtocolError("choices[0] has no message");
    const auto& msg = first["message"];
    if (!msg.contains("content") || msg["content"].is_null()) return {};
    if (!msg["content"].is_string()) throw ProtocolError("message content is not a string");
    return msg["content"].get<std::string>();
  }

 private:
  HttpBackendOptions opts_;
  ParsedUrl url_;
  std::string api_key_;
  TokenBucket bucket_;
};

// ---------------------------------------------------------------------------
// Batching

struct BackendFailure {
  std::string kind;
  std::string message;
};

using CompletionOutcome = std::variant<Completion, BackendFailure>;

inline bool succeeded(const CompletionOutcome& o) {
  return std::holds_alternative<Completion>(o);
}

inline CompletionOutcome complete_one(Backend& backend, const RenderedPrompt& prompt,
                                      const GenParams& params) {
  try {
    return backend.complete(prompt, params);
  } catch (const Error& e) {
    return BackendFailure{e.kind(), e.what()};
  } catch (const std::exception& e) {
    return BackendFailure{"Exception", e.what()};
  }
}

/// Output i always answers prompts[i]; one item's failure never aborts
/// the others.
inline std::vector<CompletionOutcome> complete_batch(Backend& backend,
                                                     const std::vector<RenderedPrompt>& prompts,
                                                     const GenParams& params,
                                                     std::size_t parallelism,
                                                     std::size_t cap = 64) {
  if (parallelism < 1 || parallelism > cap)
    throw ConfigError("parallelism must lie in [1, " + std::to_string(cap) + "]");
  std::vector<CompletionOutcome> out(prompts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= prompts.size()) return;
      out[i] = complete_one(backend, prompts[i], params);
    }
  };
  const auto n_threads = std::min(parallelism, prompts.size());
  if (n_threads <= 1) {
    worker();
    return out;
  }
  {
    std::vector<std::jthread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  }
  return out;
}

}  // namespace contradial
