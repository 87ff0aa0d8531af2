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

// JSON-over-HTTP front for AnnotationStore.
//
//   GET  /api/tasks/next?annotator=ID
//   POST /api/tasks/{item_id}/score
//   GET  /api/agreement
//   GET  /api/calibration
//   GET  /api/progress
//
// Errors come back as {"error": kind, "message": text}.

#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

#include "httplib.h"

#include "contradial/annotation.hpp"

namespace contradial::annotation {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds an ephemeral port
  /// Served at "/" when the directory exists.
  std::string static_dir;
  /// When false the reference explanation is only returned after scoring.
  bool reveal_reference = false;
  std::vector<double> grid = scoring::default_grid();
};

inline int http_status(const Error& e) {
  const auto& k = e.kind();
  if (k == "NotAssigned" || k == "NoCompleteItems" || k == "NoScoredItems") return 409;
  if (k == "OutOfRange") return 422;
  if (k == "UnknownItem") return 404;
  return 400;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class AnnotationServer {
 public:
  AnnotationServer(AnnotationStore& store, ServerOptions options)
      : store_(store), options_(std::move(options)) {
    routes();
  }

  ~AnnotationServer() { stop(); }

  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Binds the socket; returns the bound port.
  int bind() {
    if (options_.port == 0) {
      port_ = server_.bind_to_any_port(options_.host);
    } else {
      port_ = server_.bind_to_port(options_.host, options_.port) ? options_.port : -1;
    }
    if (port_ < 0) throw ConfigError("cannot bind " + options_.host + ":" + std::to_string(options_.port));
    return port_;
  }

  /// Blocks until stop().
  void listen() { server_.listen_after_bind(); }

  void stop() {
    if (server_.is_running()) server_.stop();
  }

  void wait_until_ready() const { server_.wait_until_ready(); }

  int port() const { return port_; }

  bool serves_ui() const { return serves_ui_; }

 private:
  static void send(httplib::Response& res, int status, const ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& kind,
                         const std::string& message) {
    send(res, status, ordered_json{{"error", kind}, {"message", message}});
  }

  template <typename F>
  static void guarded(httplib::Response& res, F&& body) {
    try {
      body();
    } catch (const Error& e) {
      send_error(res, http_status(e), e.kind(), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "BadRequest", e.what());
    }
  }

  void routes() {
    server_.Get("/api/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto annotator = req.get_param_value("annotator");
        if (annotator.empty()) annotator = req.get_header_value("X-Annotator-Id");
        if (annotator.empty()) {
          send_error(res, 400, "BadRequest", "missing annotator id");
          return;
        }
        const auto item = store_.next_task(annotator);
        const auto prog = store_.progress();
        ordered_json body;
        body["item"] = item ? to_json(*item, options_.reveal_reference) : ordered_json(nullptr);
        auto f = prog.annotators.find(annotator);
        const std::size_t assigned = f == prog.annotators.end() ? 0 : f->second.assigned;
        const std::size_t submitted = f == prog.annotators.end() ? 0 : f->second.submitted;
        body["remaining"] = assigned - submitted;
        body["submitted"] = submitted;
        send(res, 200, body);
      });
    });

    server_.Post(R"(/api/tasks/([^/]+)/score)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   guarded(res, [&] {
                     const auto body = json::parse(req.body);
                     if (!body.is_object()) throw ConfigError("record must be a JSON object");
                     auto record = record_from_json(body);
                     record.item_id = req.matches[1];
                     if (record.annotator_id.empty())
                       record.annotator_id = req.get_header_value("X-Annotator-Id");
                     if (record.timestamp.empty()) record.timestamp = utc_timestamp();
                     const auto reference = store_.submit(record);
                     send(res, 200, ordered_json{{"ok", true}, {"reference", reference}});
                   });
                 });

    server_.Get("/api/agreement", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send(res, 200, to_json(store_.agreement())); });
    });

    server_.Get("/api/calibration", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send(res, 200, to_json(store_.calibration_export(options_.grid))); });
    });

    server_.Get("/api/progress", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send(res, 200, to_json(store_.progress())); });
    });

    std::error_code ec;
    if (!options_.static_dir.empty() && std::filesystem::is_directory(options_.static_dir, ec))
      serves_ui_ = server_.set_mount_point("/", options_.static_dir);
  }

  AnnotationStore& store_;
  ServerOptions options_;
  httplib::Server server_;
  int port_ = -1;
  bool serves_ui_ = false;
};

}  // namespace contradial::annotation
