// Copyright 2026 The IQS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// HTTP binding for AnnotationService.
//
//   GET  /tasks/next?annotator=ID   200 task payload | 204 nothing left
//   POST /annotators                {"annotator_id": ID}
//   POST /responses                 annotation record (annotation file schema)
//   GET  /progress                  slot counts per method
//   GET  /export                    persisted records, one JSON per line

#include <filesystem>
#include <optional>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "iqs/annotation_service.hpp"
#include "iqs/error.hpp"
#include "iqs/ingestion.hpp"

namespace iqs {

inline int HttpStatusFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return 400;
    case ErrorKind::kUsage: return 400;
    case ErrorKind::kRegistration: return 403;
    case ErrorKind::kLeaseConflict: return 409;
    default: return 422;
  }
}

class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationService& service,
                            std::optional<std::filesystem::path> static_dir = std::nullopt)
      : service_(service) {
    if (static_dir) server_.set_mount_point("/", static_dir->string());

    server_.Get("/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
      Handle(res, [&] {
        if (!req.has_param("annotator"))
          throw Error(ErrorKind::kUsage, "missing ?annotator=", "annotator");
        auto task = service_.NextTask(req.get_param_value("annotator"));
        if (!task) {
          res.status = 204;
          return;
        }
        Reply(res, 200, *task);
      });
    });

    server_.Post("/annotators", [this](const httplib::Request& req, httplib::Response& res) {
      Handle(res, [&] {
        const Json body = ParseBody(req);
        const std::string id =
            detail::AsString(detail::Require(body, "annotator_id", {}), "annotator_id", {});
        service_.RegisterAnnotator(id);
        Reply(res, 200, {{"status", "registered"}, {"annotator_id", id}});
      });
    });

    server_.Post("/responses", [this](const httplib::Request& req, httplib::Response& res) {
      Handle(res, [&] {
        const AnnotationRecord record = AnnotationFromJson(ParseBody(req), {"request", ""});
        const SubmitAck ack = service_.SubmitResponse(record.annotator_id, record);
        Reply(res, 200, {{"status", "accepted"},
                         {"sample_id", ack.sample_id},
                         {"method_id", ack.method_id},
                         {"slot", ack.slot}});
      });
    });

    server_.Get("/progress", [this](const httplib::Request&, httplib::Response& res) {
      Handle(res, [&] { Reply(res, 200, ProgressToJson(service_.Progress())); });
    });

    server_.Get("/export", [this](const httplib::Request&, httplib::Response& res) {
      Handle(res, [&] { res.set_content(service_.Export(), "application/x-ndjson"); });
    });
  }

  // Blocks until Stop().
  bool Listen(const std::string& host, int port) { return server_.listen(host, port); }

  int BindToAnyPort(const std::string& host) { return server_.bind_to_any_port(host); }
  bool ListenAfterBind() { return server_.listen_after_bind(); }
  void WaitUntilReady() { server_.wait_until_ready(); }
  void Stop() { server_.stop(); }

 private:
  static Json ParseBody(const httplib::Request& req) {
    try {
      return Json::parse(req.body);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorKind::kParse, std::string("request body: ") + e.what());
    }
  }

  static void Reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <typename Fn>
  static void Handle(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      Reply(res, HttpStatusFor(e.kind()),
            {{"error", e.what()}, {"kind", ErrorKindName(e.kind())}, {"field", e.field()}});
    } catch (const std::exception& e) {
      Reply(res, 500, {{"error", e.what()}, {"kind", "internal"}, {"field", ""}});
    }
  }

  AnnotationService& service_;
  httplib::Server server_;
};

}  // namespace iqs
