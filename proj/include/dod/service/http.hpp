/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#pragma once

#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dod/service/session.hpp"

namespace dod {

// JSON API under /api/v1. Every handler delegates to SessionManager; no
// pipeline logic lives here.
class HttpServer {
public:
  explicit HttpServer(SessionManager& sessions) : sessions_(sessions) { routes(); }
  ~HttpServer() { stop(); }

  // Binds to `port` (0: any free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return bound;
  }

  // Serves on the calling thread until stopped.
  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

private:
  static void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& message, const std::string& field = {}) {
    nlohmann::json j{{"error", message}};
    if (!field.empty()) j["field"] = field;
    send_json(res, status, j);
  }

  template <typename F>
  static void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const SessionNotFound& e) {
      send_error(res, 404, e.what());
    } catch (const SessionConflict& e) {
      send_error(res, 409, e.what());
    } catch (const SessionBadRequest& e) {
      send_error(res, 400, e.what(), e.field());
    } catch (const QueryViewError& e) {
      send_error(res, 400, e.what(), e.field());
    } catch (const ConfigError& e) {
      send_error(res, 400, e.what(), e.field());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  }

  static std::size_t size_param(const httplib::Request& req, const std::string& name, std::size_t fallback) {
    if (!req.has_param(name)) return fallback;
    const auto v = req.get_param_value(name);
    auto n = text::parse_integer(v);
    if (!n || *n < 0) throw SessionBadRequest(name, name + " must be a non-negative integer");
    return static_cast<std::size_t>(*n);
  }

  void routes() {
    const std::string base = "/api/v1";
    const std::string sid = "([A-Za-z0-9_-]+)";

    server_.Post(base + "/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::optional<Strategy> strategy;
        std::optional<int> hops;
        if (req.has_param("strategy")) strategy = strategy_from_string(req.get_param_value("strategy"));
        if (req.has_param("max_hops")) hops = static_cast<int>(size_param(req, "max_hops", 0));
        auto id = sessions_.create(req.body, strategy, hops);
        send_json(res, 202, {{"session_id", id}});
      });
    });
    server_.Get(base + "/sessions", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, {{"sessions", sessions_.list()}}); });
    });
    server_.Get(base + "/sessions/" + sid, [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, sessions_.status(req.matches[1])); });
    });
    server_.Get(base + "/sessions/" + sid + "/views", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        send_json(res, 200,
                  sessions_.views(req.matches[1], size_param(req, "page", 1), size_param(req, "page_size", 50)));
      });
    });
    server_.Get(base + "/sessions/" + sid + "/prompt", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, sessions_.prompt(req.matches[1])); });
    });
    server_.Post(base + "/sessions/" + sid + "/choice", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) throw SessionBadRequest("", "body must be a JSON object");
        if (!body.contains("prompt_id") || !body["prompt_id"].is_string()) {
          throw SessionBadRequest("prompt_id", "prompt_id is required");
        }
        if (!body.contains("view") || !body["view"].is_string()) throw SessionBadRequest("view", "view is required");
        send_json(res, 200, sessions_.choose(req.matches[1], body["prompt_id"], body["view"]));
      });
    });
    server_.Get(base + "/sessions/" + sid + "/export", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto csv = sessions_.export_csv(req.matches[1], req.has_param("view") ? req.get_param_value("view") : "");
        res.status = 200;
        res.set_content(csv, "text/csv");
      });
    });
    server_.Get(base + "/attributes", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto prefix = req.has_param("prefix") ? req.get_param_value("prefix") : "";
        send_json(res, 200, {{"attributes", sessions_.index().attribute_names(prefix, size_param(req, "limit", 20))}});
      });
    });
  }

  SessionManager& sessions_;
  httplib::Server server_;
  std::thread thread_;
};

}  // namespace dod
