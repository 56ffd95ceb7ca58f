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

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dod/service/pipeline.hpp"

namespace dod {

enum class SessionStage { searching, classifying, awaiting_choice, complete, failed };

inline std::string to_string(SessionStage s) {
  switch (s) {
    case SessionStage::searching: return "searching";
    case SessionStage::classifying: return "classifying";
    case SessionStage::awaiting_choice: return "awaiting_choice";
    case SessionStage::complete: return "complete";
    case SessionStage::failed: return "failed";
  }
  return "failed";
}

class SessionNotFound : public std::runtime_error {
public:
  explicit SessionNotFound(const std::string& id) : std::runtime_error("unknown session '" + id + "'") {}
};

// 409-class errors: the session is not in a state that accepts the request.
class SessionConflict : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class SessionBadRequest : public std::runtime_error {
public:
  SessionBadRequest(std::string field, const std::string& what) : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

private:
  std::string field_;
};

inline std::filesystem::path default_data_dir() {
  if (const char* d = std::getenv("DOD_DATA_DIR"); d && *d) return d;
  return std::filesystem::current_path() / "dod-data";
}

struct SessionRecord {
  std::string id;
  QueryView query;
  RunConfig config;
  SessionStage stage = SessionStage::searching;
  std::string error;
  std::shared_ptr<PipelineResult> result;
  std::vector<std::pair<std::string, std::string>> choices;
  mutable std::mutex mu;
  std::condition_variable cv;
  std::thread worker;
};

// Owns every session: runs pipelines on worker threads, applies choices and
// keeps one append-only JSON-lines log per session so that state can be
// rebuilt after a restart by re-running the pipeline and replaying choices.
class SessionManager {
public:
  SessionManager(std::shared_ptr<const DiscoveryIndex> index, RunConfig base,
                 std::filesystem::path data_dir = default_data_dir(), bool recover_sessions = true)
      : index_(std::move(index)), base_(std::move(base)), data_dir_(std::move(data_dir)), caches_(*index_) {
    base_.validate();
    std::filesystem::create_directories(sessions_dir());
    if (recover_sessions) recover();
  }

  ~SessionManager() {
    std::vector<std::shared_ptr<SessionRecord>> all;
    {
      std::lock_guard lock(mu_);
      for (auto& [_, s] : sessions_) all.push_back(s);
    }
    for (auto& s : all) {
      if (s->worker.joinable()) s->worker.join();
    }
  }

  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  const DiscoveryIndex& index() const { return *index_; }
  const std::filesystem::path& data_dir() const { return data_dir_; }

  // Parses the query view document and starts a new session.
  std::string create(const std::string& document, std::optional<Strategy> strategy = std::nullopt,
                     std::optional<int> max_hops = std::nullopt) {
    QueryView qv = parse_query_view(document);
    RunConfig cfg = base_;
    if (strategy) cfg.strategy = *strategy;
    if (max_hops) cfg.max_hops = *max_hops;
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      throw SessionBadRequest(e.field(), e.what());
    }
    auto rec = std::make_shared<SessionRecord>();
    rec->id = new_id();
    rec->query = qv;
    rec->config = cfg;
    nlohmann::json line{{"type", "create"},
                        {"id", rec->id},
                        {"query", qv.to_json()},
                        {"strategy", to_string(cfg.strategy)},
                        {"max_hops", cfg.max_hops}};
    append(rec->id, line);
    start(rec, {});
    return rec->id;
  }

  std::vector<std::string> list() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, _] : sessions_) out.push_back(id);
    return out;
  }

  // Blocks until the session's pipeline has finished or `timeout` passed.
  bool wait(const std::string& id, std::chrono::milliseconds timeout = std::chrono::minutes(5)) {
    auto s = get(id);
    std::unique_lock lock(s->mu);
    return s->cv.wait_for(lock, timeout, [&] { return !running(s->stage); });
  }

  nlohmann::json status(const std::string& id) const {
    auto s = get(id);
    std::lock_guard lock(s->mu);
    nlohmann::json j{{"session_id", s->id},
                     {"stage", to_string(s->stage)},
                     {"query", s->query.to_json()},
                     {"strategy", to_string(s->config.strategy)},
                     {"max_hops", s->config.max_hops}};
    if (!s->error.empty()) j["error"] = s->error;
    if (s->result) {
      j["timings"] = s->result->timings.to_json();
      j["counts"] = s->result->counts_json();
      j["diagnostics"] = s->result->diagnostics;
      if (s->result->summary) j["summary"] = s->result->summary->to_json();
    }
    j["choices"] = nlohmann::json::array();
    for (const auto& [p, v] : s->choices) j["choices"].push_back({{"prompt_id", p}, {"view", v}});
    return j;
  }

  nlohmann::json views(const std::string& id, std::size_t page = 1, std::size_t page_size = 50) const {
    if (page < 1) throw SessionBadRequest("page", "page must be at least 1");
    if (page_size < 1 || page_size > 1000) throw SessionBadRequest("page_size", "page_size must be in [1, 1000]");
    auto s = get(id);
    std::lock_guard lock(s->mu);
    require_ready(*s);
    const auto& r = *s->result;
    nlohmann::json j{{"session_id", s->id}, {"page", page}, {"page_size", page_size}, {"views", nlohmann::json::array()}};
    auto slice = [&](std::size_t n) {
      std::size_t from = std::min(n, (page - 1) * page_size);
      return std::make_pair(from, std::min(n, from + page_size));
    };
    if (r.summary) {
      j["strategy"] = "4c-summary";
      for (const auto& vid : r.summary->pending_views) {
        const auto& v = r.store->at(vid);
        auto [from, to] = slice(v.rows.size());
        nlohmann::json jv{{"view_id", vid},
                          {"schema", v.schema},
                          {"row_count", v.rows.size()},
                          {"sources", v.sources},
                          {"rows", std::vector<Row>(v.rows.begin() + from, v.rows.begin() + to)}};
        if (auto* cv = find_view(r, vid)) jv["provenance"] = provenance_json(*cv);
        j["views"].push_back(jv);
      }
    } else {
      j["strategy"] = "multi-row";
      for (const auto& mv : r.multi_rows) {
        auto full = mv.to_json();
        auto [from, to] = slice(mv.rows.size());
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = from; i < to; ++i) rows.push_back(full["rows"][i]);
        full["rows"] = rows;
        full["row_count"] = mv.rows.size();
        j["views"].push_back(full);
      }
    }
    return j;
  }

  nlohmann::json prompt(const std::string& id) const {
    auto s = get(id);
    std::lock_guard lock(s->mu);
    require_ready(*s);
    const auto& sum = s->result->summary;
    if (!sum || !sum->next_prompt) return {{"session_id", s->id}, {"prompt", nullptr}};
    return {{"session_id", s->id}, {"prompt", sum->next_prompt->to_json()}};
  }

  nlohmann::json choose(const std::string& id, const std::string& prompt_id, const std::string& view) {
    auto s = get(id);
    {
      std::lock_guard lock(s->mu);
      if (s->stage != SessionStage::awaiting_choice || !s->result || !s->result->summary) {
        throw SessionConflict("session " + id + " has no outstanding prompt");
      }
      try {
        apply_choice(*s->result->summary, prompt_id, view);
      } catch (const ChoiceError& e) {
        if (e.kind() == ChoiceError::Kind::stale_prompt) throw SessionConflict(e.what());
        throw SessionBadRequest("view", e.what());
      }
      s->choices.emplace_back(prompt_id, view);
      append(id, {{"type", "choice"}, {"prompt_id", prompt_id}, {"view", view}});
      if (s->result->summary->complete()) s->stage = SessionStage::complete;
    }
    return status(id);
  }

  // CSV of one surviving view; without `view`, the single surviving view.
  std::string export_csv(const std::string& id, const std::string& view = {}) const {
    auto s = get(id);
    std::lock_guard lock(s->mu);
    require_ready(*s);
    const auto& r = *s->result;
    std::ostringstream os;
    if (r.summary) {
      std::string vid = view;
      if (vid.empty()) {
        if (r.summary->pending_views.size() != 1) {
          throw SessionBadRequest("view", "session has " + std::to_string(r.summary->pending_views.size()) +
                                              " surviving views; pass ?view=");
        }
        vid = *r.summary->pending_views.begin();
      }
      if (!r.summary->pending_views.count(vid)) throw SessionBadRequest("view", "view '" + vid + "' is not surviving");
      const auto& v = r.store->at(vid);
      csv::write(os, v.schema, v.rows);
      return os.str();
    }
    for (const auto& mv : r.multi_rows) {
      if (!view.empty() && view != mv.signature) continue;
      std::vector<Row> rows;
      for (const auto& e : mv.rows) rows.push_back(e.row);
      csv::write(os, mv.schema, rows);
      return os.str();
    }
    throw SessionBadRequest("view", "no multi-row view '" + view + "'");
  }

private:
  static bool running(SessionStage s) { return s == SessionStage::searching || s == SessionStage::classifying; }

  std::filesystem::path sessions_dir() const { return data_dir_ / "sessions"; }

  static const CandidateView* find_view(const PipelineResult& r, const std::string& id) {
    for (const auto& v : r.views) {
      if (v.view_id == id) return &v;
    }
    return nullptr;
  }

  static void require_ready(const SessionRecord& s) {
    if (s.stage == SessionStage::failed) throw SessionConflict("session " + s.id + " failed: " + s.error);
    if (running(s.stage) || !s.result) throw SessionConflict("session " + s.id + " is still " + to_string(s.stage));
  }

  std::shared_ptr<SessionRecord> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw SessionNotFound(id);
    return it->second;
  }

  std::string new_id() {
    static std::mt19937_64 rng(std::random_device{}());
    std::lock_guard lock(mu_);
    for (;;) {
      std::ostringstream os;
      os << std::hex << rng();
      auto id = "s" + os.str();
      if (!sessions_.count(id) && !std::filesystem::exists(sessions_dir() / (id + ".log"))) return id;
    }
  }

  void append(const std::string& id, const nlohmann::json& line) {
    std::lock_guard lock(log_mu_);
    std::ofstream out(sessions_dir() / (id + ".log"), std::ios::app | std::ios::binary);
    out << line.dump() << "\n";
    out.flush();
    if (!out) throw std::runtime_error("cannot write session log for " + id);
  }

  void start(const std::shared_ptr<SessionRecord>& rec, std::vector<std::pair<std::string, std::string>> replay_choices) {
    {
      std::lock_guard lock(mu_);
      sessions_[rec->id] = rec;
    }
    rec->worker = std::thread([this, rec, replay_choices = std::move(replay_choices)] {
      try {
        PipelineOptions opt;
        opt.on_stage = [&](PipelineStage st) {
          if (st != PipelineStage::classifying) return;
          std::lock_guard lock(rec->mu);
          rec->stage = SessionStage::classifying;
        };
        auto result = std::make_shared<PipelineResult>(run_pipeline(*index_, rec->query, rec->config, caches_, stats_, opt));
        std::lock_guard lock(rec->mu);
        rec->result = result;
        for (const auto& [p, v] : replay_choices) {
          if (!result->summary) break;
          try {
            apply_choice(*result->summary, p, v);
            rec->choices.emplace_back(p, v);
          } catch (const ChoiceError&) {
          }
        }
        rec->stage = result->summary && !result->summary->complete() ? SessionStage::awaiting_choice
                                                                      : SessionStage::complete;
      } catch (const std::exception& e) {
        std::lock_guard lock(rec->mu);
        rec->stage = SessionStage::failed;
        rec->error = e.what();
      }
      rec->cv.notify_all();
    });
  }

  void recover() {
    std::vector<std::filesystem::path> logs;
    for (const auto& e : std::filesystem::directory_iterator(sessions_dir())) {
      if (e.path().extension() == ".log") logs.push_back(e.path());
    }
    std::sort(logs.begin(), logs.end());
    for (const auto& p : logs) {
      std::ifstream in(p);
      std::string line;
      auto rec = std::make_shared<SessionRecord>();
      std::vector<std::pair<std::string, std::string>> choices;
      bool ok = false;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) continue;
        const auto type = j.value("type", "");
        try {
          if (type == "create") {
            rec->id = j.at("id").get<std::string>();
            rec->query.attributes = j.at("query").at("attributes").get<std::vector<std::string>>();
            for (const auto& t : j.at("query").at("tuples")) {
              rec->query.tuples.push_back(t.get<std::map<std::string, std::string>>());
            }
            rec->config = base_;
            rec->config.strategy = strategy_from_string(j.at("strategy").get<std::string>());
            rec->config.max_hops = j.at("max_hops").get<int>();
            ok = true;
          } else if (type == "choice") {
            choices.emplace_back(j.at("prompt_id").get<std::string>(), j.at("view").get<std::string>());
          }
        } catch (const std::exception&) {
          ok = false;
          break;
        }
      }
      if (ok) start(rec, std::move(choices));
    }
  }

  std::shared_ptr<const DiscoveryIndex> index_;
  RunConfig base_;
  std::filesystem::path data_dir_;
  EngineCaches caches_;
  JoinStats stats_;
  mutable std::mutex mu_;
  std::mutex log_mu_;
  std::map<std::string, std::shared_ptr<SessionRecord>> sessions_;
};

}  // namespace dod
