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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dod/engine/materialize.hpp"
#include "dod/fourc/classify.hpp"
#include "dod/present/multi_row.hpp"
#include "dod/present/summary.hpp"
#include "dod/search/candidates.hpp"
#include "dod/search/join_graph.hpp"
#include "dod/service/config.hpp"

namespace dod {

struct PipelineTimings {
  double does_join = 0;
  double does_materialize = 0;
  double materialize = 0;
  double fourc = 0;
  double other = 0;
  double total = 0;

  double category_sum() const { return does_join + does_materialize + materialize + fourc + other; }

  nlohmann::json to_json() const {
    return {{"does_join", does_join}, {"does_materialize", does_materialize}, {"materialize", materialize},
            {"4c", fourc},            {"other", other},                       {"total", total}};
  }
};

// Accumulates wall time into one category at a time.
class StageClock {
public:
  using clock = std::chrono::steady_clock;

  explicit StageClock(double* slot) : slot_(slot), start_(clock::now()) {}
  ~StageClock() { stop(); }
  void stop() {
    if (!slot_) return;
    *slot_ += std::chrono::duration<double>(clock::now() - start_).count();
    slot_ = nullptr;
  }

private:
  double* slot_;
  clock::time_point start_;
};

enum class PipelineStage { searching, classifying, done };

struct PipelineResult {
  QueryView query;
  std::vector<TableCandidate> candidates;
  std::vector<CandidateGroup> groups;
  std::size_t full_groups = 0;
  std::size_t table_pairs = 0;
  std::size_t join_graphs = 0;
  std::size_t materializable = 0;
  bool join_graphs_truncated = false;
  std::vector<JoinGraph> materializable_graphs;  // in view id order
  std::vector<CandidateView> views;
  std::vector<std::string> diagnostics;
  std::optional<FourCResult> fourc;
  std::shared_ptr<ViewStore> store;
  std::optional<SummarySession> summary;  // 4c-summary strategy
  std::vector<MultiRowView> multi_rows;   // multi-row strategy
  PipelineTimings timings;
  bool dry_run = false;

  nlohmann::json counts_json() const {
    return {{"candidate_tables", candidates.size()},
            {"candidate_groups", groups.size()},
            {"full_groups", full_groups},
            {"table_pairs", table_pairs},
            {"join_graphs", join_graphs},
            {"join_graphs_truncated", join_graphs_truncated},
            {"materializable", materializable},
            {"views", views.size()}};
  }
};

struct PipelineOptions {
  bool dry_run = false;
  std::function<void(PipelineStage)> on_stage;
};

inline EngineConfig engine_config(const RunConfig& cfg) {
  EngineConfig e;
  e.join.memory_budget_bytes = cfg.memory_budget_mb << 20;
  return e;
}

// Search, materialization, classification and presentation for one query view. Views are
// numbered v1, v2, ... in join-graph order, so the numbering is stable for a
// given index and configuration. Groups fulfilling the whole query view are
// used when any exist; otherwise the partial groups are.
inline PipelineResult run_pipeline(const DiscoveryIndex& index, const QueryView& qv, const RunConfig& cfg,
                                   EngineCaches& caches, JoinStats& stats, const PipelineOptions& opt = {}) {
  cfg.validate();
  PipelineResult res;
  res.query = qv;
  res.dry_run = opt.dry_run;
  StageClock total(&res.timings.total);
  if (opt.on_stage) opt.on_stage(PipelineStage::searching);

  std::vector<const CandidateGroup*> selected;
  {
    StageClock c(&res.timings.other);
    res.candidates = find_candidate_tables(index, qv);
    res.groups = find_candidate_groups(res.candidates, qv);
    for (const auto& g : res.groups) {
      if (fulfills_query_view(g.fulfilled, qv)) ++res.full_groups;
    }
    for (const auto& g : res.groups) {
      if (res.full_groups == 0 || fulfills_query_view(g.fulfilled, qv)) selected.push_back(&g);
    }
  }

  EngineContext ctx{index, caches, stats, engine_config(cfg)};
  const auto mode = cfg.sample ? MaterializeMode::sample(cfg.sample_k) : MaterializeMode::full();
  for (const auto* g : selected) {
    JoinGraphSearch search;
    {
      StageClock c(&res.timings.does_join);
      search = find_join_graphs(*g, qv, cfg.max_hops, caches.joinpath_cache.provider(), cfg.join_graph_cap);
    }
    res.table_pairs += search.table_pairs;
    res.join_graphs += search.graphs.size();
    res.join_graphs_truncated |= search.truncated;
    for (const auto& graph : search.graphs) {
      MaterializeCheck check;
      try {
        StageClock c(&res.timings.does_materialize);
        check = check_materializable(graph, ctx);
      } catch (const JoinError& e) {
        res.diagnostics.push_back(graph.signature() + ": " + e.what());
        continue;
      }
      if (!check.ok) continue;
      ++res.materializable;
      if (opt.dry_run) continue;
      try {
        StageClock c(&res.timings.materialize);
        auto id = "v" + std::to_string(res.views.size() + 1);
        res.views.push_back(materialize_join_graph(graph, mode, ctx, id));
        res.materializable_graphs.push_back(graph);
      } catch (const JoinError& e) {
        res.diagnostics.push_back(graph.signature() + ": " + e.what());
      }
    }
  }

  if (!opt.dry_run) {
    if (opt.on_stage) opt.on_stage(PipelineStage::classifying);
    StageClock c(&res.timings.fourc);
    res.fourc = classify(res.views);
    c.stop();
    StageClock p(&res.timings.other);
    res.store = std::make_shared<ViewStore>(res.views);
    if (cfg.strategy == Strategy::multi_row) {
      res.multi_rows = multi_row(*res.fourc, *res.store);
    } else {
      res.summary = summarize(std::make_shared<const FourCResult>(*res.fourc), res.store);
    }
  }
  if (opt.on_stage) opt.on_stage(PipelineStage::done);
  total.stop();
  return res;
}

}  // namespace dod
