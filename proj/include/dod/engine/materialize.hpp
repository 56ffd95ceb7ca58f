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

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dod/engine/caches.hpp"
#include "dod/engine/join.hpp"
#include "dod/index/discovery_index.hpp"
#include "dod/search/join_graph.hpp"
#include "dod/util/csv.hpp"

namespace dod {

struct JoinStep {
  JoinEdgeSpec edge;
  JoinStrategy strategy = JoinStrategy::in_memory;
  std::uint64_t output_rows = 0;
  bool sampled = false;
};

struct Provenance {
  JoinGraph graph;
  std::vector<JoinStep> steps;
};

struct CandidateView {
  std::string view_id;
  std::vector<std::string> schema;
  std::vector<Row> rows;
  Provenance provenance;
  bool sampled = false;
  ConstraintSet fulfilled;

  Relation relation() const { return Relation{schema, rows}; }
};

struct MaterializeMode {
  std::optional<std::size_t> sample_k;
  bool include_value_rows = false;

  static MaterializeMode full() { return {}; }
  static MaterializeMode sample(std::size_t k, bool include_value_rows = false) { return {k, include_value_rows}; }
};

struct EngineConfig {
  JoinOptions join;
  std::uint64_t sample_seed = kSampleSeed;
  std::size_t witness_rows = 5;
};

struct EngineContext {
  const DiscoveryIndex& index;
  EngineCaches& caches;
  JoinStats& stats;
  EngineConfig config;
};

struct MaterializeCheck {
  bool ok = false;
  bool rejected_from_cache = false;
  std::string reason;
  std::vector<Row> witness;  // projected to the graph's projection order
};

// Does a cell satisfy a value constraint? Same rule as the value index: equal
// after normalization, or the cell holds every token of the value.
inline bool cell_matches_value(std::string_view cell, std::string_view value) {
  if (text::is_null(cell)) return false;
  if (text::normalize_value(cell) == text::normalize_value(value)) return true;
  auto want = text::tokenize(value);
  if (want.empty()) return false;
  auto have = text::tokenize(cell);
  std::sort(have.begin(), have.end());
  return std::all_of(want.begin(), want.end(),
                     [&](const std::string& t) { return std::binary_search(have.begin(), have.end(), t); });
}

inline std::string value_signature(const ValuePredicate& v) {
  return v.column.str() + "=" + text::normalize_value(v.value);
}

namespace materialize_detail {

struct Node {
  std::shared_ptr<const Relation> rel;
  std::vector<ColumnRef> cols;
};

inline std::size_t find_col(const Node& n, const ColumnRef& c) {
  for (std::size_t i = 0; i < n.cols.size(); ++i) {
    if (n.cols[i] == c) return i;
  }
  throw std::out_of_range("column " + c.str() + " not present in join input");
}

inline KeyMode edge_mode(const DiscoveryIndex& index, const JoinEdgeSpec& e) {
  const auto* a = index.profile(e.left);
  const auto* b = index.profile(e.right);
  if (!a || !b) return KeyMode::text;
  return key_mode_for(a->inferred_type, b->inferred_type);
}

inline Node base_node(EngineContext& ctx, const std::string& table,
                      const std::map<std::string, std::shared_ptr<const Relation>>& overrides) {
  Node n;
  if (auto it = overrides.find(table); it != overrides.end()) {
    n.rel = it->second;
  } else {
    n.rel = ctx.caches.table_cache.get(table);
  }
  for (const auto& c : n.rel->columns) n.cols.push_back(ColumnRef{table, c});
  return n;
}

inline std::shared_ptr<const Relation> filter_rows(const Relation& rel, std::size_t col, const std::string& value) {
  auto out = std::make_shared<Relation>();
  out->columns = rel.columns;
  for (const auto& r : rel.rows) {
    if (cell_matches_value(r[col], value)) out->rows.push_back(r);
  }
  return out;
}

// Join keys, in `node`, of rows satisfying any of the value predicates.
inline std::vector<std::string> value_row_keys(const Node& node, std::size_t key_col, KeyMode mode,
                                               const std::vector<ValuePredicate>& preds) {
  std::vector<std::string> keys;
  for (const auto& p : preds) {
    auto it = std::find(node.cols.begin(), node.cols.end(), p.column);
    if (it == node.cols.end()) continue;
    auto c = static_cast<std::size_t>(it - node.cols.begin());
    for (const auto& r : node.rel->rows) {
      if (!cell_matches_value(r[c], p.value)) continue;
      if (auto k = join_key(r[key_col], mode)) keys.push_back(*k);
    }
  }
  return keys;
}

// Executes the graph's joins from leaves inward. When observed cardinalities
// exist for some of the current leaf edges, the smallest is taken first.
inline Node execute(const JoinGraph& g, EngineContext& ctx, const MaterializeMode& mode,
                    const std::map<std::string, std::shared_ptr<const Relation>>& overrides,
                    std::vector<JoinStep>& steps) {
  std::vector<Node> nodes;
  std::map<std::string, std::size_t> owner;
  for (const auto& t : g.nodes) {
    owner[t] = nodes.size();
    nodes.push_back(base_node(ctx, t, overrides));
  }
  std::vector<JoinEdgeSpec> remaining = g.edges;
  while (!remaining.empty()) {
    std::map<std::size_t, int> degree;
    for (const auto& e : remaining) {
      ++degree[owner.at(e.left.table)];
      ++degree[owner.at(e.right.table)];
    }
    std::optional<std::size_t> pick;
    std::optional<std::uint64_t> best;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      const auto& e = remaining[i];
      if (degree[owner.at(e.left.table)] != 1 && degree[owner.at(e.right.table)] != 1) continue;
      auto seen = ctx.stats.lookup(e);
      if (!pick) pick = i;
      if (seen && (!best || *seen < *best)) {
        best = seen;
        pick = i;
      }
    }
    if (!pick) throw std::logic_error("join graph is not a tree");
    JoinEdgeSpec e = remaining[*pick];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(*pick));

    std::size_t a = owner.at(e.left.table);
    std::size_t b = owner.at(e.right.table);
    Node& ln = nodes[a];
    Node& rn = nodes[b];
    JoinSpec spec{find_col(ln, e.left), find_col(rn, e.right), edge_mode(ctx.index, e)};

    const Relation* lrel = ln.rel.get();
    const Relation* rrel = rn.rel.get();
    ConsistentSample sampled;
    bool did_sample = false;
    if (mode.sample_k) {
      const bool left_larger = lrel->rows.size() >= rrel->rows.size();
      const Node& big = left_larger ? ln : rn;
      const Node& small = left_larger ? rn : ln;
      std::size_t col = left_larger ? spec.left_column : spec.right_column;
      std::size_t small_col = left_larger ? spec.right_column : spec.left_column;
      // Keys of value rows on either side must survive the sample.
      std::vector<std::string> forced;
      if (mode.include_value_rows) {
        forced = value_row_keys(big, col, spec.mode, g.value_constraints);
        auto other = value_row_keys(small, small_col, spec.mode, g.value_constraints);
        forced.insert(forced.end(), other.begin(), other.end());
      }
      sampled = consistent_sample(*big.rel, col, *mode.sample_k, spec.mode, ctx.config.sample_seed,
                                  mode.include_value_rows ? &forced : nullptr);
      did_sample = sampled.rows.rows.size() < big.rel->rows.size();
      (left_larger ? lrel : rrel) = &sampled.rows;
    }

    JoinReport report;
    auto joined = std::make_shared<Relation>(join_two(*lrel, *rrel, spec, ctx.config.join, &ctx.stats, &e, &report));
    steps.push_back({e, report.strategy, report.output_rows, did_sample});

    Node merged;
    merged.rel = std::move(joined);
    merged.cols = ln.cols;
    merged.cols.insert(merged.cols.end(), rn.cols.begin(), rn.cols.end());
    nodes[a] = std::move(merged);
    nodes[b] = Node{};
    for (auto& [t, o] : owner) {
      if (o == b) o = a;
    }
  }
  return nodes[owner.at(g.nodes.front())];
}

inline std::vector<Row> project(const Node& n, const JoinGraph& g, std::size_t limit = std::string::npos) {
  std::vector<std::size_t> idx;
  for (const auto& p : g.projection) idx.push_back(find_col(n, p.source));
  std::vector<Row> out;
  for (const auto& r : n.rel->rows) {
    if (out.size() >= limit) break;
    Row row;
    row.reserve(idx.size());
    for (auto i : idx) row.push_back(r[i]);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace materialize_detail

// Runs the graph's joins and projects onto the query attributes it covers.
// Type-incompatible join keys raise JoinError; an empty join yields an empty
// view.
inline CandidateView materialize_join_graph(const JoinGraph& graph, const MaterializeMode& mode, EngineContext& ctx,
                                            std::string view_id = {}) {
  using namespace materialize_detail;
  CandidateView v;
  v.view_id = view_id.empty() ? graph.signature() : std::move(view_id);
  v.provenance.graph = graph;
  v.fulfilled = graph.fulfilled;
  for (const auto& p : graph.projection) v.schema.push_back(p.attribute);
  Node n = execute(graph, ctx, mode, {}, v.provenance.steps);
  v.rows = project(n, graph);
  v.sampled = std::any_of(v.provenance.steps.begin(), v.provenance.steps.end(),
                          [](const JoinStep& s) { return s.sampled; });
  return v;
}

// Decides whether the graph's join output holds every value constraint. Each
// constraint is pushed down to its table and checked on its own; incident
// edges that come back empty are recorded as dead ends for that constraint.
// Graphs touching a recorded dead end are rejected before reading any table.
inline MaterializeCheck check_materializable(const JoinGraph& graph, EngineContext& ctx) {
  using namespace materialize_detail;
  MaterializeCheck res;
  auto& dead = ctx.caches.deadend_cache;

  auto incident = [&](const std::string& table) {
    std::vector<JoinEdgeSpec> out;
    for (const auto& e : graph.edges) {
      if (e.left.table == table || e.right.table == table) out.push_back(e);
    }
    return out;
  };

  if (graph.value_constraints.empty()) {
    for (const auto& e : graph.edges) {
      if (dead.contains(e, "")) {
        res.rejected_from_cache = true;
        res.reason = "dead end " + e.str();
        return res;
      }
    }
  } else {
    for (const auto& v : graph.value_constraints) {
      for (const auto& e : incident(v.column.table)) {
        if (dead.contains(e, value_signature(v))) {
          res.rejected_from_cache = true;
          res.reason = "dead end " + e.str() + " for " + value_signature(v);
          return res;
        }
      }
    }
  }

  auto pair_count = [&](const JoinEdgeSpec& e, const std::map<std::string, std::shared_ptr<const Relation>>& ov) {
    Node l = base_node(ctx, e.left.table, ov);
    Node r = base_node(ctx, e.right.table, ov);
    return count_join(*l.rel, *r.rel, JoinSpec{find_col(l, e.left), find_col(r, e.right), edge_mode(ctx.index, e)});
  };

  if (graph.value_constraints.empty()) {
    for (const auto& e : graph.edges) {
      if (pair_count(e, {}) == 0) {
        dead.add(e, "");
        res.reason = "empty join " + e.str();
        return res;
      }
    }
    std::vector<JoinStep> steps;
    Node n = execute(graph, ctx, MaterializeMode::full(), {}, steps);
    if (n.rel->rows.empty()) {
      res.reason = "empty join output";
      return res;
    }
    res.witness = project(n, graph, ctx.config.witness_rows);
    res.ok = true;
    return res;
  }

  for (const auto& v : graph.value_constraints) {
    auto base = ctx.caches.table_cache.get(v.column.table);
    auto filtered = filter_rows(*base, base->column_index(v.column.column), v.value);
    if (filtered->rows.empty()) {
      res.reason = "value '" + v.value + "' not in " + v.column.str();
      return res;
    }
    std::map<std::string, std::shared_ptr<const Relation>> ov{{v.column.table, filtered}};
    for (const auto& e : incident(v.column.table)) {
      if (pair_count(e, ov) == 0) {
        dead.add(e, value_signature(v));
        res.reason = "empty join " + e.str() + " for " + value_signature(v);
        return res;
      }
    }
    std::vector<JoinStep> steps;
    Node n = execute(graph, ctx, MaterializeMode::full(), ov, steps);
    if (n.rel->rows.empty()) {
      res.reason = "value '" + v.value + "' lost in join output";
      return res;
    }
    auto w = project(n, graph, ctx.config.witness_rows);
    res.witness.insert(res.witness.end(), w.begin(), w.end());
  }
  res.ok = true;
  return res;
}

inline nlohmann::json provenance_json(const CandidateView& v) {
  nlohmann::json j;
  j["view_id"] = v.view_id;
  j["sampled"] = v.sampled;
  j["schema"] = v.schema;
  j["row_count"] = v.rows.size();
  j["tables"] = v.provenance.graph.nodes;
  j["edges"] = nlohmann::json::array();
  for (const auto& e : v.provenance.graph.edges) j["edges"].push_back({{"left", e.left.str()}, {"right", e.right.str()}});
  j["joins"] = nlohmann::json::array();
  for (const auto& s : v.provenance.steps) {
    j["joins"].push_back({{"edge", s.edge.str()},
                          {"strategy", std::string(to_string(s.strategy))},
                          {"output_rows", s.output_rows},
                          {"sampled", s.sampled}});
  }
  j["projection"] = nlohmann::json::array();
  for (const auto& p : v.provenance.graph.projection) {
    j["projection"].push_back({{"attribute", p.attribute}, {"source", p.source.str()}});
  }
  return j;
}

inline void export_view_csv(std::ostream& out, const CandidateView& v) { csv::write(out, v.schema, v.rows); }

}  // namespace dod
