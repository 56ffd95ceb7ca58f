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
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "dod/index/discovery_index.hpp"
#include "dod/search/candidates.hpp"

namespace dod {

// One equi-join between two table columns, stored with left < right.
struct JoinEdgeSpec {
  ColumnRef left;
  ColumnRef right;

  static JoinEdgeSpec make(ColumnRef a, ColumnRef b) {
    if (b < a) std::swap(a, b);
    return {std::move(a), std::move(b)};
  }

  auto operator<=>(const JoinEdgeSpec&) const = default;
  bool operator==(const JoinEdgeSpec&) const = default;

  std::string str() const { return left.str() + "=" + right.str(); }
};

struct ProjectedAttribute {
  std::string attribute;  // as written in the query view
  ColumnRef source;
};

struct ValuePredicate {
  ColumnRef column;
  std::string value;
  std::string attribute;
};

struct JoinGraph {
  std::vector<std::string> nodes;         // sorted, includes intermediate tables
  std::vector<std::string> group_tables;  // sorted
  std::vector<JoinEdgeSpec> edges;        // sorted
  ConstraintSet fulfilled;
  std::vector<ProjectedAttribute> projection;
  std::vector<ValuePredicate> value_constraints;

  std::string signature() const {
    std::string s;
    for (const auto& e : edges) s += (s.empty() ? "" : ";") + e.str();
    return s.empty() ? nodes.front() : s;
  }
};

struct JoinGraphSearch {
  std::vector<JoinGraph> graphs;
  bool truncated = false;
  std::size_t table_pairs = 0;
};

using PathProvider = std::function<std::vector<JoinPath>(const std::string&, const std::string&, int)>;

inline PathProvider index_path_provider(const DiscoveryIndex& index) {
  return [&index](const std::string& a, const std::string& b, int hops) { return index.join_paths(a, b, hops); };
}

inline bool is_spanning_tree(const std::vector<std::string>& nodes, const std::vector<JoinEdgeSpec>& edges) {
  if (nodes.empty() || edges.size() + 1 != nodes.size()) return false;
  std::map<std::string, std::string> parent;
  for (const auto& n : nodes) parent[n] = n;
  std::function<std::string(const std::string&)> find = [&](const std::string& x) {
    auto& p = parent.at(x);
    if (p != x) p = find(p);
    return p;
  };
  for (const auto& e : edges) {
    auto a = find(e.left.table);
    auto b = find(e.right.table);
    if (a == b) return false;
    parent[a] = b;
  }
  return true;
}

// Join graphs for a candidate group. For every unordered pair of group tables
// the join paths are collected; the cross product of per-pair choices (one
// path, or none) is formed and every combination whose edge union is a tree
// spanning the group is kept. Duplicates by edge set are removed, results are
// ordered by edge count and capped at `cap`.
inline JoinGraphSearch find_join_graphs(const CandidateGroup& group, const QueryView& qv, int max_hops,
                                        const PathProvider& paths, std::size_t cap = 50,
                                        std::size_t max_combinations = 200000) {
  JoinGraphSearch out;
  const auto& tables = group.tables;

  std::vector<std::vector<JoinPath>> choices;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    for (std::size_t j = i + 1; j < tables.size(); ++j) {
      ++out.table_pairs;
      choices.push_back(paths(tables[i], tables[j], max_hops));
    }
  }

  std::set<std::vector<JoinEdgeSpec>> seen;
  std::vector<JoinGraph> found;
  std::vector<const JoinPath*> picked(choices.size(), nullptr);
  std::size_t combos = 0;

  auto evaluate = [&] {
    std::set<JoinEdgeSpec> edges;
    std::set<std::string> nodes(tables.begin(), tables.end());
    for (const auto* p : picked) {
      if (!p) continue;
      for (const auto& h : p->hops) {
        edges.insert(JoinEdgeSpec::make(h.from, h.to));
        nodes.insert(h.from.table);
        nodes.insert(h.to.table);
      }
    }
    std::vector<JoinEdgeSpec> ev(edges.begin(), edges.end());
    std::vector<std::string> nv(nodes.begin(), nodes.end());
    if (!is_spanning_tree(nv, ev)) return;
    if (!seen.insert(ev).second) return;
    JoinGraph g;
    g.nodes = std::move(nv);
    g.group_tables = tables;
    g.edges = std::move(ev);
    found.push_back(std::move(g));
  };
  auto walk = [&](auto& self, std::size_t k) -> void {
    if (combos >= max_combinations) {
      out.truncated = true;
      return;
    }
    if (k == choices.size()) {
      ++combos;
      evaluate();
      return;
    }
    picked[k] = nullptr;
    self(self, k + 1);
    for (const auto& p : choices[k]) {
      picked[k] = &p;
      self(self, k + 1);
    }
    picked[k] = nullptr;
  };
  walk(walk, 0);

  std::sort(found.begin(), found.end(), [](const JoinGraph& a, const JoinGraph& b) {
    if (a.edges.size() != b.edges.size()) return a.edges.size() < b.edges.size();
    return a.edges < b.edges;
  });
  if (found.size() > cap) {
    found.resize(cap);
    out.truncated = true;
  }

  for (auto& g : found) {
    g.fulfilled = group.fulfilled;
    for (const auto& [a, src] : group.attribute_sources) g.projection.push_back({qv.attributes[a], src});
    for (const auto& [v, src] : group.value_sources) {
      const auto& attr = qv.attributes[v.attribute];
      g.value_constraints.push_back({src, qv.tuples[v.tuple].at(attr), attr});
    }
  }
  out.graphs = std::move(found);
  return out;
}

inline JoinGraphSearch find_join_graphs(const DiscoveryIndex& index, const CandidateGroup& group,
                                        const QueryView& qv, int max_hops, std::size_t cap = 50) {
  return find_join_graphs(group, qv, max_hops, index_path_provider(index), cap);
}

}  // namespace dod
