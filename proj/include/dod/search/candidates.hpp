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
#include <compare>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dod/index/discovery_index.hpp"
#include "dod/search/query_view.hpp"

namespace dod {

// Value constraint = (tuple position, attribute position) in the query view.
struct ValueConstraint {
  std::size_t tuple = 0;
  std::size_t attribute = 0;
  auto operator<=>(const ValueConstraint&) const = default;
};

struct ConstraintSet {
  std::set<std::size_t> attribute_hits;
  std::set<ValueConstraint> value_hits;

  std::size_t size() const { return attribute_hits.size() + value_hits.size(); }
  bool empty() const { return size() == 0; }

  void merge(const ConstraintSet& o) {
    attribute_hits.insert(o.attribute_hits.begin(), o.attribute_hits.end());
    value_hits.insert(o.value_hits.begin(), o.value_hits.end());
  }

  // Number of constraints in `o` not already present here.
  std::size_t novel(const ConstraintSet& o) const {
    std::size_t n = 0;
    for (auto a : o.attribute_hits) n += attribute_hits.count(a) == 0;
    for (const auto& v : o.value_hits) n += value_hits.count(v) == 0;
    return n;
  }

  bool operator==(const ConstraintSet&) const = default;

  // Canonical text used for bucketing and logs, e.g. "a0,a1|v0.0".
  std::string signature() const {
    std::string s;
    for (auto a : attribute_hits) s += (s.empty() ? "a" : ",a") + std::to_string(a);
    s += "|";
    bool first = true;
    for (const auto& v : value_hits) {
      s += (first ? "v" : ",v") + std::to_string(v.tuple) + "." + std::to_string(v.attribute);
      first = false;
    }
    return s;
  }
};

inline std::size_t total_constraints(const QueryView& qv) {
  std::size_t n = qv.attributes.size();
  for (const auto& t : qv.tuples) n += t.size();
  return n;
}

inline bool fulfills_query_view(const ConstraintSet& c, const QueryView& qv) {
  return c.size() == total_constraints(qv);
}

struct TableCandidate {
  std::string table;
  ConstraintSet constraints;
  std::map<std::size_t, std::string> attribute_columns;  // attribute position -> column
};

struct CandidateGroup {
  std::vector<std::string> tables;  // sorted
  ConstraintSet fulfilled;
  std::map<std::size_t, ColumnRef> attribute_sources;
  std::map<ValueConstraint, ColumnRef> value_sources;
};

// Relevant tables: a table qualifies by holding a column named after some
// query attribute. A value constraint counts only when the value was found in
// that same column.
inline std::vector<TableCandidate> find_candidate_tables(const DiscoveryIndex& index, const QueryView& qv) {
  std::map<std::string, TableCandidate> by_table;
  std::vector<std::vector<ColumnRef>> attr_cols(qv.attributes.size());
  for (std::size_t i = 0; i < qv.attributes.size(); ++i) {
    attr_cols[i] = index.search_attribute(qv.attributes[i]);
    for (const auto& col : attr_cols[i]) {
      auto& tc = by_table[col.table];
      tc.table = col.table;
      tc.constraints.attribute_hits.insert(i);
      tc.attribute_columns.emplace(i, col.column);
    }
  }
  for (std::size_t j = 0; j < qv.tuples.size(); ++j) {
    for (const auto& [attr, value] : qv.tuples[j]) {
      auto i = qv.attribute_position(attr);
      if (i >= qv.attributes.size()) continue;
      auto value_cols = index.search_value(value);
      std::vector<ColumnRef> both;
      std::set_intersection(attr_cols[i].begin(), attr_cols[i].end(), value_cols.begin(), value_cols.end(),
                            std::back_inserter(both));
      for (const auto& col : both) by_table[col.table].constraints.value_hits.insert({j, i});
    }
  }
  std::vector<TableCandidate> out;
  for (auto& [_, tc] : by_table) out.push_back(std::move(tc));
  return out;
}

namespace candidate_detail {

inline CandidateGroup make_group(const std::vector<const TableCandidate*>& members) {
  CandidateGroup g;
  for (const auto* m : members) {
    g.tables.push_back(m->table);
    g.fulfilled.merge(m->constraints);
  }
  // Attribute sources prefer a member whose column also satisfied a value
  // constraint on that attribute; otherwise the first member in search order.
  for (auto a : g.fulfilled.attribute_hits) {
    const TableCandidate* chosen = nullptr;
    for (const auto* m : members) {
      if (!m->constraints.attribute_hits.count(a)) continue;
      bool has_value = std::any_of(m->constraints.value_hits.begin(), m->constraints.value_hits.end(),
                                   [&](const ValueConstraint& v) { return v.attribute == a; });
      if (has_value) {
        chosen = m;
        break;
      }
      if (!chosen) chosen = m;
    }
    g.attribute_sources[a] = ColumnRef{chosen->table, chosen->attribute_columns.at(a)};
  }
  for (const auto& v : g.fulfilled.value_hits) {
    for (const auto* m : members) {
      if (m->constraints.value_hits.count(v)) {
        g.value_sources[v] = ColumnRef{m->table, m->attribute_columns.at(v.attribute)};
        break;
      }
    }
  }
  std::sort(g.tables.begin(), g.tables.end());
  return g;
}

inline bool is_subset(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace candidate_detail

// Candidate groups. Tables are sorted by constraints fulfilled (desc, then id)
// and each table in turn seeds a group that is extended, in sort order, only
// by tables contributing constraints not yet covered. Extension branches at
// every such table so that alternative completions are all visited; a branch
// ends when the query view is fully fulfilled or no later table adds anything.
// Full groups that strictly contain another full group and partial groups
// whose tables are a subset of another emitted group are dropped.
inline std::vector<CandidateGroup> find_candidate_groups(const std::vector<TableCandidate>& candidates,
                                                         const QueryView& qv, std::size_t max_groups = 10000) {
  using namespace candidate_detail;
  std::vector<const TableCandidate*> sorted;
  for (const auto& c : candidates) {
    if (!c.constraints.empty()) sorted.push_back(&c);
  }
  std::sort(sorted.begin(), sorted.end(), [](const TableCandidate* a, const TableCandidate* b) {
    if (a->constraints.size() != b->constraints.size()) return a->constraints.size() > b->constraints.size();
    return a->table < b->table;
  });

  std::map<std::vector<std::string>, CandidateGroup> emitted;
  std::vector<const TableCandidate*> members;
  auto emit = [&] {
    auto g = make_group(members);
    emitted.emplace(g.tables, std::move(g));
  };
  auto extend = [&](auto& self, std::size_t start, const ConstraintSet& covered) -> void {
    if (emitted.size() >= max_groups) return;
    bool extended = false;
    for (std::size_t t = start; t < sorted.size(); ++t) {
      if (covered.novel(sorted[t]->constraints) == 0) continue;
      extended = true;
      ConstraintSet next = covered;
      next.merge(sorted[t]->constraints);
      members.push_back(sorted[t]);
      if (fulfills_query_view(next, qv)) {
        emit();
      } else {
        self(self, t + 1, next);
      }
      members.pop_back();
    }
    if (!extended) emit();
  };

  for (std::size_t r = 0; r < sorted.size(); ++r) {
    members = {sorted[r]};
    if (fulfills_query_view(sorted[r]->constraints, qv)) {
      emit();
      continue;
    }
    extend(extend, r + 1, sorted[r]->constraints);
  }

  std::vector<CandidateGroup> all;
  for (auto& [_, g] : emitted) all.push_back(std::move(g));
  std::vector<bool> keep(all.size(), false);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const bool full = fulfills_query_view(all[i].fulfilled, qv);
    bool drop = false;
    for (std::size_t j = 0; j < all.size() && !drop; ++j) {
      if (i == j) continue;
      if (full) {
        drop = fulfills_query_view(all[j].fulfilled, qv) && all[j].tables.size() < all[i].tables.size() &&
               is_subset(all[j].tables, all[i].tables);
      } else {
        drop = all[j].tables.size() > all[i].tables.size() && is_subset(all[i].tables, all[j].tables);
      }
    }
    keep[i] = !drop;
  }
  std::vector<CandidateGroup> out;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (keep[i]) out.push_back(std::move(all[i]));
  }
  std::stable_sort(out.begin(), out.end(), [](const CandidateGroup& a, const CandidateGroup& b) {
    if (a.fulfilled.size() != b.fulfilled.size()) return a.fulfilled.size() > b.fulfilled.size();
    if (a.tables.size() != b.tables.size()) return a.tables.size() < b.tables.size();
    return a.tables < b.tables;
  });
  return out;
}

}  // namespace dod
