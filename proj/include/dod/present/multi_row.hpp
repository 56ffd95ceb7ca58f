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
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dod/fourc/result.hpp"
#include "dod/present/view_store.hpp"

namespace dod {

struct MultiRowEntry {
  Row row;
  std::vector<std::string> sources;  // views holding this row
  std::string key_value;
  bool multi = false;
};

struct MultiRowView {
  std::string signature;
  std::vector<std::string> schema;
  std::optional<std::string> key;
  std::vector<MultiRowEntry> rows;
  std::vector<std::string> multi_keys;

  nlohmann::json to_json() const {
    nlohmann::json j{{"signature", signature}, {"schema", schema}, {"multi_keys", multi_keys}};
    j["key"] = key ? nlohmann::json(*key) : nlohmann::json(nullptr);
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows) {
      j["rows"].push_back({{"row", r.row}, {"sources", r.sources}, {"key_value", r.key_value}, {"multi", r.multi}});
    }
    return j;
  }
};

// One view per schema: the distinct rows of every view in the schema with
// their sources. Rows under a key value for which two views hold different
// row sets are marked as multi-rows.
inline std::vector<MultiRowView> multi_row(const FourCResult& result, const ViewStore& store,
                                           double key_floor = kKeyScoreFloor) {
  std::vector<MultiRowView> out;
  for (const auto& bucket : result.schemas) {
    MultiRowView mv;
    mv.signature = bucket.signature;
    mv.schema = bucket.schema;
    std::vector<const StoredView*> views;
    for (const auto& id : bucket.views) views.push_back(&store.at(id));

    std::optional<std::size_t> key;
    double best = -1.0;
    for (std::size_t c = 0; c < mv.schema.size(); ++c) {
      double s = 2.0;
      for (const auto* v : views) s = std::min(s, v->fp.key_scores[c]);
      if (s > best) {
        best = s;
        key = c;
      }
    }
    if (best < key_floor) key.reset();
    if (key) mv.key = mv.schema[*key];

    std::map<Hash128, std::size_t> entry_of;
    std::map<std::string, std::map<std::string, std::set<Hash128>>> by_key;  // kv -> view -> rows
    for (const auto* v : views) {
      for (std::size_t r = 0; r < v->rows.size(); ++r) {
        auto h = v->fp.row_hash_list[r];
        auto [it, fresh] = entry_of.emplace(h, mv.rows.size());
        if (fresh) {
          MultiRowEntry e;
          e.row = v->rows[r];
          if (key) e.key_value = v->fp.cells[r][*key];
          mv.rows.push_back(std::move(e));
        }
        auto& src = mv.rows[it->second].sources;
        if (src.empty() || src.back() != v->view_id) src.push_back(v->view_id);
        if (key && !v->fp.cells[r][*key].empty()) by_key[v->fp.cells[r][*key]][v->view_id].insert(h);
      }
    }
    if (key) {
      for (const auto& [kv, per_view] : by_key) {
        bool multi = false;
        for (auto it = per_view.begin(); it != per_view.end() && !multi; ++it) {
          multi = it->second != per_view.begin()->second;
        }
        if (multi) mv.multi_keys.push_back(kv);
      }
      std::set<std::string> marked(mv.multi_keys.begin(), mv.multi_keys.end());
      for (auto& e : mv.rows) e.multi = marked.count(e.key_value) > 0;
    }
    std::stable_sort(mv.rows.begin(), mv.rows.end(),
                     [](const MultiRowEntry& a, const MultiRowEntry& b) { return a.key_value < b.key_value; });
    out.push_back(std::move(mv));
  }
  return out;
}

}  // namespace dod
