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

#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

namespace dod {

struct CompatibleGroup {
  std::string representative;
  std::vector<std::string> members;  // sorted, includes the representative
  bool multiplicity_mismatch = false;
};

struct ContainmentGroup {
  std::string container;
  std::vector<std::string> contained;  // sorted
};

// Two representatives whose row sets differ both ways; rows_a / rows_b are
// positions of rows missing from the other view.
struct C34Pair {
  std::string a;
  std::string b;
  std::vector<std::size_t> rows_a;
  std::vector<std::size_t> rows_b;
};

struct ComplementaryPair {
  std::string a;
  std::string b;
  std::vector<std::size_t> rows_a;
  std::vector<std::size_t> rows_b;
  std::optional<std::string> key;  // empty when no attribute qualified as key
  bool no_key = false;
};

struct ContradictionEvidence {
  std::string key_value;
  std::vector<std::string> attributes;  // attributes whose value sets differ
  std::vector<std::size_t> rows_a;
  std::vector<std::size_t> rows_b;
};

struct ContradictoryPair {
  std::string a;
  std::string b;
  std::string key;                          // most-likely key attribute k
  std::string contradiction_attribute;      // k_c
  std::vector<std::string> contradiction_values;  // V_c
  std::vector<std::string> contradictory_keys;    // every key value found contradictory
  std::vector<ContradictionEvidence> evidence;
  std::vector<std::size_t> complementary_rows_a;  // differing rows with non-shared keys
  std::vector<std::size_t> complementary_rows_b;
  bool chased = false;  // settled by key lookups; keys are then a confirmed subset
};

struct SchemaResult {
  std::string signature;
  std::vector<std::string> schema;
  std::vector<std::string> views;
  std::vector<CompatibleGroup> c1;
  std::vector<ContainmentGroup> c2;
  std::vector<C34Pair> c34;
  std::vector<ComplementaryPair> c3;
  std::vector<ContradictoryPair> c4;
};

struct FourCMetrics {
  std::uint64_t cell_comparisons = 0;
  std::uint64_t hash_probes = 0;
  std::uint64_t pairs_full = 0;
  std::uint64_t pairs_chased = 0;
  std::uint64_t chase_attempts = 0;

  FourCMetrics& operator+=(const FourCMetrics& o) {
    cell_comparisons += o.cell_comparisons;
    hash_probes += o.hash_probes;
    pairs_full += o.pairs_full;
    pairs_chased += o.pairs_chased;
    chase_attempts += o.chase_attempts;
    return *this;
  }
};

struct FourCResult {
  std::vector<SchemaResult> schemas;  // sorted by signature
  FourCMetrics metrics;

  const SchemaResult* find(const std::string& signature) const {
    for (const auto& s : schemas) {
      if (s.signature == signature) return &s;
    }
    return nullptr;
  }

  // Bucket equality: groups, containment, candidate pairs with row indices,
  // complementary pairs and contradictory pairs with their key attribute.
  // Evidence detail and metrics are not compared.
  bool same_classification(const FourCResult& o) const {
    if (schemas.size() != o.schemas.size()) return false;
    for (std::size_t i = 0; i < schemas.size(); ++i) {
      const auto& x = schemas[i];
      const auto& y = o.schemas[i];
      if (x.signature != y.signature || x.views != y.views) return false;
      auto c1 = [](const SchemaResult& s) {
        std::vector<std::tuple<std::string, std::vector<std::string>, bool>> v;
        for (const auto& g : s.c1) v.emplace_back(g.representative, g.members, g.multiplicity_mismatch);
        return v;
      };
      auto c2 = [](const SchemaResult& s) {
        std::vector<std::pair<std::string, std::vector<std::string>>> v;
        for (const auto& g : s.c2) v.emplace_back(g.container, g.contained);
        return v;
      };
      auto c34 = [](const SchemaResult& s) {
        std::vector<std::tuple<std::string, std::string, std::vector<std::size_t>, std::vector<std::size_t>>> v;
        for (const auto& p : s.c34) v.emplace_back(p.a, p.b, p.rows_a, p.rows_b);
        return v;
      };
      auto c3 = [](const SchemaResult& s) {
        std::vector<std::tuple<std::string, std::string, std::vector<std::size_t>, std::vector<std::size_t>, bool>> v;
        for (const auto& p : s.c3) v.emplace_back(p.a, p.b, p.rows_a, p.rows_b, p.no_key);
        return v;
      };
      auto c4 = [](const SchemaResult& s) {
        std::vector<std::tuple<std::string, std::string, std::string>> v;
        for (const auto& p : s.c4) v.emplace_back(p.a, p.b, p.key);
        return v;
      };
      if (c1(x) != c1(y) || c2(x) != c2(y) || c34(x) != c34(y) || c3(x) != c3(y) || c4(x) != c4(y)) return false;
    }
    return true;
  }

  nlohmann::json to_json() const {
    using nlohmann::json;
    json j;
    j["schemas"] = json::array();
    for (const auto& s : schemas) {
      json js;
      js["signature"] = s.signature;
      js["schema"] = s.schema;
      js["views"] = s.views;
      js["compatible"] = json::array();
      for (const auto& g : s.c1) {
        js["compatible"].push_back({{"representative", g.representative},
                                    {"members", g.members},
                                    {"multiplicity_mismatch", g.multiplicity_mismatch}});
      }
      js["contained"] = json::array();
      for (const auto& g : s.c2) js["contained"].push_back({{"container", g.container}, {"contained", g.contained}});
      js["candidate_pairs"] = json::array();
      for (const auto& p : s.c34) {
        js["candidate_pairs"].push_back({{"a", p.a}, {"b", p.b}, {"rows_a", p.rows_a}, {"rows_b", p.rows_b}});
      }
      js["complementary"] = json::array();
      for (const auto& p : s.c3) {
        json jp{{"a", p.a}, {"b", p.b}, {"rows_a", p.rows_a}, {"rows_b", p.rows_b}, {"no_key", p.no_key}};
        jp["key"] = p.key ? json(*p.key) : json(nullptr);
        js["complementary"].push_back(jp);
      }
      js["contradictory"] = json::array();
      for (const auto& p : s.c4) {
        json jp{{"a", p.a},
                {"b", p.b},
                {"key", p.key},
                {"contradiction_attribute", p.contradiction_attribute},
                {"contradiction_values", p.contradiction_values},
                {"contradictory_keys", p.contradictory_keys},
                {"complementary_rows_a", p.complementary_rows_a},
                {"complementary_rows_b", p.complementary_rows_b},
                {"chased", p.chased}};
        jp["evidence"] = json::array();
        for (const auto& e : p.evidence) {
          jp["evidence"].push_back(
              {{"key_value", e.key_value}, {"attributes", e.attributes}, {"rows_a", e.rows_a}, {"rows_b", e.rows_b}});
        }
        js["contradictory"].push_back(jp);
      }
      j["schemas"].push_back(js);
    }
    j["metrics"] = {{"cell_comparisons", metrics.cell_comparisons},
                    {"hash_probes", metrics.hash_probes},
                    {"pairs_full", metrics.pairs_full},
                    {"pairs_chased", metrics.pairs_chased},
                    {"chase_attempts", metrics.chase_attempts}};
    return j;
  }
};

}  // namespace dod
