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
#include <set>
#include <string>
#include <vector>

#include "dod/engine/materialize.hpp"
#include "dod/util/hash.hpp"
#include "dod/util/text.hpp"

namespace dod {

inline constexpr std::uint64_t kCellHashSeed = 0x4c3c3c3c3c3c3c4cULL;

// Cell hash over (attribute, normalized cell). Attribute and value are
// separated by a unit separator so "ab"+"c" and "a"+"bc" differ.
inline Hash128 cell_hash(std::string_view attribute, std::string_view normalized_cell) {
  std::string buf;
  buf.reserve(attribute.size() + normalized_cell.size() + 1);
  buf.append(attribute);
  buf.push_back('\x1f');
  buf.append(normalized_cell);
  return murmur3_128(buf, kCellHashSeed);
}

// Sorted attribute names of a schema, normalized; the bucket key.
inline std::vector<std::string> canonical_schema(const std::vector<std::string>& schema) {
  std::vector<std::string> out;
  for (const auto& a : schema) out.push_back(text::normalize_attribute(a));
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string schema_signature(const std::vector<std::string>& schema) {
  return text::join(canonical_schema(schema), ",");
}

struct ViewFingerprint {
  std::string view_id;
  std::vector<std::string> schema;           // canonical order
  std::vector<std::vector<std::string>> cells;  // normalized, canonical column order
  std::vector<Hash128> row_hash_list;        // row order
  std::vector<Hash128> row_hash_set;         // sorted distinct
  std::vector<std::pair<Hash128, std::size_t>> hash_positions;  // sorted (hash, row)
  Hash128 view_hash = 0;
  std::vector<double> key_scores;            // per canonical attribute

  std::size_t attribute_index(std::string_view name) const {
    auto n = text::normalize_attribute(name);
    auto it = std::lower_bound(schema.begin(), schema.end(), n);
    if (it == schema.end() || *it != n) return schema.size();
    return static_cast<std::size_t>(it - schema.begin());
  }
};

// Per attribute: distinct values over distinct rows divided by distinct rows.
inline std::vector<double> key_scores(const std::vector<std::vector<std::string>>& cells,
                                      const std::vector<std::pair<Hash128, std::size_t>>& hash_positions,
                                      std::size_t width) {
  std::vector<double> out(width, 0.0);
  std::vector<std::size_t> distinct_rows;
  for (std::size_t i = 0; i < hash_positions.size(); ++i) {
    if (i == 0 || hash_positions[i].first != hash_positions[i - 1].first) {
      distinct_rows.push_back(hash_positions[i].second);
    }
  }
  if (distinct_rows.empty()) return out;
  for (std::size_t c = 0; c < width; ++c) {
    std::set<std::string_view> values;
    for (auto r : distinct_rows) values.insert(cells[r][c]);
    out[c] = static_cast<double>(values.size()) / static_cast<double>(distinct_rows.size());
  }
  return out;
}

inline ViewFingerprint fingerprint(const std::string& view_id, const std::vector<std::string>& schema,
                                   const std::vector<Row>& rows) {
  ViewFingerprint fp;
  fp.view_id = view_id;
  fp.schema = canonical_schema(schema);
  std::vector<std::size_t> perm(fp.schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    auto n = text::normalize_attribute(schema[c]);
    perm[static_cast<std::size_t>(std::lower_bound(fp.schema.begin(), fp.schema.end(), n) - fp.schema.begin())] = c;
  }
  fp.cells.reserve(rows.size());
  fp.row_hash_list.reserve(rows.size());
  for (const auto& r : rows) {
    std::vector<std::string> cells(fp.schema.size());
    Hash128 h = 0;
    for (std::size_t c = 0; c < fp.schema.size(); ++c) {
      cells[c] = text::normalize_value(r[perm[c]]);
      h += cell_hash(fp.schema[c], cells[c]);
    }
    fp.cells.push_back(std::move(cells));
    fp.row_hash_list.push_back(h);
  }
  for (std::size_t i = 0; i < fp.row_hash_list.size(); ++i) fp.hash_positions.emplace_back(fp.row_hash_list[i], i);
  std::sort(fp.hash_positions.begin(), fp.hash_positions.end());
  for (const auto& [h, _] : fp.hash_positions) {
    if (fp.row_hash_set.empty() || fp.row_hash_set.back() != h) {
      fp.row_hash_set.push_back(h);
      fp.view_hash += h;
    }
  }
  fp.key_scores = key_scores(fp.cells, fp.hash_positions, fp.schema.size());
  return fp;
}

inline ViewFingerprint fingerprint(const CandidateView& v) { return fingerprint(v.view_id, v.schema, v.rows); }

}  // namespace dod
