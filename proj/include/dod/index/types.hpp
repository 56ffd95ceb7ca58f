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

#include <array>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace dod {

struct ColumnRef {
  std::string table;
  std::string column;

  auto operator<=>(const ColumnRef&) const = default;
  bool operator==(const ColumnRef&) const = default;

  std::string str() const { return table + "." + column; }
};

enum class ColumnType { text, integer, real };

inline std::string_view to_string(ColumnType t) {
  switch (t) {
    case ColumnType::integer: return "integer";
    case ColumnType::real: return "real";
    default: return "text";
  }
}

inline ColumnType column_type_from_string(std::string_view s) {
  if (s == "integer") return ColumnType::integer;
  if (s == "real") return ColumnType::real;
  return ColumnType::text;
}

inline bool is_numeric_type(ColumnType t) { return t != ColumnType::text; }

struct Table {
  std::string id;
  std::string name;
  std::string source_path;  // relative to the corpus root
  std::vector<std::string> columns;
  std::uint64_t row_count = 0;
};

inline constexpr std::size_t kSketchSlots = 128;
inline constexpr std::uint64_t kEmptySlot = std::numeric_limits<std::uint64_t>::max();

// k-permutation min-hash signature: slot i keeps the minimum of the i-th
// derived hash over the column's distinct normalized values.
struct MinHashSketch {
  std::array<std::uint64_t, kSketchSlots> slots;

  MinHashSketch() { slots.fill(kEmptySlot); }
  bool empty() const { return slots[0] == kEmptySlot; }
  bool operator==(const MinHashSketch&) const = default;
};

struct ColumnProfile {
  ColumnRef column;
  std::uint64_t total_count = 0;     // non-null cells
  std::uint64_t distinct_count = 0;  // distinct normalized non-null cells
  double uniqueness = 0.0;
  ColumnType inferred_type = ColumnType::text;
  MinHashSketch sketch;
};

struct InclusionDependency {
  ColumnRef from;  // approximately included side
  ColumnRef to;
  double containment = 0.0;

  bool operator==(const InclusionDependency&) const = default;
};

// Undirected join edge derived from one or two IND records over the same
// column pair. `left < right` always holds.
struct JoinEdge {
  std::size_t id = 0;
  ColumnRef left;
  ColumnRef right;
  double containment = 0.0;
};

struct JoinHop {
  std::size_t edge = 0;
  ColumnRef from;  // column on the table closer to the path start
  ColumnRef to;

  bool operator==(const JoinHop&) const = default;
};

struct JoinPath {
  std::string from_table;
  std::string to_table;
  std::vector<JoinHop> hops;

  bool operator==(const JoinPath&) const = default;

  JoinPath reversed() const {
    JoinPath r;
    r.from_table = to_table;
    r.to_table = from_table;
    for (auto it = hops.rbegin(); it != hops.rend(); ++it) r.hops.push_back({it->edge, it->to, it->from});
    return r;
  }
};

struct IndexConfig {
  double containment_threshold = 0.8;
  double uniqueness_threshold = 0.9;
  std::uint64_t sketch_seed = 0x5eed0fd15c0e7ULL;
  // Columns whose distinct sets both fit under this bound get exact containment.
  std::size_t exact_verify_limit = 100000;
  // Pairs whose sketch estimate is below threshold - slack are not verified.
  double prefilter_slack = 0.25;
  unsigned threads = 0;  // 0: hardware concurrency
};

}  // namespace dod
