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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dod/util/csv.hpp"

namespace dod {

using Row = std::vector<std::string>;

// Row-major in-memory table of string cells.
struct Relation {
  std::vector<std::string> columns;
  std::vector<Row> rows;

  std::optional<std::size_t> find_column(std::string_view name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) return std::nullopt;
    return static_cast<std::size_t>(it - columns.begin());
  }

  std::size_t column_index(std::string_view name) const {
    if (auto i = find_column(name)) return *i;
    throw std::out_of_range("no column '" + std::string(name) + "'");
  }

  std::vector<std::string> column_values(std::size_t c) const {
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

inline constexpr std::size_t kCellOverheadBytes = sizeof(std::string);

inline std::size_t row_bytes(const Row& r) {
  std::size_t b = sizeof(Row);
  for (const auto& c : r) b += kCellOverheadBytes + c.size();
  return b;
}

// Mean in-memory row width, measured over the first `probe` rows.
inline double mean_row_bytes(const Relation& rel, std::size_t probe = 1000) {
  const std::size_t n = std::min(probe, rel.rows.size());
  if (n == 0) return static_cast<double>(sizeof(Row) + rel.columns.size() * kCellOverheadBytes);
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) total += row_bytes(rel.rows[i]);
  return static_cast<double>(total) / static_cast<double>(n);
}

inline std::size_t relation_bytes(const Relation& rel) {
  std::size_t b = sizeof(Relation);
  for (const auto& c : rel.columns) b += kCellOverheadBytes + c.size();
  for (const auto& r : rel.rows) b += row_bytes(r);
  return b;
}

inline Relation load_csv_relation(const std::filesystem::path& path) {
  auto doc = csv::read_file(path);
  return Relation{std::move(doc.header), std::move(doc.rows)};
}

inline void write_csv_relation(std::ostream& out, const Relation& rel) {
  csv::write(out, rel.columns, rel.rows);
}

}  // namespace dod
