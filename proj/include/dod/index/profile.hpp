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
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dod/index/types.hpp"
#include "dod/util/hash.hpp"
#include "dod/util/text.hpp"

namespace dod {

inline constexpr std::uint64_t kDefaultSketchSeed = 0x5eed0fd15c0e7ULL;

namespace sketch_detail {

inline const std::array<std::uint64_t, kSketchSlots>& slot_salts() {
  static const auto salts = [] {
    std::array<std::uint64_t, kSketchSlots> s{};
    std::uint64_t state = 0x243f6a8885a308d3ULL;
    for (auto& v : s) {
      state = splitmix64(state);
      v = state;
    }
    return s;
  }();
  return salts;
}

}  // namespace sketch_detail

inline std::uint64_t value_hash(std::string_view normalized, std::uint64_t seed) {
  return hash64(normalized, seed);
}

inline void sketch_add(MinHashSketch& sketch, std::uint64_t base_hash) {
  const auto& salts = sketch_detail::slot_salts();
  for (std::size_t i = 0; i < kSketchSlots; ++i) {
    std::uint64_t h = splitmix64(base_hash ^ salts[i]);
    if (h == kEmptySlot) h -= 1;
    if (h < sketch.slots[i]) sketch.slots[i] = h;
  }
}

inline MinHashSketch sketch_from_hashes(std::span<const std::uint64_t> distinct_hashes) {
  MinHashSketch s;
  for (auto h : distinct_hashes) sketch_add(s, h);
  return s;
}

// Estimated |A ∩ B| / |A| from two k-permutation signatures. A slot where
// A's minimum is not larger than B's has the union's minimum inside A; the
// minimum sits in A ∩ B exactly when the two slots are equal.
inline double estimate_containment(const MinHashSketch& a, const MinHashSketch& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::size_t a_side = 0;
  std::size_t shared = 0;
  for (std::size_t i = 0; i < kSketchSlots; ++i) {
    if (a.slots[i] <= b.slots[i]) {
      ++a_side;
      if (a.slots[i] == b.slots[i]) ++shared;
    }
  }
  return a_side == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(a_side);
}

// Exact |A ∩ B| / |A| over sorted distinct hash vectors.
inline double exact_containment(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  if (a.empty()) return 0.0;
  std::size_t shared = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++shared;
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(shared) / static_cast<double>(a.size());
}

inline ColumnType infer_type(std::span<const std::string> values) {
  bool any = false;
  bool all_int = true;
  bool all_real = true;
  for (const auto& v : values) {
    if (text::is_null(v)) continue;
    any = true;
    if (all_int && !text::parse_integer(v)) all_int = false;
    if (!all_int && all_real && !text::parse_real(v)) all_real = false;
    if (!all_int && !all_real) break;
  }
  if (!any) return ColumnType::text;
  if (all_int) return ColumnType::integer;
  if (all_real) return ColumnType::real;
  return ColumnType::text;
}

// Profiles one column. Nulls (empty cells) do not count towards totals.
// When `distinct_hashes` is given it receives the sorted distinct value
// hashes used for exact containment checks.
inline ColumnProfile profile_column(std::span<const std::string> values, ColumnRef column = {},
                                    std::uint64_t seed = kDefaultSketchSeed,
                                    std::vector<std::uint64_t>* distinct_hashes = nullptr) {
  ColumnProfile p;
  p.column = std::move(column);
  p.inferred_type = infer_type(values);

  std::vector<std::uint64_t> hashes;
  hashes.reserve(values.size());
  for (const auto& v : values) {
    if (text::is_null(v)) continue;
    ++p.total_count;
    hashes.push_back(value_hash(text::normalize_value(v), seed));
  }
  std::sort(hashes.begin(), hashes.end());
  hashes.erase(std::unique(hashes.begin(), hashes.end()), hashes.end());

  p.distinct_count = hashes.size();
  p.uniqueness = p.total_count == 0
                     ? 0.0
                     : static_cast<double>(p.distinct_count) / static_cast<double>(p.total_count);
  p.sketch = sketch_from_hashes(hashes);
  if (distinct_hashes) *distinct_hashes = std::move(hashes);
  return p;
}

inline ColumnProfile profile_column(const std::vector<std::string>& values) {
  return profile_column(std::span<const std::string>(values));
}

}  // namespace dod
