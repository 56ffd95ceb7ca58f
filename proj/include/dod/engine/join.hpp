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
#include <atomic>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dod/engine/caches.hpp"
#include "dod/index/types.hpp"
#include "dod/util/hash.hpp"
#include "dod/util/relation.hpp"
#include "dod/util/text.hpp"

namespace dod {

enum class KeyMode { text, numeric };
enum class JoinStrategy { in_memory, external };

inline std::string_view to_string(JoinStrategy s) { return s == JoinStrategy::in_memory ? "in_memory" : "external"; }

class JoinError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Comparison mode for a pair of column types. Numeric columns compare by
// canonical number; text by normalized string. Mixing the two is refused.
inline KeyMode key_mode_for(ColumnType a, ColumnType b) {
  const bool na = is_numeric_type(a);
  const bool nb = is_numeric_type(b);
  if (na && nb) return KeyMode::numeric;
  if (!na && !nb) return KeyMode::text;
  throw JoinError("join key type mismatch: " + std::string(to_string(a)) + " vs " + std::string(to_string(b)));
}

// Join key of a cell; nullopt for nulls, which never match.
inline std::optional<std::string> join_key(std::string_view cell, KeyMode mode) {
  if (text::is_null(cell)) return std::nullopt;
  if (mode == KeyMode::numeric && text::is_numeric(text::trim(cell))) return text::canonical_number(text::trim(cell));
  return text::normalize(cell);
}

struct JoinSpec {
  std::size_t left_column = 0;
  std::size_t right_column = 0;
  KeyMode mode = KeyMode::text;
};

struct CardinalityEstimate {
  double rows = 0;
  double bytes = 0;
  std::size_t sampled_left_rows = 0;
  std::size_t observed_rows = 0;
};

struct JoinOptions {
  std::size_t memory_budget_bytes = std::size_t(512) << 20;
  std::filesystem::path spill_dir;  // empty: system temp directory
  std::optional<JoinStrategy> force;
  std::size_t partitions = 64;
  int max_recursion = 2;
  double estimate_fraction = 0.1;
  std::uint64_t seed = 0x6a6f696e5eedULL;
  // Called once per spill level with the temp directory while its files exist.
  std::function<void(const std::filesystem::path&)> on_spill;
};

struct JoinReport {
  JoinStrategy strategy = JoinStrategy::in_memory;
  CardinalityEstimate estimate;
  std::size_t spill_files = 0;
  std::size_t spill_bytes = 0;
  std::size_t output_rows = 0;
};

namespace join_detail {

inline std::uint64_t key_hash(const std::string& key, std::uint64_t seed) { return hash64(key, seed); }

inline Row concat(const Row& l, const Row& r) {
  Row out;
  out.reserve(l.size() + r.size());
  out.insert(out.end(), l.begin(), l.end());
  out.insert(out.end(), r.begin(), r.end());
  return out;
}

// Hash join of row ranges: builds on `right`, probes `left` in order.
inline void hash_join_rows(const std::vector<Row>& left, const std::vector<Row>& right, const JoinSpec& spec,
                           std::vector<Row>& out) {
  std::unordered_map<std::string, std::vector<std::uint32_t>> table;
  table.reserve(right.size());
  for (std::uint32_t i = 0; i < right.size(); ++i) {
    if (auto k = join_key(right[i][spec.right_column], spec.mode)) table[*k].push_back(i);
  }
  for (const auto& l : left) {
    auto k = join_key(l[spec.left_column], spec.mode);
    if (!k) continue;
    auto it = table.find(*k);
    if (it == table.end()) continue;
    for (auto ri : it->second) out.push_back(concat(l, right[ri]));
  }
}

// Temp directory removed on scope exit, whether the join finished or threw.
class TempDir {
public:
  explicit TempDir(const std::filesystem::path& base) {
    static std::atomic<std::uint64_t> counter{0};
    auto root = base.empty() ? std::filesystem::temp_directory_path() : base;
    std::random_device rd;
    for (int attempt = 0; attempt < 16; ++attempt) {
      auto name = "dod-spill-" + std::to_string(rd()) + "-" + std::to_string(counter++);
      path_ = root / name;
      if (std::filesystem::create_directories(path_)) return;
    }
    throw JoinError("cannot create spill directory under " + root.string());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

inline void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

inline bool read_u32(std::istream& in, std::uint32_t& v) {
  in.read(reinterpret_cast<char*>(&v), 4);
  return static_cast<bool>(in);
}

inline std::size_t write_row(std::ostream& out, const Row& row) {
  std::size_t n = 4;
  write_u32(out, static_cast<std::uint32_t>(row.size()));
  for (const auto& c : row) {
    write_u32(out, static_cast<std::uint32_t>(c.size()));
    out.write(c.data(), static_cast<std::streamsize>(c.size()));
    n += 4 + c.size();
  }
  if (!out) throw JoinError("write to spill file failed (disk full?)");
  return n;
}

inline std::vector<Row> read_rows(const std::filesystem::path& p) {
  std::vector<Row> rows;
  std::ifstream in(p, std::ios::binary);
  if (!in) return rows;
  std::uint32_t n = 0;
  while (read_u32(in, n)) {
    Row r(n);
    for (auto& c : r) {
      std::uint32_t len = 0;
      if (!read_u32(in, len)) throw JoinError("truncated spill file " + p.string());
      c.resize(len);
      in.read(c.data(), len);
      if (!in) throw JoinError("truncated spill file " + p.string());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::size_t rows_bytes(const std::vector<Row>& rows) {
  std::size_t b = 0;
  for (const auto& r : rows) b += row_bytes(r);
  return b;
}

// Partitions both inputs by key hash into files, then joins partition pairs.
// A partition pair whose build side still exceeds the budget is partitioned
// again with a different seed, up to `max_recursion` levels.
inline void grace_join(const std::vector<Row>& left, const std::vector<Row>& right, const JoinSpec& spec,
                       const JoinOptions& opt, int level, JoinReport& report, std::vector<Row>& out) {
  TempDir dir(opt.spill_dir);
  const std::size_t parts = std::max<std::size_t>(1, opt.partitions);
  const std::uint64_t seed = opt.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(level + 1);

  auto spill = [&](const std::vector<Row>& rows, std::size_t col, const char* side) {
    std::vector<std::ofstream> files(parts);
    std::vector<bool> opened(parts, false);
    for (const auto& r : rows) {
      auto k = join_key(r[col], spec.mode);
      if (!k) continue;
      auto p = key_hash(*k, seed) % parts;
      if (!opened[p]) {
        files[p].open(dir.path() / (std::string(side) + std::to_string(p)), std::ios::binary);
        if (!files[p]) throw JoinError("cannot open spill file in " + dir.path().string());
        opened[p] = true;
        ++report.spill_files;
      }
      report.spill_bytes += write_row(files[p], r);
    }
    for (auto& f : files) {
      if (f.is_open()) {
        f.close();
        if (f.fail()) throw JoinError("closing spill file failed (disk full?)");
      }
    }
  };
  spill(left, spec.left_column, "l");
  spill(right, spec.right_column, "r");
  if (opt.on_spill) opt.on_spill(dir.path());

  for (std::size_t p = 0; p < parts; ++p) {
    auto lp = dir.path() / ("l" + std::to_string(p));
    auto rp = dir.path() / ("r" + std::to_string(p));
    if (!std::filesystem::exists(lp) || !std::filesystem::exists(rp)) continue;
    auto lrows = read_rows(lp);
    auto rrows = read_rows(rp);
    std::filesystem::remove(lp);
    std::filesystem::remove(rp);
    if (level + 1 < opt.max_recursion && rows_bytes(rrows) > opt.memory_budget_bytes && rrows.size() > 1) {
      grace_join(lrows, rrows, spec, opt, level + 1, report, out);
    } else {
      hash_join_rows(lrows, rrows, spec, out);
    }
  }
}

}  // namespace join_detail

inline bool key_in_fraction(std::uint64_t h, double fraction) {
  if (fraction >= 1.0) return true;
  return static_cast<double>(h) <= fraction * static_cast<double>(std::numeric_limits<std::uint64_t>::max());
}

// Joins the left rows whose key hash falls in the lowest `fraction` of the
// hash space against the full right side and scales the count up.
inline CardinalityEstimate estimate_join_cardinality(const Relation& left, const Relation& right,
                                                     const JoinSpec& spec, double fraction,
                                                     std::uint64_t seed = JoinOptions{}.seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("sample fraction must be in (0,1]");
  std::unordered_map<std::string, std::uint64_t> right_counts;
  for (const auto& r : right.rows) {
    if (auto k = join_key(r[spec.right_column], spec.mode)) ++right_counts[*k];
  }
  CardinalityEstimate est;
  for (const auto& l : left.rows) {
    auto k = join_key(l[spec.left_column], spec.mode);
    if (!k || !key_in_fraction(join_detail::key_hash(*k, seed), fraction)) continue;
    ++est.sampled_left_rows;
    if (auto it = right_counts.find(*k); it != right_counts.end()) est.observed_rows += it->second;
  }
  est.rows = static_cast<double>(est.observed_rows) / fraction;
  est.bytes = est.rows * (mean_row_bytes(left) + mean_row_bytes(right));
  return est;
}

// Equi-join of two relations. Output columns are left columns followed by
// right columns; row order follows the left input for the in-memory strategy.
inline Relation join_two(const Relation& left, const Relation& right, const JoinSpec& spec,
                         const JoinOptions& opt = {}, JoinStats* stats = nullptr,
                         const JoinEdgeSpec* edge = nullptr, JoinReport* report = nullptr) {
  JoinReport local;
  JoinReport& rep = report ? *report : local;
  rep = {};
  rep.estimate = estimate_join_cardinality(left, right, spec, opt.estimate_fraction, opt.seed);
  if (opt.force) {
    rep.strategy = *opt.force;
  } else {
    rep.strategy = rep.estimate.bytes <= static_cast<double>(opt.memory_budget_bytes) ? JoinStrategy::in_memory
                                                                                      : JoinStrategy::external;
  }

  Relation out;
  out.columns = left.columns;
  out.columns.insert(out.columns.end(), right.columns.begin(), right.columns.end());
  if (rep.strategy == JoinStrategy::in_memory) {
    join_detail::hash_join_rows(left.rows, right.rows, spec, out.rows);
  } else {
    join_detail::grace_join(left.rows, right.rows, spec, opt, 0, rep, out.rows);
  }
  rep.output_rows = out.rows.size();
  if (stats && edge) stats->record(*edge, out.rows.size());
  return out;
}

// Number of output rows of the equi-join, without building it.
inline std::uint64_t count_join(const Relation& left, const Relation& right, const JoinSpec& spec) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& r : right.rows) {
    if (auto k = join_key(r[spec.right_column], spec.mode)) ++counts[*k];
  }
  std::uint64_t n = 0;
  for (const auto& l : left.rows) {
    auto k = join_key(l[spec.left_column], spec.mode);
    if (!k) continue;
    if (auto it = counts.find(*k); it != counts.end()) n += it->second;
  }
  return n;
}

struct ConsistentSample {
  Relation rows;
  std::vector<std::string> keys;  // selected join keys, sorted
};

inline constexpr std::uint64_t kSampleSeed = 0x73616d706c65ULL;

// Keeps the rows whose join key hash is among the K smallest distinct key
// hashes of the column. The choice depends on the key values only, so
// different tables holding the same keys agree on the selection. Rows with a
// null key are never kept.
inline ConsistentSample consistent_sample(const Relation& rel, std::size_t column, std::size_t k,
                                          KeyMode mode = KeyMode::text, std::uint64_t seed = kSampleSeed,
                                          const std::vector<std::string>* force_keys = nullptr) {
  if (k < 1) throw std::invalid_argument("sample size K must be at least 1");
  std::unordered_map<std::string, std::uint64_t> distinct;
  for (const auto& r : rel.rows) {
    if (auto key = join_key(r[column], mode)) distinct.emplace(*key, 0);
  }
  ConsistentSample out;
  out.rows.columns = rel.columns;
  std::vector<std::pair<std::uint64_t, std::string>> ranked;
  ranked.reserve(distinct.size());
  for (const auto& [key, _] : distinct) ranked.emplace_back(join_detail::key_hash(key, seed), key);
  if (ranked.size() > k) {
    std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end());
    ranked.resize(k);
  }
  std::unordered_map<std::string, bool> chosen;
  for (auto& [_, key] : ranked) chosen.emplace(key, true);
  if (force_keys) {
    for (const auto& key : *force_keys) {
      if (distinct.count(key)) chosen.emplace(key, true);
    }
  }
  for (const auto& r : rel.rows) {
    auto key = join_key(r[column], mode);
    if (key && chosen.count(*key)) out.rows.rows.push_back(r);
  }
  for (const auto& [key, _] : chosen) out.keys.push_back(key);
  std::sort(out.keys.begin(), out.keys.end());
  return out;
}

}  // namespace dod
