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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "dod/index/discovery_index.hpp"
#include "dod/search/join_graph.hpp"
#include "dod/util/relation.hpp"

namespace dod {

// Observed join output cardinalities. Append-only log; lookups see the
// latest observation per edge.
class JoinStats {
public:
  struct Entry {
    JoinEdgeSpec edge;
    std::uint64_t rows = 0;
  };

  void record(const JoinEdgeSpec& edge, std::uint64_t rows) {
    std::lock_guard lock(mu_);
    log_.push_back({edge, rows});
    latest_[edge] = rows;
  }

  std::optional<std::uint64_t> lookup(const JoinEdgeSpec& edge) const {
    std::lock_guard lock(mu_);
    auto it = latest_.find(edge);
    if (it == latest_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<Entry> log() const {
    std::lock_guard lock(mu_);
    return log_;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return log_.size();
  }

private:
  mutable std::mutex mu_;
  std::vector<Entry> log_;
  std::map<JoinEdgeSpec, std::uint64_t> latest_;
};

// Memoized join-path answers from the discovery index.
class JoinPathCache {
public:
  explicit JoinPathCache(const DiscoveryIndex& index) : index_(&index) {}

  std::vector<JoinPath> get(const std::string& a, const std::string& b, int max_hops) {
    auto key = std::make_tuple(a, b, max_hops);
    {
      std::lock_guard lock(mu_);
      if (auto it = cache_.find(key); it != cache_.end()) {
        ++hits_;
        return it->second;
      }
    }
    auto paths = index_->join_paths(a, b, max_hops);
    std::lock_guard lock(mu_);
    ++misses_;
    cache_[key] = paths;
    return paths;
  }

  PathProvider provider() {
    return [this](const std::string& a, const std::string& b, int hops) { return get(a, b, hops); };
  }

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

private:
  const DiscoveryIndex* index_;
  std::mutex mu_;
  std::map<std::tuple<std::string, std::string, int>, std::vector<JoinPath>> cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

// Join edges known not to materialize under a given value-constraint
// signature. Entries are only added after a real attempt came back empty.
class DeadEndCache {
public:
  void add(const JoinEdgeSpec& edge, const std::string& signature) {
    std::lock_guard lock(mu_);
    entries_.insert({edge, signature});
  }

  bool contains(const JoinEdgeSpec& edge, const std::string& signature) const {
    std::lock_guard lock(mu_);
    return entries_.count({edge, signature}) > 0;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

private:
  mutable std::mutex mu_;
  std::set<std::pair<JoinEdgeSpec, std::string>> entries_;
};

// LRU cache of loaded base tables with a byte budget. Eviction order is
// strictly least-recently used; a table larger than the budget is returned
// but not retained.
class TableCache {
public:
  TableCache(const DiscoveryIndex& index, std::size_t byte_budget) : index_(&index), budget_(byte_budget) {}

  std::shared_ptr<const Relation> get(const std::string& table_id) {
    {
      std::lock_guard lock(mu_);
      if (auto it = entries_.find(table_id); it != entries_.end()) {
        lru_.splice(lru_.begin(), lru_, it->second.pos);
        ++hits_;
        return it->second.rel;
      }
    }
    const Table* t = index_->find_table(table_id);
    if (!t) throw std::out_of_range("unknown table '" + table_id + "'");
    auto rel = std::make_shared<const Relation>(load_csv_relation(index_->corpus_root() / t->source_path));
    std::size_t bytes = relation_bytes(*rel);

    std::lock_guard lock(mu_);
    ++loads_;
    rows_read_ += rel->rows.size();
    if (entries_.count(table_id)) return entries_[table_id].rel;
    if (bytes > budget_) return rel;
    while (used_ + bytes > budget_ && !lru_.empty()) {
      auto victim = lru_.back();
      lru_.pop_back();
      used_ -= entries_[victim].bytes;
      entries_.erase(victim);
      ++evictions_;
    }
    lru_.push_front(table_id);
    entries_[table_id] = Entry{rel, bytes, lru_.begin()};
    used_ += bytes;
    return rel;
  }

  std::vector<std::string> resident() const {
    std::lock_guard lock(mu_);
    return {lru_.begin(), lru_.end()};
  }

  std::uint64_t loads() const { return loads_; }
  std::uint64_t rows_read() const { return rows_read_; }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t evictions() const { return evictions_; }

private:
  struct Entry {
    std::shared_ptr<const Relation> rel;
    std::size_t bytes = 0;
    std::list<std::string>::iterator pos;
  };

  const DiscoveryIndex* index_;
  std::size_t budget_;
  mutable std::mutex mu_;
  std::list<std::string> lru_;
  std::unordered_map<std::string, Entry> entries_;
  std::size_t used_ = 0;
  std::atomic<std::uint64_t> loads_{0};
  std::atomic<std::uint64_t> rows_read_{0};
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> evictions_{0};
};

struct EngineCaches {
  EngineCaches(const DiscoveryIndex& index, std::size_t table_cache_bytes = std::size_t(256) << 20)
      : joinpath_cache(index), table_cache(index, table_cache_bytes) {}

  JoinPathCache joinpath_cache;
  DeadEndCache deadend_cache;
  TableCache table_cache;
};

}  // namespace dod
