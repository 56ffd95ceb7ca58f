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
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dod/index/profile.hpp"
#include "dod/index/types.hpp"
#include "dod/util/csv.hpp"
#include "dod/util/relation.hpp"
#include "dod/util/text.hpp"

namespace dod {

inline constexpr int kIndexFormatVersion = 1;

class IndexError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Sorted distinct value hashes per profile, aligned with the profile list.
using DistinctHashes = std::vector<std::vector<std::uint64_t>>;

// Detects approximate inclusion dependencies between columns of different
// tables. Containment is estimated from the sketches; when `distinct` is
// available and both sides fit under the verification limit the estimate is
// replaced by the exact ratio.
inline std::vector<InclusionDependency> find_inclusion_dependencies(
    const std::vector<ColumnProfile>& profiles, const DistinctHashes* distinct,
    double containment_threshold, double uniqueness_threshold, const IndexConfig& config = {}) {
  std::vector<InclusionDependency> out;
  const std::size_t n = profiles.size();
  constexpr std::size_t kAlwaysVerify = 4096;
  for (std::size_t a = 0; a < n; ++a) {
    const auto& pa = profiles[a];
    if (pa.distinct_count == 0) continue;
    for (std::size_t b = 0; b < n; ++b) {
      const auto& pb = profiles[b];
      if (a == b || pb.distinct_count == 0) continue;
      if (pa.column.table == pb.column.table) continue;
      if (pa.uniqueness < uniqueness_threshold && pb.uniqueness < uniqueness_threshold) continue;
      // |A ∩ B| <= |B| bounds the achievable containment.
      if (static_cast<double>(pb.distinct_count) <
          containment_threshold * static_cast<double>(pa.distinct_count)) {
        continue;
      }
      double containment = estimate_containment(pa.sketch, pb.sketch);
      const bool can_verify = distinct != nullptr && (*distinct)[a].size() <= config.exact_verify_limit &&
                              (*distinct)[b].size() <= config.exact_verify_limit;
      if (can_verify) {
        const bool small = pa.distinct_count <= kAlwaysVerify;
        if (!small && containment < containment_threshold - config.prefilter_slack) continue;
        containment = exact_containment((*distinct)[a], (*distinct)[b]);
      }
      if (containment >= containment_threshold) out.push_back({pa.column, pb.column, containment});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return std::tie(x.from, x.to) < std::tie(y.from, y.to);
  });
  return out;
}

class DiscoveryIndex {
public:
  DiscoveryIndex() = default;

  static DiscoveryIndex build(const std::filesystem::path& corpus_dir, const IndexConfig& config = {},
                              std::ostream* warnings = nullptr) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(corpus_dir, ec)) {
      throw IndexError("corpus directory does not exist: " + corpus_dir.string());
    }

    std::vector<fs::path> files;
    for (auto it = fs::recursive_directory_iterator(corpus_dir, ec); !ec && it != fs::end(it);
         it.increment(ec)) {
      if (!it->is_regular_file()) continue;
      auto ext = text::normalize(it->path().extension().string());
      if (ext == ".csv") files.push_back(it->path());
    }
    std::sort(files.begin(), files.end());

    DiscoveryIndex idx;
    idx.corpus_root_ = fs::absolute(corpus_dir).lexically_normal();
    idx.config_ = config;

    struct Loaded {
      Table table;
      Relation data;
    };
    std::vector<Loaded> loaded;
    std::set<std::string> ids;
    for (const auto& f : files) {
      try {
        Relation rel = load_csv_relation(f);
        std::set<std::string> seen;
        for (const auto& c : rel.columns) {
          if (!seen.insert(text::normalize_attribute(c)).second) {
            throw csv::CsvError(f.string() + ": duplicate column name '" + c + "'");
          }
        }
        auto rel_path = fs::relative(f, corpus_dir).generic_string();
        std::string id = fs::path(rel_path).replace_extension().generic_string();
        if (!ids.insert(id).second) throw csv::CsvError(f.string() + ": duplicate table id '" + id + "'");
        Table t;
        t.id = id;
        t.name = f.stem().string();
        t.source_path = rel_path;
        t.columns = rel.columns;
        t.row_count = rel.rows.size();
        loaded.push_back({std::move(t), std::move(rel)});
      } catch (const std::exception& e) {
        if (warnings) *warnings << "warning: skipping " << f.string() << ": " << e.what() << "\n";
      }
    }
    if (loaded.empty()) throw IndexError("no parseable tables under " + corpus_dir.string());

    // One profile slot per column, filled concurrently per table.
    std::vector<std::size_t> first_column;
    std::size_t total_columns = 0;
    for (const auto& l : loaded) {
      first_column.push_back(total_columns);
      total_columns += l.table.columns.size();
    }
    idx.profiles_.resize(total_columns);
    DistinctHashes distinct(total_columns);

    unsigned workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(loaded.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i = next++; i < loaded.size(); i = next++) {
        const auto& l = loaded[i];
        for (std::size_t c = 0; c < l.table.columns.size(); ++c) {
          auto values = l.data.column_values(c);
          idx.profiles_[first_column[i] + c] = profile_column(
              values, ColumnRef{l.table.id, l.table.columns[c]}, config.sketch_seed, &distinct[first_column[i] + c]);
        }
      }
    };
    if (workers <= 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }

    for (auto& l : loaded) idx.tables_.push_back(l.table);
    idx.ind_edges_ = ::dod::find_inclusion_dependencies(idx.profiles_, &distinct, config.containment_threshold,
                                                 config.uniqueness_threshold, config);

    // Value index over textual columns.
    std::map<std::string, std::set<std::uint32_t>> values;
    for (std::size_t i = 0; i < loaded.size(); ++i) {
      const auto& l = loaded[i];
      for (std::size_t c = 0; c < l.table.columns.size(); ++c) {
        auto ordinal = static_cast<std::uint32_t>(first_column[i] + c);
        if (idx.profiles_[ordinal].inferred_type != ColumnType::text) continue;
        for (const auto& row : l.data.rows) {
          if (text::is_null(row[c])) continue;
          values[text::normalize_value(row[c])].insert(ordinal);
        }
      }
    }
    for (auto& [v, cols] : values) {
      idx.values_.push_back({v, std::vector<std::uint32_t>(cols.begin(), cols.end())});
    }
    idx.rebuild_derived();
    return idx;
  }

  // --- accessors -----------------------------------------------------------

  const std::filesystem::path& corpus_root() const { return corpus_root_; }
  const IndexConfig& config() const { return config_; }
  const std::vector<Table>& tables() const { return tables_; }
  const std::vector<ColumnProfile>& profiles() const { return profiles_; }
  const std::vector<InclusionDependency>& ind_edges() const { return ind_edges_; }
  const std::vector<JoinEdge>& join_edges() const { return join_edges_; }

  const Table* find_table(std::string_view id) const {
    auto it = table_pos_.find(std::string(id));
    return it == table_pos_.end() ? nullptr : &tables_[it->second];
  }

  const ColumnProfile* profile(const ColumnRef& ref) const {
    auto it = profile_pos_.find(ref);
    return it == profile_pos_.end() ? nullptr : &profiles_[it->second];
  }

  std::size_t column_count() const { return profiles_.size(); }

  const std::map<std::string, std::vector<ColumnRef>>& attribute_index() const { return attribute_index_; }

  // --- discovery API -------------------------------------------------------

  std::vector<ColumnRef> search_attribute(std::string_view name) const {
    auto it = attribute_index_.find(text::normalize_attribute(name));
    if (it == attribute_index_.end()) return {};
    return it->second;
  }

  // Normalized attribute names starting with `prefix`, for autocomplete.
  std::vector<std::string> attribute_names(std::string_view prefix, std::size_t limit = 20) const {
    std::vector<std::string> out;
    auto p = text::normalize_attribute(prefix);
    for (auto it = attribute_index_.lower_bound(p); it != attribute_index_.end() && out.size() < limit; ++it) {
      if (it->first.compare(0, p.size(), p) != 0) break;
      out.push_back(it->first);
    }
    return out;
  }

  // Textual columns holding a cell equal to `value`, or a cell containing
  // every token of `value`.
  std::vector<ColumnRef> search_value(std::string_view value) const {
    std::set<std::uint32_t> cols;
    auto norm = text::normalize_value(value);
    auto it = std::lower_bound(values_.begin(), values_.end(), norm,
                               [](const auto& e, const std::string& k) { return e.first < k; });
    if (it != values_.end() && it->first == norm) cols.insert(it->second.begin(), it->second.end());

    auto tokens = text::tokenize(value);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    if (!tokens.empty()) {
      std::vector<std::uint32_t> hits;
      bool first = true;
      for (const auto& t : tokens) {
        auto tp = token_index_.find(t);
        if (tp == token_index_.end()) {
          hits.clear();
          break;
        }
        if (first) {
          hits = tp->second;
          first = false;
        } else {
          std::vector<std::uint32_t> next;
          std::set_intersection(hits.begin(), hits.end(), tp->second.begin(), tp->second.end(),
                                std::back_inserter(next));
          hits = std::move(next);
        }
        if (hits.empty()) break;
      }
      for (auto vid : hits) cols.insert(values_[vid].second.begin(), values_[vid].second.end());
    }

    std::vector<ColumnRef> out;
    for (auto c : cols) out.push_back(profiles_[c].column);
    std::sort(out.begin(), out.end());
    return out;
  }

  // All simple paths of at most `max_hops` join edges between two tables,
  // ordered by hop count and then by the edge id sequence.
  std::vector<JoinPath> join_paths(std::string_view a, std::string_view b, int max_hops) const {
    std::vector<JoinPath> out;
    if (a == b || max_hops < 1 || !find_table(a) || !find_table(b)) return out;
    std::vector<JoinHop> stack;
    std::set<std::string> visited{std::string(a)};
    const std::string target(b);
    auto dfs = [&](auto& self, const std::string& at) -> void {
      if (static_cast<int>(stack.size()) >= max_hops) return;
      auto adj = adjacency_.find(at);
      if (adj == adjacency_.end()) return;
      for (const auto& [edge_id, other] : adj->second) {
        if (visited.count(other)) continue;
        const auto& e = join_edges_[edge_id];
        JoinHop hop = e.left.table == at ? JoinHop{edge_id, e.left, e.right} : JoinHop{edge_id, e.right, e.left};
        stack.push_back(hop);
        if (other == target) {
          out.push_back(JoinPath{std::string(a), target, stack});
        } else {
          visited.insert(other);
          self(self, other);
          visited.erase(other);
        }
        stack.pop_back();
      }
    };
    dfs(dfs, std::string(a));
    std::sort(out.begin(), out.end(), [](const JoinPath& x, const JoinPath& y) {
      if (x.hops.size() != y.hops.size()) return x.hops.size() < y.hops.size();
      return std::lexicographical_compare(x.hops.begin(), x.hops.end(), y.hops.begin(), y.hops.end(),
                                          [](const JoinHop& p, const JoinHop& q) { return p.edge < q.edge; });
    });
    return out;
  }

  // Re-runs dependency detection from the stored sketches only.
  std::vector<InclusionDependency> find_inclusion_dependencies(double containment_threshold,
                                                               double uniqueness_threshold) const {
    return dod::find_inclusion_dependencies(profiles_, nullptr, containment_threshold, uniqueness_threshold,
                                            config_);
  }

  // --- persistence ---------------------------------------------------------

  void save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    {
      std::ofstream out(dir / "catalog.json", std::ios::binary | std::ios::trunc);
      if (!out) throw IndexError("cannot write " + (dir / "catalog.json").string());
      out << catalog_json().dump(2) << "\n";
      if (!out) throw IndexError("write failed for catalog.json");
    }
    {
      std::ofstream out(dir / "values.idx", std::ios::binary | std::ios::trunc);
      if (!out) throw IndexError("cannot write " + (dir / "values.idx").string());
      out << "DOD-VALUES " << kIndexFormatVersion << "\n" << values_.size() << "\n";
      for (const auto& [v, cols] : values_) {
        out << escape_value(v) << '\t';
        for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
        out << '\n';
      }
      if (!out) throw IndexError("write failed for values.idx");
    }
  }

  static DiscoveryIndex load(const std::filesystem::path& dir) {
    std::ifstream in(dir / "catalog.json", std::ios::binary);
    if (!in) throw IndexError("cannot open " + (dir / "catalog.json").string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw IndexError(std::string("malformed catalog.json: ") + e.what());
    }
    if (j.value("format_version", 0) != kIndexFormatVersion) {
      throw IndexError("unsupported catalog format_version");
    }
    DiscoveryIndex idx;
    idx.corpus_root_ = j.at("corpus_root").get<std::string>();
    const auto& cfg = j.at("config");
    idx.config_.containment_threshold = cfg.at("containment_threshold").get<double>();
    idx.config_.uniqueness_threshold = cfg.at("uniqueness_threshold").get<double>();
    idx.config_.sketch_seed = cfg.at("sketch_seed").get<std::uint64_t>();
    idx.config_.exact_verify_limit = cfg.at("exact_verify_limit").get<std::size_t>();
    for (const auto& t : j.at("tables")) {
      idx.tables_.push_back(Table{t.at("id"), t.at("name"), t.at("source_path"),
                                  t.at("columns").get<std::vector<std::string>>(), t.at("row_count")});
    }
    for (const auto& p : j.at("profiles")) {
      ColumnProfile cp;
      cp.column = {p.at("table"), p.at("column")};
      cp.total_count = p.at("total_count");
      cp.distinct_count = p.at("distinct_count");
      cp.uniqueness = p.at("uniqueness");
      cp.inferred_type = column_type_from_string(p.at("inferred_type").get<std::string>());
      auto slots = p.at("sketch").get<std::vector<std::uint64_t>>();
      if (slots.size() != kSketchSlots) throw IndexError("sketch size mismatch in catalog.json");
      std::copy(slots.begin(), slots.end(), cp.sketch.slots.begin());
      idx.profiles_.push_back(std::move(cp));
    }
    for (const auto& e : j.at("ind_edges")) {
      idx.ind_edges_.push_back({{e.at("from").at("table"), e.at("from").at("column")},
                                {e.at("to").at("table"), e.at("to").at("column")},
                                e.at("containment")});
    }

    std::ifstream vin(dir / "values.idx", std::ios::binary);
    if (!vin) throw IndexError("cannot open " + (dir / "values.idx").string());
    std::string magic;
    int version = 0;
    std::size_t count = 0;
    vin >> magic >> version >> count;
    if (magic != "DOD-VALUES" || version != kIndexFormatVersion) throw IndexError("bad values.idx header");
    std::string line;
    std::getline(vin, line);
    for (std::size_t i = 0; i < count; ++i) {
      if (!std::getline(vin, line)) throw IndexError("truncated values.idx");
      auto tab = line.rfind('\t');
      if (tab == std::string::npos) throw IndexError("malformed values.idx line");
      std::vector<std::uint32_t> cols;
      std::stringstream ss(line.substr(tab + 1));
      std::string tok;
      while (std::getline(ss, tok, ',')) cols.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
      idx.values_.push_back({unescape_value(line.substr(0, tab)), std::move(cols)});
    }
    idx.rebuild_derived();
    return idx;
  }

  nlohmann::json catalog_json() const {
    nlohmann::json j;
    j["format_version"] = kIndexFormatVersion;
    j["corpus_root"] = corpus_root_.generic_string();
    j["config"] = {{"containment_threshold", config_.containment_threshold},
                   {"uniqueness_threshold", config_.uniqueness_threshold},
                   {"sketch_seed", config_.sketch_seed},
                   {"exact_verify_limit", config_.exact_verify_limit},
                   {"sketch_slots", kSketchSlots}};
    auto& tables = j["tables"] = nlohmann::json::array();
    for (const auto& t : tables_) {
      tables.push_back({{"id", t.id},
                        {"name", t.name},
                        {"source_path", t.source_path},
                        {"columns", t.columns},
                        {"row_count", t.row_count}});
    }
    auto& profiles = j["profiles"] = nlohmann::json::array();
    for (const auto& p : profiles_) {
      profiles.push_back({{"table", p.column.table},
                          {"column", p.column.column},
                          {"total_count", p.total_count},
                          {"distinct_count", p.distinct_count},
                          {"uniqueness", p.uniqueness},
                          {"inferred_type", std::string(to_string(p.inferred_type))},
                          {"sketch", p.sketch.slots}});
    }
    auto& edges = j["ind_edges"] = nlohmann::json::array();
    for (const auto& e : ind_edges_) {
      edges.push_back({{"from", {{"table", e.from.table}, {"column", e.from.column}}},
                       {"to", {{"table", e.to.table}, {"column", e.to.column}}},
                       {"containment", e.containment}});
    }
    return j;
  }

private:
  static std::string escape_value(const std::string& v) {
    std::string out;
    for (char c : v) {
      switch (c) {
        case '\\': out += "\\\\"; break;
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        default: out.push_back(c);
      }
    }
    return out;
  }

  static std::string unescape_value(const std::string& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == '\\' && i + 1 < v.size()) {
        char n = v[++i];
        out.push_back(n == 't' ? '\t' : n == 'n' ? '\n' : n == 'r' ? '\r' : n);
      } else {
        out.push_back(v[i]);
      }
    }
    return out;
  }

  void rebuild_derived() {
    table_pos_.clear();
    for (std::size_t i = 0; i < tables_.size(); ++i) table_pos_[tables_[i].id] = i;
    profile_pos_.clear();
    attribute_index_.clear();
    for (std::size_t i = 0; i < profiles_.size(); ++i) {
      profile_pos_[profiles_[i].column] = i;
      attribute_index_[text::normalize_attribute(profiles_[i].column.column)].push_back(profiles_[i].column);
    }
    for (auto& [_, refs] : attribute_index_) std::sort(refs.begin(), refs.end());

    // Undirected join edges, one per unordered column pair.
    std::map<std::pair<ColumnRef, ColumnRef>, double> pairs;
    for (const auto& e : ind_edges_) {
      auto key = e.from < e.to ? std::make_pair(e.from, e.to) : std::make_pair(e.to, e.from);
      auto& c = pairs[key];
      c = std::max(c, e.containment);
    }
    join_edges_.clear();
    adjacency_.clear();
    for (const auto& [key, c] : pairs) {
      JoinEdge e{join_edges_.size(), key.first, key.second, c};
      adjacency_[e.left.table].push_back({e.id, e.right.table});
      adjacency_[e.right.table].push_back({e.id, e.left.table});
      join_edges_.push_back(std::move(e));
    }

    token_index_.clear();
    for (std::uint32_t vid = 0; vid < values_.size(); ++vid) {
      auto toks = text::tokenize(values_[vid].first);
      std::sort(toks.begin(), toks.end());
      toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
      for (auto& t : toks) token_index_[t].push_back(vid);
    }
  }

  std::filesystem::path corpus_root_;
  IndexConfig config_;
  std::vector<Table> tables_;
  std::vector<ColumnProfile> profiles_;
  std::vector<InclusionDependency> ind_edges_;
  std::vector<JoinEdge> join_edges_;
  std::map<std::string, std::vector<ColumnRef>> attribute_index_;
  std::vector<std::pair<std::string, std::vector<std::uint32_t>>> values_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> token_index_;
  std::map<std::string, std::size_t> table_pos_;
  std::map<ColumnRef, std::size_t> profile_pos_;
  std::map<std::string, std::vector<std::pair<std::size_t, std::string>>> adjacency_;
};

}  // namespace dod
