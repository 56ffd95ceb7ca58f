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
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dod/fourc/fingerprint.hpp"
#include "dod/fourc/result.hpp"

namespace dod {

inline constexpr double kKeyScoreFloor = 0.5;

struct ClassifyOptions {
  double key_floor = kKeyScoreFloor;
};

// Views grouped by schema signature; each bucket lists fingerprint indices
// ordered by view id.
inline std::map<std::string, std::vector<std::size_t>> classify_per_schema(const std::vector<ViewFingerprint>& fps) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < fps.size(); ++i) out[text::join(fps[i].schema, ",")].push_back(i);
  for (auto& [_, idx] : out) {
    std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return fps[x].view_id < fps[y].view_id; });
  }
  return out;
}

// Compatible groups: equal view hash and equal distinct row count, confirmed
// by comparing the distinct row hash sets. Input must be ordered by view id.
inline std::vector<CompatibleGroup> identify_c1(const std::vector<const ViewFingerprint*>& views) {
  std::map<std::pair<Hash128, std::size_t>, std::vector<std::vector<const ViewFingerprint*>>> by_hash;
  for (const auto* v : views) {
    auto& slots = by_hash[{v->view_hash, v->row_hash_set.size()}];
    auto it = std::find_if(slots.begin(), slots.end(),
                           [&](const auto& g) { return g.front()->row_hash_set == v->row_hash_set; });
    if (it == slots.end()) {
      slots.push_back({v});
    } else {
      it->push_back(v);
    }
  }
  std::vector<CompatibleGroup> out;
  for (const auto& [_, slots] : by_hash) {
    for (const auto& members : slots) {
      CompatibleGroup g;
      g.representative = members.front()->view_id;
      for (const auto* m : members) {
        g.members.push_back(m->view_id);
        if (m->row_hash_list.size() != members.front()->row_hash_list.size()) {
          g.multiplicity_mismatch = true;
        } else {
          for (std::size_t i = 0; i < m->hash_positions.size(); ++i) {
            if (m->hash_positions[i].first != members.front()->hash_positions[i].first) {
              g.multiplicity_mismatch = true;
              break;
            }
          }
        }
      }
      out.push_back(std::move(g));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const CompatibleGroup& a, const CompatibleGroup& b) { return a.representative < b.representative; });
  return out;
}

namespace fourc_detail {

// Positions of rows of `a` whose hash is absent from `b`.
inline std::vector<std::size_t> missing_rows(const ViewFingerprint& a, const ViewFingerprint& b,
                                             FourCMetrics& m) {
  std::vector<std::size_t> out;
  auto it = b.row_hash_set.begin();
  for (const auto& [h, pos] : a.hash_positions) {
    while (it != b.row_hash_set.end() && *it < h) {
      ++it;
      ++m.hash_probes;
    }
    ++m.hash_probes;
    if (it == b.row_hash_set.end() || *it != h) out.push_back(pos);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Does every distinct row of `a` appear in `b`?
inline bool subset_of(const ViewFingerprint& a, const ViewFingerprint& b, FourCMetrics& m) {
  if (a.row_hash_set.size() > b.row_hash_set.size()) return false;
  auto it = b.row_hash_set.begin();
  for (const auto& h : a.row_hash_set) {
    while (it != b.row_hash_set.end() && *it < h) {
      ++it;
      ++m.hash_probes;
    }
    ++m.hash_probes;
    if (it == b.row_hash_set.end() || *it != h) return false;
  }
  return true;
}

}  // namespace fourc_detail

struct ContainmentScan {
  std::vector<ContainmentGroup> c2;
  std::vector<C34Pair> c34;
};

// Containment between representatives, and the pairs left for C3/C4 with
// their differing row positions. Input must be ordered by view id.
inline ContainmentScan identify_c2_and_candidate_c3c4(const std::vector<const ViewFingerprint*>& reps,
                                                      FourCMetrics& metrics) {
  using namespace fourc_detail;
  ContainmentScan out;
  std::map<std::string, std::vector<std::string>> contained;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    for (std::size_t j = i + 1; j < reps.size(); ++j) {
      const auto& a = *reps[i];
      const auto& b = *reps[j];
      if (subset_of(b, a, metrics)) {
        contained[a.view_id].push_back(b.view_id);
      } else if (subset_of(a, b, metrics)) {
        contained[b.view_id].push_back(a.view_id);
      } else {
        out.c34.push_back({a.view_id, b.view_id, missing_rows(a, b, metrics), missing_rows(b, a, metrics)});
      }
    }
  }
  for (auto& [c, list] : contained) {
    std::sort(list.begin(), list.end());
    out.c2.push_back({c, std::move(list)});
  }
  return out;
}

// Most likely key for a pair: the attribute maximizing the smaller of the two
// key scores, leftmost on ties; none when that score is under the floor.
inline std::optional<std::size_t> most_likely_key(const ViewFingerprint& a, const ViewFingerprint& b,
                                                  double floor = kKeyScoreFloor) {
  std::optional<std::size_t> best;
  double best_score = -1.0;
  for (std::size_t c = 0; c < a.schema.size(); ++c) {
    double s = std::min(a.key_scores[c], b.key_scores[c]);
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  if (!best || best_score < floor) return std::nullopt;
  return best;
}

namespace fourc_detail {

using KeyRows = std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>;

// Evidence for contradictory keys: attributes whose value sets differ per
// key. The contradiction attribute is the one differing for the most keys
// (leftmost on ties) and its values are the keys where it differs.
inline void fill_evidence(ContradictoryPair& p, const ViewFingerprint& a, const ViewFingerprint& b, std::size_t key,
                          const KeyRows& shared, FourCMetrics& m) {
  const std::size_t width = a.schema.size();
  std::vector<std::size_t> counts(width, 0);
  std::vector<std::vector<std::size_t>> per_key_attrs;
  for (const auto& [kv, rows] : shared) {
    ContradictionEvidence e;
    e.key_value = kv;
    e.rows_a = rows.first;
    e.rows_b = rows.second;
    std::vector<std::size_t> attrs;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == key) continue;
      std::set<std::string_view> va;
      std::set<std::string_view> vb;
      for (auto r : rows.first) va.insert(a.cells[r][c]);
      for (auto r : rows.second) vb.insert(b.cells[r][c]);
      m.cell_comparisons += rows.first.size() + rows.second.size();
      if (va != vb) attrs.push_back(c);
    }
    if (attrs.empty()) {
      for (std::size_t c = 0; c < width; ++c) {
        if (c != key) attrs.push_back(c);
      }
    }
    for (auto c : attrs) {
      ++counts[c];
      e.attributes.push_back(a.schema[c]);
    }
    per_key_attrs.push_back(std::move(attrs));
    p.contradictory_keys.push_back(kv);
    p.evidence.push_back(std::move(e));
  }
  std::size_t kc = key;
  std::size_t best = 0;
  for (std::size_t c = 0; c < width; ++c) {
    if (counts[c] > best) {
      best = counts[c];
      kc = c;
    }
  }
  p.contradiction_attribute = a.schema[kc];
  std::size_t i = 0;
  for (const auto& [kv, _] : shared) {
    if (kc == key || std::find(per_key_attrs[i].begin(), per_key_attrs[i].end(), kc) != per_key_attrs[i].end()) {
      p.contradiction_values.push_back(kv);
    }
    ++i;
  }
}

struct PairOutcome {
  std::optional<ComplementaryPair> c3;
  std::optional<ContradictoryPair> c4;
};

inline PairOutcome outcome_from_keys(const C34Pair& pair, const ViewFingerprint& a, const ViewFingerprint& b,
                                     std::size_t key, const KeyRows& shared, FourCMetrics& m) {
  PairOutcome out;
  if (shared.empty()) {
    out.c3 = ComplementaryPair{pair.a, pair.b, pair.rows_a, pair.rows_b, a.schema[key], false};
    return out;
  }
  ContradictoryPair p;
  p.a = pair.a;
  p.b = pair.b;
  p.key = a.schema[key];
  fill_evidence(p, a, b, key, shared, m);
  for (auto r : pair.rows_a) {
    if (!shared.count(a.cells[r][key])) p.complementary_rows_a.push_back(r);
  }
  for (auto r : pair.rows_b) {
    if (!shared.count(b.cells[r][key])) p.complementary_rows_b.push_back(r);
  }
  out.c4 = std::move(p);
  return out;
}

// Full processing of one pair: project the key of the differing rows on both
// sides and intersect.
inline PairOutcome resolve_full(const C34Pair& pair, const ViewFingerprint& a, const ViewFingerprint& b,
                                std::size_t key, FourCMetrics& m) {
  ++m.pairs_full;
  std::unordered_map<std::string_view, std::vector<std::size_t>> ka;
  for (auto r : pair.rows_a) {
    const auto& v = a.cells[r][key];
    ++m.cell_comparisons;
    if (!v.empty()) ka[v].push_back(r);
  }
  KeyRows shared;
  for (auto r : pair.rows_b) {
    const auto& v = b.cells[r][key];
    ++m.cell_comparisons;
    if (v.empty()) continue;
    auto it = ka.find(v);
    if (it == ka.end()) continue;
    auto& slot = shared[v];
    if (slot.first.empty()) slot.first = it->second;
    slot.second.push_back(r);
  }
  return outcome_from_keys(pair, a, b, key, shared, m);
}

inline bool hash_in(const std::vector<Hash128>& set, Hash128 h, FourCMetrics& m) {
  ++m.hash_probes;
  return std::binary_search(set.begin(), set.end(), h);
}

// Per-view key index, built on first use for a given key attribute.
class KeyIndex {
public:
  const std::vector<std::size_t>* rows(const ViewFingerprint& v, std::size_t view, std::size_t attr,
                                       const std::string& key) {
    auto& idx = cache_[{view, attr}];
    if (!idx) {
      idx.emplace();
      for (std::size_t r = 0; r < v.cells.size(); ++r) {
        if (!v.cells[r][attr].empty()) (*idx)[v.cells[r][attr]].push_back(r);
      }
    }
    auto it = idx->find(key);
    return it == idx->end() ? nullptr : &it->second;
  }

private:
  std::map<std::pair<std::size_t, std::size_t>, std::optional<std::unordered_map<std::string, std::vector<std::size_t>>>>
      cache_;
};

}  // namespace fourc_detail

struct C3C4 {
  std::vector<ComplementaryPair> c3;
  std::vector<ContradictoryPair> c4;
};

// Resolves candidate pairs into complementary and contradictory ones. A
// contradiction found on a pair marks both views with (key, values); later
// pairs touching a marked view with the same key first test those values by
// key lookup, and only fall back to full processing when none is confirmed.
inline C3C4 identify_c3_and_c4(const std::vector<C34Pair>& pairs, const std::vector<const ViewFingerprint*>& views,
                               FourCMetrics& m, const ClassifyOptions& opt = {}) {
  using namespace fourc_detail;
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < views.size(); ++i) pos[views[i]->view_id] = i;
  std::vector<std::map<std::size_t, std::set<std::string>>> marks(views.size());
  KeyIndex index;
  C3C4 out;

  for (const auto& pair : pairs) {
    const std::size_t ia = pos.at(pair.a);
    const std::size_t ib = pos.at(pair.b);
    const auto& a = *views[ia];
    const auto& b = *views[ib];
    auto key = most_likely_key(a, b, opt.key_floor);
    if (!key) {
      out.c3.push_back({pair.a, pair.b, pair.rows_a, pair.rows_b, std::nullopt, true});
      continue;
    }

    std::set<std::string> candidates;
    for (auto v : {ia, ib}) {
      if (auto it = marks[v].find(*key); it != marks[v].end()) candidates.insert(it->second.begin(), it->second.end());
    }
    KeyRows confirmed;
    for (const auto& kv : candidates) {
      ++m.chase_attempts;
      const auto* ra = index.rows(a, ia, *key, kv);
      const auto* rb = index.rows(b, ib, *key, kv);
      if (!ra || !rb) continue;
      std::vector<std::size_t> da;
      std::vector<std::size_t> db;
      for (auto r : *ra) {
        if (!hash_in(b.row_hash_set, a.row_hash_list[r], m)) da.push_back(r);
      }
      if (da.empty()) continue;
      for (auto r : *rb) {
        if (!hash_in(a.row_hash_set, b.row_hash_list[r], m)) db.push_back(r);
      }
      if (db.empty()) continue;
      confirmed[kv] = {std::move(da), std::move(db)};
    }

    PairOutcome res;
    if (!confirmed.empty()) {
      ++m.pairs_chased;
      ContradictoryPair p;
      p.a = pair.a;
      p.b = pair.b;
      p.key = a.schema[*key];
      p.chased = true;
      fill_evidence(p, a, b, *key, confirmed, m);
      res.c4 = std::move(p);
    } else {
      res = resolve_full(pair, a, b, *key, m);
    }

    if (res.c4) {
      for (const auto& kv : res.c4->contradiction_values) {
        marks[ia][*key].insert(kv);
        marks[ib][*key].insert(kv);
      }
      out.c4.push_back(std::move(*res.c4));
    } else {
      out.c3.push_back(std::move(*res.c3));
    }
  }
  auto by_pair = [](const auto& x, const auto& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); };
  std::sort(out.c3.begin(), out.c3.end(), by_pair);
  std::sort(out.c4.begin(), out.c4.end(), by_pair);
  return out;
}

namespace fourc_detail {

using PairResolver = std::function<C3C4(const std::vector<C34Pair>&, const std::vector<const ViewFingerprint*>&,
                                        FourCMetrics&)>;

inline FourCResult run(const std::vector<ViewFingerprint>& fps, const PairResolver& resolve) {
  std::set<std::string> ids;
  for (const auto& f : fps) {
    if (!ids.insert(f.view_id).second) throw std::invalid_argument("duplicate view id '" + f.view_id + "'");
  }
  FourCResult out;
  for (const auto& [sig, members] : classify_per_schema(fps)) {
    SchemaResult s;
    s.signature = sig;
    s.schema = fps[members.front()].schema;
    std::vector<const ViewFingerprint*> views;
    std::map<std::string, const ViewFingerprint*> by_id;
    for (auto i : members) {
      views.push_back(&fps[i]);
      s.views.push_back(fps[i].view_id);
      by_id[fps[i].view_id] = &fps[i];
    }
    s.c1 = identify_c1(views);
    std::vector<const ViewFingerprint*> reps;
    for (const auto& g : s.c1) reps.push_back(by_id.at(g.representative));
    std::sort(reps.begin(), reps.end(), [](auto* x, auto* y) { return x->view_id < y->view_id; });
    auto scan = identify_c2_and_candidate_c3c4(reps, out.metrics);
    s.c2 = std::move(scan.c2);
    s.c34 = std::move(scan.c34);
    auto resolved = resolve(s.c34, reps, out.metrics);
    s.c3 = std::move(resolved.c3);
    s.c4 = std::move(resolved.c4);
    out.schemas.push_back(std::move(s));
  }
  return out;
}

}  // namespace fourc_detail

inline std::vector<ViewFingerprint> fingerprint_all(const std::vector<CandidateView>& views) {
  std::vector<ViewFingerprint> fps;
  fps.reserve(views.size());
  for (const auto& v : views) fps.push_back(fingerprint(v));
  return fps;
}

inline FourCResult classify(const std::vector<ViewFingerprint>& fps, const ClassifyOptions& opt = {}) {
  return fourc_detail::run(fps, [&](const auto& pairs, const auto& reps, FourCMetrics& m) {
    return identify_c3_and_c4(pairs, reps, m, opt);
  });
}

inline FourCResult classify(const std::vector<CandidateView>& views, const ClassifyOptions& opt = {}) {
  return classify(fingerprint_all(views), opt);
}

// Baseline without chasing: the same hashing front end, then every candidate
// pair is settled by comparing each differing row of one side with each
// differing row of the other, cell by cell.
inline FourCResult no_chasing_oracle(const std::vector<ViewFingerprint>& fps, const ClassifyOptions& opt = {}) {
  using namespace fourc_detail;
  return run(fps, [&](const std::vector<C34Pair>& pairs, const std::vector<const ViewFingerprint*>& views,
                      FourCMetrics& m) {
    std::map<std::string, const ViewFingerprint*> by_id;
    for (const auto* v : views) by_id[v->view_id] = v;
    C3C4 out;
    for (const auto& pair : pairs) {
      const auto& a = *by_id.at(pair.a);
      const auto& b = *by_id.at(pair.b);
      auto key = most_likely_key(a, b, opt.key_floor);
      if (!key) {
        out.c3.push_back({pair.a, pair.b, pair.rows_a, pair.rows_b, std::nullopt, true});
        continue;
      }
      ++m.pairs_full;
      KeyRows shared;
      for (auto ra : pair.rows_a) {
        for (auto rb : pair.rows_b) {
          ++m.cell_comparisons;
          const auto& ka = a.cells[ra][*key];
          if (ka.empty() || ka != b.cells[rb][*key]) continue;
          for (std::size_t c = 0; c < a.schema.size(); ++c) {
            if (c != *key) ++m.cell_comparisons;
          }
          auto& slot = shared[ka];
          if (std::find(slot.first.begin(), slot.first.end(), ra) == slot.first.end()) slot.first.push_back(ra);
          if (std::find(slot.second.begin(), slot.second.end(), rb) == slot.second.end()) slot.second.push_back(rb);
        }
      }
      for (auto& [_, rows] : shared) {
        std::sort(rows.first.begin(), rows.first.end());
        std::sort(rows.second.begin(), rows.second.end());
      }
      auto res = outcome_from_keys(pair, a, b, *key, shared, m);
      if (res.c4) {
        out.c4.push_back(std::move(*res.c4));
      } else {
        out.c3.push_back(std::move(*res.c3));
      }
    }
    return out;
  });
}

inline FourCResult no_chasing_oracle(const std::vector<CandidateView>& views, const ClassifyOptions& opt = {}) {
  return no_chasing_oracle(fingerprint_all(views), opt);
}

}  // namespace dod
