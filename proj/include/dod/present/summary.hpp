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
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dod/fourc/result.hpp"
#include "dod/present/view_store.hpp"

namespace dod {

inline constexpr const char* kSkipChoice = "skip";

struct ActionEntry {
  std::string kind;  // summarize-compatible, keep-max-contained, union-complementary, user-choice, skip
  std::string signature;
  std::vector<std::string> removed;
  std::vector<std::string> added;
  std::string detail;
  std::string prompt_id;
  std::string chosen;

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", kind}, {"signature", signature}, {"removed", removed}, {"added", added}};
    if (!detail.empty()) j["detail"] = detail;
    if (!prompt_id.empty()) j["prompt_id"] = prompt_id;
    if (!chosen.empty()) j["chosen"] = chosen;
    return j;
  }
};

struct PromptSide {
  std::string view_id;
  std::vector<Row> rows;  // rows carrying the contradictory key values
};

struct ContradictionPrompt {
  std::string prompt_id;
  std::string signature;
  std::vector<std::string> schema;
  std::string key;
  std::string contradiction_attribute;
  std::vector<std::string> contradiction_values;
  PromptSide a;
  PromptSide b;
  std::size_t degree = 0;  // views contradicted by `a`

  nlohmann::json to_json() const {
    auto side = [](const PromptSide& s) { return nlohmann::json{{"view_id", s.view_id}, {"rows", s.rows}}; };
    return {{"prompt_id", prompt_id},
            {"signature", signature},
            {"schema", schema},
            {"key", key},
            {"contradiction_attribute", contradiction_attribute},
            {"contradiction_values", contradiction_values},
            {"degree", degree},
            {"views", {side(a), side(b)}}};
  }
};

class ChoiceError : public std::runtime_error {
public:
  enum class Kind { stale_prompt, unknown_view };
  ChoiceError(Kind k, const std::string& what) : std::runtime_error(what), kind_(k) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

struct ReductionReport {
  std::size_t input_views = 0;
  std::size_t final_views = 0;
  std::size_t prompts_shown = 0;
  std::size_t choices_made = 0;
};

struct SummarySession {
  std::string session_id;
  std::shared_ptr<const FourCResult> result;
  std::shared_ptr<ViewStore> store;
  std::set<std::string> initial_views;
  std::set<std::string> pending_views;
  std::vector<ActionEntry> action_log;
  std::optional<ContradictionPrompt> next_prompt;
  std::set<std::pair<std::string, std::string>> skipped;
  std::size_t prompts_shown = 0;
  std::size_t choices_made = 0;

  bool complete() const { return !next_prompt.has_value(); }

  ReductionReport report() const { return {initial_views.size(), pending_views.size(), prompts_shown, choices_made}; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["session_id"] = session_id;
    j["pending_views"] = std::vector<std::string>(pending_views.begin(), pending_views.end());
    j["action_log"] = nlohmann::json::array();
    for (const auto& a : action_log) j["action_log"].push_back(a.to_json());
    j["next_prompt"] = next_prompt ? next_prompt->to_json() : nlohmann::json(nullptr);
    j["complete"] = complete();
    j["report"] = {{"input_views", initial_views.size()},
                   {"final_views", pending_views.size()},
                   {"prompts_shown", prompts_shown},
                   {"choices_made", choices_made}};
    return j;
  }
};

namespace summary_detail {

inline std::string union_id(std::vector<std::string> sources) {
  std::sort(sources.begin(), sources.end());
  return "union(" + text::join(sources, "+") + ")";
}

inline bool is_union(const std::string& id) { return id.rfind("union(", 0) == 0; }

inline void apply(SummarySession& s, ActionEntry e) {
  for (const auto& r : e.removed) s.pending_views.erase(r);
  for (const auto& a : e.added) s.pending_views.insert(a);
  s.action_log.push_back(std::move(e));
}

inline std::pair<std::string, std::string> ordered(const std::string& x, const std::string& y) {
  return x < y ? std::make_pair(x, y) : std::make_pair(y, x);
}

// Contradictory pairs with both ends still pending.
inline std::vector<const ContradictoryPair*> live_edges(const SummarySession& s, const SchemaResult& bucket,
                                                        bool include_skipped) {
  std::vector<const ContradictoryPair*> out;
  for (const auto& p : bucket.c4) {
    if (!s.pending_views.count(p.a) || !s.pending_views.count(p.b)) continue;
    if (!include_skipped && s.skipped.count({p.a, p.b})) continue;
    out.push_back(&p);
  }
  return out;
}

// Unions every pending view of the bucket that no longer takes part in a
// contradiction, together with an existing union of the bucket.
inline void union_free_views(SummarySession& s, const SchemaResult& bucket) {
  auto edges = live_edges(s, bucket, true);
  std::set<std::string> busy;
  for (const auto* p : edges) {
    busy.insert(p->a);
    busy.insert(p->b);
  }
  std::vector<std::string> parts;
  for (const auto& id : s.pending_views) {
    if (busy.count(id)) continue;
    const auto& v = s.store->at(id);
    if (v.signature == bucket.signature) parts.push_back(id);
  }
  if (parts.size() < 2) return;
  std::vector<const StoredView*> views;
  std::vector<std::string> sources;
  for (const auto& id : parts) {
    views.push_back(&s.store->at(id));
    sources.insert(sources.end(), views.back()->sources.begin(), views.back()->sources.end());
  }
  auto id = union_id(sources);
  s.store->add(union_views(id, views));
  apply(s, {"union-complementary", bucket.signature, parts, {id}, "", "", ""});
}

inline std::set<std::string> values_at(const StoredView& v, std::size_t key, std::size_t attr,
                                       const std::string& kv) {
  std::set<std::string> out;
  for (const auto& row : v.fp.cells) {
    if (row[key] == kv) out.insert(row[attr]);
  }
  return out;
}

inline std::vector<Row> rows_at(const StoredView& v, std::size_t key, const std::vector<std::string>& kvs) {
  std::vector<Row> out;
  for (std::size_t r = 0; r < v.rows.size(); ++r) {
    if (std::find(kvs.begin(), kvs.end(), v.fp.cells[r][key]) != kvs.end()) out.push_back(v.rows[r]);
  }
  return out;
}

// Picks the pending view with the most live contradictions (lowest id on
// ties) and pairs it with its neighbor of highest degree.
inline void prepare_prompt(SummarySession& s) {
  s.next_prompt.reset();
  std::map<std::string, std::size_t> degree;
  std::vector<std::pair<const SchemaResult*, const ContradictoryPair*>> edges;
  for (const auto& bucket : s.result->schemas) {
    for (const auto* p : live_edges(s, bucket, false)) {
      ++degree[p->a];
      ++degree[p->b];
      edges.emplace_back(&bucket, p);
    }
  }
  if (edges.empty()) return;
  std::string top;
  std::size_t top_degree = 0;
  for (const auto& [id, d] : degree) {
    if (d > top_degree) {
      top = id;
      top_degree = d;
    }
  }
  const ContradictoryPair* pick = nullptr;
  const SchemaResult* bucket = nullptr;
  std::string other;
  for (const auto& [b, p] : edges) {
    if (p->a != top && p->b != top) continue;
    const auto& o = p->a == top ? p->b : p->a;
    if (!pick || degree[o] > degree[other] || (degree[o] == degree[other] && o < other)) {
      pick = p;
      bucket = b;
      other = o;
    }
  }
  const auto& va = s.store->at(top);
  const auto& vb = s.store->at(other);
  auto key = va.fp.attribute_index(pick->key);
  ContradictionPrompt pr;
  pr.prompt_id = "p" + std::to_string(s.prompts_shown + 1);
  pr.signature = bucket->signature;
  pr.schema = bucket->schema;
  pr.key = pick->key;
  pr.contradiction_attribute = pick->contradiction_attribute;
  pr.contradiction_values = pick->contradiction_values;
  pr.a = {top, rows_at(va, key, pick->contradiction_values)};
  pr.b = {other, rows_at(vb, key, pick->contradiction_values)};
  pr.degree = top_degree;
  ++s.prompts_shown;
  s.next_prompt = std::move(pr);
}

}  // namespace summary_detail

// Automatic reduction of a classification: compatible groups collapse to
// their representative, contained views give way to their containers, and
// views free of contradictions are unioned per schema. Views in
// contradictions stay pending and the first prompt is prepared.
inline SummarySession summarize(std::shared_ptr<const FourCResult> result, std::shared_ptr<ViewStore> store,
                                std::string session_id = {}) {
  using namespace summary_detail;
  SummarySession s;
  s.session_id = std::move(session_id);
  s.result = std::move(result);
  s.store = std::move(store);
  for (const auto& bucket : s.result->schemas) {
    s.initial_views.insert(bucket.views.begin(), bucket.views.end());
  }
  s.pending_views = s.initial_views;

  for (const auto& bucket : s.result->schemas) {
    for (const auto& g : bucket.c1) {
      if (g.members.size() < 2) continue;
      std::vector<std::string> removed;
      for (const auto& m : g.members) {
        if (m != g.representative) removed.push_back(m);
      }
      apply(s, {"summarize-compatible", bucket.signature, removed, {}, "representative " + g.representative, "", ""});
    }
    std::set<std::string> contained;
    for (const auto& g : bucket.c2) contained.insert(g.contained.begin(), g.contained.end());
    for (const auto& g : bucket.c2) {
      if (contained.count(g.container)) continue;
      std::vector<std::string> removed;
      for (const auto& c : g.contained) {
        if (s.pending_views.count(c)) removed.push_back(c);
      }
      if (removed.empty()) continue;
      apply(s, {"keep-max-contained", bucket.signature, removed, {}, "container " + g.container, "", ""});
    }
    union_free_views(s, bucket);
  }
  prepare_prompt(s);
  return s;
}

inline SummarySession summarize(const FourCResult& result, const std::vector<CandidateView>& views,
                                std::string session_id = {}) {
  return summarize(std::make_shared<const FourCResult>(result), std::make_shared<ViewStore>(views),
                   std::move(session_id));
}

// Applies the user's answer to the outstanding prompt. The rejected view is
// pruned, as is every other pending view of the schema that holds the same
// losing values of the contradiction attribute at every contradictory key.
inline void apply_choice(SummarySession& s, const std::string& prompt_id, const std::string& chosen) {
  using namespace summary_detail;
  if (!s.next_prompt || s.next_prompt->prompt_id != prompt_id) {
    throw ChoiceError(ChoiceError::Kind::stale_prompt, "prompt '" + prompt_id + "' is not outstanding");
  }
  const auto pr = *s.next_prompt;
  if (chosen != kSkipChoice && chosen != pr.a.view_id && chosen != pr.b.view_id) {
    throw ChoiceError(ChoiceError::Kind::unknown_view, "view '" + chosen + "' is not part of prompt " + prompt_id);
  }
  ++s.choices_made;
  if (chosen == kSkipChoice) {
    s.skipped.insert(ordered(pr.a.view_id, pr.b.view_id));
    apply(s, {"skip", pr.signature, {}, {}, pr.a.view_id + " vs " + pr.b.view_id, pr.prompt_id, kSkipChoice});
  } else {
    const auto& rejected_id = chosen == pr.a.view_id ? pr.b.view_id : pr.a.view_id;
    const auto& rejected = s.store->at(rejected_id);
    const auto key = rejected.fp.attribute_index(pr.key);
    const auto attr = rejected.fp.attribute_index(pr.contradiction_attribute);
    std::vector<std::set<std::string>> losing;
    for (const auto& kv : pr.contradiction_values) losing.push_back(values_at(rejected, key, attr, kv));

    std::vector<std::string> removed{rejected_id};
    for (const auto& id : s.pending_views) {
      if (id == chosen || id == rejected_id || is_union(id)) continue;
      const auto& w = s.store->at(id);
      if (w.signature != pr.signature) continue;
      bool same = true;
      for (std::size_t i = 0; i < losing.size() && same; ++i) {
        same = values_at(w, key, attr, pr.contradiction_values[i]) == losing[i];
      }
      if (same) removed.push_back(id);
    }
    apply(s, {"user-choice", pr.signature, removed, {}, "rejected " + rejected_id, pr.prompt_id, chosen});
    for (const auto& bucket : s.result->schemas) {
      if (bucket.signature == pr.signature) union_free_views(s, bucket);
    }
  }
  prepare_prompt(s);
}

// Rebuilds the pending set from the initial views and a logged action list.
inline std::set<std::string> replay(const std::set<std::string>& initial, const std::vector<ActionEntry>& log) {
  std::set<std::string> pending = initial;
  for (const auto& e : log) {
    for (const auto& r : e.removed) pending.erase(r);
    for (const auto& a : e.added) pending.insert(a);
  }
  return pending;
}

inline nlohmann::json audit_json(const SummarySession& s) {
  nlohmann::json j;
  j["session_id"] = s.session_id;
  j["initial_views"] = std::vector<std::string>(s.initial_views.begin(), s.initial_views.end());
  j["actions"] = nlohmann::json::array();
  for (const auto& a : s.action_log) j["actions"].push_back(a.to_json());
  j["final_views"] = std::vector<std::string>(s.pending_views.begin(), s.pending_views.end());
  j["prompts_shown"] = s.prompts_shown;
  j["choices_made"] = s.choices_made;
  return j;
}

}  // namespace dod
