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

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "dod/fourc/classify.hpp"

namespace dod {

// A view as presented: canonical attribute order, original cell text, and
// the fingerprint used for lookups.
struct StoredView {
  std::string view_id;
  std::string signature;
  std::vector<std::string> schema;  // canonical
  std::vector<Row> rows;            // original text, canonical column order
  std::vector<std::string> sources;
  ViewFingerprint fp;
};

inline StoredView make_stored_view(const std::string& id, const std::vector<std::string>& schema,
                                   const std::vector<Row>& rows, std::vector<std::string> sources = {}) {
  StoredView s;
  s.view_id = id;
  s.fp = fingerprint(id, schema, rows);
  s.schema = s.fp.schema;
  s.signature = text::join(s.schema, ",");
  std::vector<std::size_t> perm(s.schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    auto n = text::normalize_attribute(schema[c]);
    perm[static_cast<std::size_t>(std::lower_bound(s.schema.begin(), s.schema.end(), n) - s.schema.begin())] = c;
  }
  for (const auto& r : rows) {
    Row out(perm.size());
    for (std::size_t c = 0; c < perm.size(); ++c) out[c] = r[perm[c]];
    s.rows.push_back(std::move(out));
  }
  s.sources = sources.empty() ? std::vector<std::string>{id} : std::move(sources);
  return s;
}

class ViewStore {
public:
  ViewStore() = default;
  explicit ViewStore(const std::vector<CandidateView>& views) {
    for (const auto& v : views) add(make_stored_view(v.view_id, v.schema, v.rows));
  }

  void add(StoredView v) {
    auto id = v.view_id;
    views_[id] = std::make_shared<const StoredView>(std::move(v));
  }

  const StoredView& at(const std::string& id) const {
    auto it = views_.find(id);
    if (it == views_.end()) throw std::out_of_range("unknown view '" + id + "'");
    return *it->second;
  }

  bool contains(const std::string& id) const { return views_.count(id) > 0; }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : views_) out.push_back(id);
    return out;
  }

private:
  std::map<std::string, std::shared_ptr<const StoredView>> views_;
};

// Distinct rows (by row hash) of the given views, in view then row order.
inline StoredView union_views(const std::string& id, const std::vector<const StoredView*>& parts) {
  std::vector<Row> rows;
  std::set<Hash128> seen;
  std::vector<std::string> sources;
  for (const auto* p : parts) {
    sources.insert(sources.end(), p->sources.begin(), p->sources.end());
    for (std::size_t r = 0; r < p->rows.size(); ++r) {
      if (!seen.insert(p->fp.row_hash_list[r]).second) continue;
      rows.push_back(p->rows[r]);
    }
  }
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
  return make_stored_view(id, parts.front()->schema, rows, std::move(sources));
}

}  // namespace dod
