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

// Runs the employee/address query over the small fixture corpus and walks
// through the contradiction prompts, always keeping the work address.

#include <iostream>

#include "dod/dod.hpp"

int main() {
  using namespace dod;
  const std::filesystem::path root = DOD_FIXTURE_DIR;
  auto index = DiscoveryIndex::build(root / "corpus");
  auto qv = load_query_view(root / "query.yaml");

  RunConfig cfg;
  cfg.max_hops = 1;
  EngineCaches caches(index);
  JoinStats stats;
  auto r = run_pipeline(index, qv, cfg, caches, stats);

  for (const auto& v : r.views) {
    std::cout << v.view_id << " via " << v.provenance.graph.signature() << "\n";
    for (const auto& row : v.rows) std::cout << "    " << text::join(row, " | ") << "\n";
  }

  auto& s = *r.summary;
  while (s.next_prompt) {
    const auto& p = *s.next_prompt;
    std::cout << p.prompt_id << ": " << p.a.view_id << " vs " << p.b.view_id << " on " << p.contradiction_attribute
              << "\n";
    // The work views come from the staff tables.
    auto is_work = [&](const std::string& id) {
      for (const auto& v : r.views) {
        if (v.view_id == id) return v.provenance.graph.signature().find("staff_") != std::string::npos;
      }
      return false;
    };
    std::string keep = is_work(p.a.view_id) ? p.a.view_id : is_work(p.b.view_id) ? p.b.view_id : "skip";
    std::cout << "  keep " << keep << "\n";
    apply_choice(s, p.prompt_id, keep);
  }
  std::cout << "surviving:";
  for (const auto& id : s.pending_views) std::cout << " " << id;
  std::cout << "\n";
  return 0;
}
