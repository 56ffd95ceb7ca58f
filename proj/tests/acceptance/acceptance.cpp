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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/narrative_fixture.hpp"
#include "../support/temp_dir.hpp"
#include "../support/view_generator.hpp"
#include "dod/dod.hpp"

namespace {

using namespace dod;
using dod::testing::ScratchDir;
using dod::testing::write_table;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x, int prec = 3) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(prec);
  o << x;
  return o.str();
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "dod");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in;
  std::ostringstream out, err;
  int rc = run_cli(static_cast<int>(argv.size()), argv.data(), in, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

std::vector<Row> sorted(std::vector<Row> rows) {
  std::sort(rows.begin(), rows.end());
  return rows;
}

// ---- 1 ------------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  int bad = 0, sets = 0;
  std::size_t max_views = 0, max_rows = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    auto views = dod::testing::random_view_set(seed, {20, 500, 6});
    max_views = std::max(max_views, views.size());
    for (const auto& v : views) max_rows = std::max(max_rows, v.rows.size());
    ++sets;
    if (!classify(views).same_classification(no_chasing_oracle(views))) {
      ++bad;
      std::cerr << "  oracle mismatch on seed " << seed << "\n";
    }
  }
  const double t = seconds_since(t0);
  return {bad == 0 && t <= 300.0, std::to_string(sets) + " view sets (<=" + std::to_string(max_views) + " views, <=" +
                                      std::to_string(max_rows) + " rows), " + std::to_string(bad) + " mismatches, " +
                                      fmt(t, 1) + " s"};
}

// ---- 2 ------------------------------------------------------------------

Outcome narrative() {
  auto views = dod::testing::narrative_views();
  auto result = classify(views);
  auto s = summarize(result, views, "acceptance");
  std::size_t compatible = 0;
  for (const auto& g : result.schemas.at(0).c1) compatible = std::max(compatible, g.members.size());
  const bool ok = views.size() == 14 && compatible == 8 && s.pending_views.size() <= 3 && s.prompts_shown == 1 &&
                  s.next_prompt.has_value();
  return {ok, std::to_string(views.size()) + " views, largest compatible group " + std::to_string(compatible) + ", " +
                  std::to_string(s.pending_views.size()) + " surviving, " + std::to_string(s.prompts_shown) +
                  " prompt"};
}

// ---- 3 ------------------------------------------------------------------

Outcome chasing_speedup() {
  auto views = dod::testing::shared_contradiction_views(100, 1000, 7);
  auto fps = fingerprint_all(views);

  auto t0 = Clock::now();
  auto chased = classify(fps);
  const double t_chase = seconds_since(t0);
  t0 = Clock::now();
  auto plain = no_chasing_oracle(fps);
  const double t_plain = seconds_since(t0);

  const auto& s = plain.schemas.at(0);
  std::size_t shared = 0;
  for (const auto& p : s.c4) {
    if (std::find(p.contradictory_keys.begin(), p.contradictory_keys.end(), "k0") != p.contradictory_keys.end()) {
      ++shared;
    }
  }
  const double share = s.c34.empty() ? 0.0 : static_cast<double>(shared) / static_cast<double>(s.c34.size());
  const bool ok = share >= 0.8 && t_chase <= 0.2 * t_plain &&
                  chased.metrics.cell_comparisons < plain.metrics.cell_comparisons &&
                  chased.same_classification(plain);
  return {ok, "C34 pairs " + std::to_string(s.c34.size()) + ", shared contradiction in " + fmt(100 * share, 1) +
                  "%, classify " + fmt(t_chase) + " s vs oracle " + fmt(t_plain) + " s (" +
                  fmt(100 * t_chase / std::max(t_plain, 1e-9), 1) + "%), cell comparisons " +
                  std::to_string(chased.metrics.cell_comparisons) + " vs " +
                  std::to_string(plain.metrics.cell_comparisons)};
}

// ---- 4 ------------------------------------------------------------------

Outcome overhead_bound() {
  double worst = 0.0;
  std::size_t worst_views = 0;
  auto time_one = [&](const std::vector<CandidateView>& views) {
    auto t0 = Clock::now();
    auto r = classify(views);
    (void)r;
    double t = seconds_since(t0);
    if (t > worst) {
      worst = t;
      worst_views = views.size();
    }
  };
  for (std::uint64_t seed = 1000; seed < 1020; ++seed) time_one(dod::testing::random_view_set(seed, {10, 1000, 6}));
  time_one(dod::testing::shared_contradiction_views(10, 1000, 3));
  return {worst < 2.0, "21 inputs of <=10 views x <=1000 rows, slowest classify " + fmt(worst, 4) + " s (" +
                           std::to_string(worst_views) + " views)"};
}

// ---- 5 ------------------------------------------------------------------

Relation random_relation(std::mt19937_64& rng, std::size_t rows, std::size_t width, std::uint64_t key_domain) {
  Relation rel;
  for (std::size_t c = 0; c < width; ++c) rel.columns.push_back("c" + std::to_string(c));
  rel.rows.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    Row r;
    r.push_back(rng() % 23 == 0 ? "" : "k" + std::to_string(rng() % key_domain));
    for (std::size_t c = 1; c < width; ++c) r.push_back(std::to_string(rng() % 100000));
    rel.rows.push_back(std::move(r));
  }
  return rel;
}

Outcome join_equivalence() {
  std::mt19937_64 rng(2024);
  ScratchDir spill("accept-spill");
  int mismatches = 0, no_spill = 0, budget_runs = 0, budget_external = 0;
  std::size_t biggest = 0, total_files = 0;
  for (int trial = 0; trial < 50; ++trial) {
    // Log-uniform sizes; the first trial is pinned to the upper bound.
    auto size = [&] {
      if (trial == 0) return std::size_t(100000);
      return static_cast<std::size_t>(std::pow(10.0, std::uniform_real_distribution<double>(1.0, 5.0)(rng)));
    };
    const std::size_t nl = size(), nr = size();
    biggest = std::max({biggest, nl, nr});
    const std::uint64_t domain = 1 + std::max(nl, nr) / (1 + rng() % 3);
    auto l = random_relation(rng, nl, 1 + rng() % 3, domain);
    auto r = random_relation(rng, nr, 1 + rng() % 3, domain);
    JoinSpec spec{0, 0, KeyMode::text};

    JoinOptions mem;
    mem.force = JoinStrategy::in_memory;
    auto a = join_two(l, r, spec, mem);

    JoinOptions ext;
    ext.force = JoinStrategy::external;
    ext.spill_dir = spill.path();
    ext.memory_budget_bytes = 4096;
    std::size_t seen = 0;
    ext.on_spill = [&](const std::filesystem::path& dir) {
      for (auto& e : std::filesystem::directory_iterator(dir)) seen += e.is_regular_file();
    };
    auto b = join_two(l, r, spec, ext);
    if (seen == 0) ++no_spill;
    total_files += seen;
    if (sorted(std::move(a.rows)) != sorted(std::move(b.rows))) ++mismatches;

    // Without forcing, an estimated output over the budget must go external.
    JoinOptions planned;
    planned.spill_dir = spill.path();
    planned.memory_budget_bytes = 4096;
    JoinReport rep;
    auto c = join_two(l, r, spec, planned, nullptr, nullptr, &rep);
    if (rep.estimate.bytes > 4096.0) {
      ++budget_runs;
      if (rep.strategy == JoinStrategy::external && rep.spill_files > 0) ++budget_external;
    }
    (void)c;
  }
  const bool clean = std::filesystem::is_empty(spill.path());
  const bool ok = mismatches == 0 && no_spill == 0 && clean && budget_runs > 0 && budget_external == budget_runs;
  return {ok, "50 inputs up to " + std::to_string(biggest) + " rows, " + std::to_string(mismatches) +
                  " mismatches, spill files observed " + std::to_string(total_files) + " (" +
                  std::to_string(no_spill) + " external runs without), budget chose external in " +
                  std::to_string(budget_external) + " of " + std::to_string(budget_runs) +
                  " over-budget runs, spill dir " + (clean ? "cleaned" : "NOT cleaned")};
}

// ---- 6 ------------------------------------------------------------------

std::vector<std::string> hash_rank_keys(const Relation& rel, std::size_t k) {
  std::set<std::string> distinct;
  for (const auto& r : rel.rows) {
    if (auto key = join_key(r[0], KeyMode::text)) distinct.insert(*key);
  }
  std::vector<std::pair<std::uint64_t, std::string>> ranked;
  for (const auto& d : distinct) ranked.emplace_back(hash64(d, kSampleSeed), d);
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) out.push_back(ranked[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

Outcome consistent_sampling() {
  std::mt19937_64 rng(66);
  int copy_mismatch = 0, class_mismatch = 0;
  std::size_t relations_seen = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t base_rows = 200 + rng() % 1800;
    Relation base{{"key", "a", "b"}, {}};
    for (std::size_t i = 0; i < base_rows; ++i) {
      base.rows.push_back({"k" + std::to_string(i), "a" + std::to_string(rng() % 30), "b" + std::to_string(rng() % 30)});
    }
    // Overlapping variants of one base: copies, subsets, edited values and
    // fresh keys.
    std::vector<Relation> rels;
    const int n = 3 + static_cast<int>(rng() % 5);
    for (int v = 0; v < n; ++v) {
      Relation r = base;
      const int kind = static_cast<int>(rng() % 4);
      if (kind == 1 || kind == 3) {
        std::vector<Row> kept;
        for (auto& row : r.rows) {
          if (rng() % 100 < 75) kept.push_back(row);
        }
        r.rows = std::move(kept);
      }
      if (kind == 2 || kind == 3) {
        for (auto& row : r.rows) {
          if (rng() % 50 == 0) row[1] = "edited" + std::to_string(v);
        }
      }
      if (rng() % 2) {
        for (int extra = 0; extra < 40; ++extra) r.rows.push_back({"x" + std::to_string(v) + "_" + std::to_string(extra), "a0", "b0"});
      }
      std::shuffle(r.rows.begin(), r.rows.end(), rng);
      rels.push_back(std::move(r));
    }
    relations_seen += rels.size();
    const std::size_t k = 20 + rng() % 200;

    // Copies of the same table, in any row order, give the same key set.
    Relation copy = rels[0];
    std::shuffle(copy.rows.begin(), copy.rows.end(), rng);
    if (consistent_sample(rels[0], 0, k).keys != consistent_sample(copy, 0, k).keys) ++copy_mismatch;

    std::vector<CandidateView> sampled, oracle;
    for (std::size_t i = 0; i < rels.size(); ++i) {
      const std::string id = "v" + std::to_string(i + 1);
      auto s = consistent_sample(rels[i], 0, k);
      sampled.push_back({id, rels[i].columns, s.rows.rows});
      auto keys = hash_rank_keys(rels[i], k);
      CandidateView o{id, rels[i].columns, {}};
      for (const auto& row : rels[i].rows) {
        auto key = join_key(row[0], KeyMode::text);
        if (key && std::binary_search(keys.begin(), keys.end(), *key)) o.rows.push_back(row);
      }
      oracle.push_back(std::move(o));
    }
    if (!classify(sampled).same_classification(classify(oracle))) ++class_mismatch;
  }
  return {copy_mismatch == 0 && class_mismatch == 0,
          "50 instances, " + std::to_string(relations_seen) + " sampled relations, copy key-set mismatches " +
              std::to_string(copy_mismatch) + ", 4C mismatches vs hash-rank oracle " + std::to_string(class_mismatch)};
}

// ---- 7 ------------------------------------------------------------------

Outcome candidate_groups() {
  std::mt19937_64 rng(77);
  const std::vector<std::string> attrs_pool{"alpha", "beta", "gamma"};
  const std::vector<std::string> noise{"delta", "epsilon", "zeta"};
  int missed = 0, extra = 0, corpora = 0, largest = 0;
  std::size_t oracle_groups = 0;
  for (int trial = 0; trial < 60; ++trial) {
    ScratchDir dir("accept-groups");
    QueryView qv;
    const std::size_t na = 2 + rng() % 2;
    qv.attributes.assign(attrs_pool.begin(), attrs_pool.begin() + static_cast<long>(na));
    const int nt = static_cast<int>(rng() % 3);
    for (int t = 0; t < nt; ++t) {
      std::map<std::string, std::string> tuple;
      for (const auto& a : qv.attributes) {
        if (rng() % 2) tuple[a] = "w" + std::to_string(rng() % 4);
      }
      qv.tuples.push_back(tuple);
    }

    const int n_tables = 1 + static_cast<int>(rng() % 12);
    largest = std::max(largest, n_tables);
    // Raw per-table constraints for the oracle, read off the generated cells.
    std::vector<std::string> names;
    std::vector<std::set<std::size_t>> attr_hits(n_tables);
    std::vector<std::set<std::pair<std::size_t, std::size_t>>> value_hits(n_tables);
    for (int i = 0; i < n_tables; ++i) {
      std::vector<std::string> header;
      for (std::size_t a = 0; a < na; ++a) {
        if (rng() % 3 == 0) header.push_back(qv.attributes[a]);
      }
      for (const auto& z : noise) {
        if (rng() % 2) header.push_back(z);
      }
      if (header.empty()) header.push_back("delta");
      std::vector<Row> rows;
      const std::size_t nr = 3 + rng() % 8;
      for (std::size_t r = 0; r < nr; ++r) {
        Row row;
        for (std::size_t c = 0; c < header.size(); ++c) row.push_back("w" + std::to_string(rng() % 9));
        rows.push_back(row);
      }
      const std::string name = "t" + std::to_string(i);
      names.push_back(name);
      write_table(dir / (name + ".csv"), header, rows);
      for (std::size_t c = 0; c < header.size(); ++c) {
        auto it = std::find(qv.attributes.begin(), qv.attributes.end(), header[c]);
        if (it == qv.attributes.end()) continue;
        const std::size_t a = static_cast<std::size_t>(it - qv.attributes.begin());
        attr_hits[i].insert(a);
        for (std::size_t t = 0; t < qv.tuples.size(); ++t) {
          auto v = qv.tuples[t].find(header[c]);
          if (v == qv.tuples[t].end()) continue;
          for (const auto& row : rows) {
            if (row[c] == v->second) value_hits[i].insert({t, a});
          }
        }
      }
    }

    // Exhaustive: every subset of the corpus, keep the minimal fully-fulfilling ones.
    std::size_t needed_values = 0;
    for (const auto& t : qv.tuples) needed_values += t.size();
    std::vector<std::uint32_t> full;
    for (std::uint32_t mask = 1; mask < (1u << n_tables); ++mask) {
      std::set<std::size_t> ah;
      std::set<std::pair<std::size_t, std::size_t>> vh;
      for (int i = 0; i < n_tables; ++i) {
        if (!(mask & (1u << i))) continue;
        ah.insert(attr_hits[i].begin(), attr_hits[i].end());
        vh.insert(value_hits[i].begin(), value_hits[i].end());
      }
      if (ah.size() == na && vh.size() == needed_values) full.push_back(mask);
    }
    std::set<std::vector<std::string>> oracle;
    for (auto m : full) {
      bool minimal = std::none_of(full.begin(), full.end(), [&](std::uint32_t o) { return o != m && (o & m) == o; });
      if (!minimal) continue;
      std::vector<std::string> tables;
      for (int i = 0; i < n_tables; ++i) {
        if (m & (1u << i)) tables.push_back(names[i]);
      }
      std::sort(tables.begin(), tables.end());
      oracle.insert(tables);
    }

    auto index = DiscoveryIndex::build(dir.path());
    std::set<std::vector<std::string>> got;
    for (const auto& g : find_candidate_groups(find_candidate_tables(index, qv), qv)) {
      if (fulfills_query_view(g.fulfilled, qv)) got.insert(g.tables);
    }
    for (const auto& g : oracle) {
      if (got.count(g)) continue;
      ++missed;
      std::cerr << "  trial " << trial << " missed group " << text::join(g, ",") << "\n";
    }
    for (const auto& g : got) {
      if (oracle.count(g)) continue;
      ++extra;
      std::cerr << "  trial " << trial << " unexpected group " << text::join(g, ",") << "\n";
    }
    oracle_groups += oracle.size();
    ++corpora;
  }
  return {missed == 0 && extra == 0, std::to_string(corpora) + " corpora of <=" + std::to_string(largest) +
                                         " tables, " + std::to_string(oracle_groups) + " minimal full groups, " +
                                         std::to_string(missed) + " missed, " + std::to_string(extra) +
                                         " not minimal or not full"};
}

// ---- 8 ------------------------------------------------------------------

// Hub table of people plus 49 satellite tables keyed by person id. Some
// satellites carry a name or a city column; one has 10^5 rows.
void write_synthetic_corpus(const std::filesystem::path& dir) {
  std::mt19937_64 rng(8888);
  const std::size_t people = 20000;
  {
    std::vector<Row> rows;
    for (std::size_t i = 1; i <= people; ++i) rows.push_back({std::to_string(i), "nm" + std::to_string(i)});
    write_table(dir / "people.csv", {"pid", "name"}, rows);
  }
  for (int t = 1; t < 50; ++t) {
    std::vector<std::string> header{"pid"};
    const bool city = t % 4 == 0, name = t % 9 == 0, dept = t % 3 == 0;
    if (city) header.push_back("city");
    if (name) header.push_back("name");
    if (dept) header.push_back("dept");
    header.push_back("score");
    const std::size_t n = t == 1 ? 100000 : 500 + rng() % 12000;
    std::vector<Row> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t pid = 1 + rng() % people;
      Row row{std::to_string(pid)};
      if (city) row.push_back("c" + std::to_string(rng() % 300));
      if (name) row.push_back("nm" + std::to_string(pid));
      if (dept) row.push_back("d" + std::to_string(rng() % 20));
      row.push_back(std::to_string(rng() % 1000));
      rows.push_back(std::move(row));
    }
    // Person 17 always shows up in the city tables.
    if (city) rows[0][0] = "17";
    char buf[32];
    std::snprintf(buf, sizeof buf, "sat_%02d.csv", t);
    write_table(dir / buf, header, rows);
  }
}

// employee/address rows of employees joined with `other` on EID, straight
// from the CSV files.
std::vector<Row> staff_oracle(const std::filesystem::path& corpus, const std::string& other) {
  auto emp = load_csv_relation(corpus / "employees.csv");
  auto o = load_csv_relation(corpus / (other + ".csv"));
  std::set<Row> out;
  for (const auto& e : emp.rows) {
    for (const auto& r : o.rows) {
      if (std::stoll(e[emp.column_index("EID")]) == std::stoll(r[o.column_index("EID")])) {
        out.insert({e[emp.column_index("employee")], r[o.column_index("address")]});
      }
    }
  }
  return {out.begin(), out.end()};
}

// Rows of a CSV written by the CLI, projected to (employee, address).
std::vector<Row> employee_address_rows(const std::filesystem::path& file) {
  auto rel = load_csv_relation(file);
  auto e = rel.column_index("employee");
  auto a = rel.column_index("address");
  std::set<Row> out;
  for (const auto& r : rel.rows) out.insert({r[e], r[a]});
  return {out.begin(), out.end()};
}

Outcome end_to_end() {
  std::ostringstream detail;
  bool ok = true;

  ScratchDir dir("accept-e2e");
  write_synthetic_corpus(dir / "corpus");
  std::ofstream(dir / "query.yaml") << "attributes: [name, city]\ntuples:\n  - {name: nm17}\n";
  std::string out, err;
  auto t0 = Clock::now();
  if (cli({"index", (dir / "corpus").string(), "--out", (dir / "idx").string()}, &out, &err) != 0) {
    return {false, "index failed: " + err};
  }
  const double t_index = seconds_since(t0);
  t0 = Clock::now();
  int rc = cli({"query", "--index", (dir / "idx").string(), "--query", (dir / "query.yaml").string(), "--strategy",
                "multi-row", "--json"},
               &out, &err);
  const double t_query = seconds_since(t0);
  if (rc != 0) return {false, "query failed: " + err};
  auto report = nlohmann::json::parse(out);
  const auto& tm = report["timings"];
  const double total = tm["total"];
  const double sum = tm["does_join"].get<double>() + tm["does_materialize"].get<double>() +
                     tm["materialize"].get<double>() + tm["4c"].get<double>() + tm["other"].get<double>();
  const std::size_t n_views = report["counts"]["views"];
  const bool timed = t_query <= 60.0 && total > 0 && std::abs(sum - total) <= 0.05 * total;
  const bool presented = n_views > 0 && report.contains("multi_row") && !report["multi_row"].empty();
  ok = ok && timed && presented;
  detail << "50 tables: index " << fmt(t_index, 1) << " s, query " << fmt(t_query, 2) << " s, " << n_views
         << " views, timing categories " << fmt(sum, 3) << " of total " << fmt(total, 3) << " s";

  // staff fixture: four views including the customers join. Home (billing) and
  // work (staff 2019, staff 2020) readings are all legitimate, so each of
  // them must still be on offer after automatic reduction.
  const std::filesystem::path staff = std::filesystem::path(DOD_FIXTURE_DIR) / "staff";
  if (cli({"index", (staff / "corpus").string(), "--out", (dir / "staffidx").string()}, &out, &err) != 0) {
    return {false, detail.str() + "; staff index failed: " + err};
  }
  rc = cli({"query", "--index", (dir / "staffidx").string(), "--query", (staff / "query.yaml").string(), "--max-hops",
            "1", "--json", "--out", (dir / "staffout").string()},
           &out, &err);
  if (rc != 0) return {false, detail.str() + "; staff query failed: " + err};
  auto fr = nlohmann::json::parse(out);
  bool customers = false;
  for (const auto& v : fr["views"]) customers = customers || v.dump().find("customers") != std::string::npos;
  std::vector<std::vector<Row>> surviving;
  for (const auto& id : fr["summary"]["pending_views"]) {
    surviving.push_back(employee_address_rows(dir / "staffout" / (id.get<std::string>() + ".csv")));
  }
  std::size_t found = 0;
  for (const char* t : {"billing_address", "staff_2019", "staff_2020"}) {
    auto want = staff_oracle(staff / "corpus", t);
    found += std::find(surviving.begin(), surviving.end(), want) != surviving.end();
  }
  const bool staff_ok = fr["views"].size() == 4 && customers && found == 3;
  ok = ok && staff_ok;
  detail << "; staff fixture: " << fr["views"].size() << " views, customers join " << (customers ? "present" : "missing")
         << ", " << found << " of 3 legitimate views among " << surviving.size() << " survivors";
  return {ok, detail.str()};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "classify equals no-chasing oracle", oracle_equivalence},
      {2, "narrative fixture reduces to <=3 views and 1 prompt", narrative},
      {3, "chasing speedup on shared contradiction", chasing_speedup},
      {4, "classify overhead under 2 s", overhead_bound},
      {5, "in-memory and external joins agree", join_equivalence},
      {6, "consistent sampling", consistent_sampling},
      {7, "candidate groups match exhaustive oracle", candidate_groups},
      {8, "end-to-end CLI run", end_to_end},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << " ("
              << fmt(seconds_since(t0), 2) << " s)" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
