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

#include <gtest/gtest.h>

#include <random>

#include "../support/temp_dir.hpp"
#include "dod/engine/caches.hpp"
#include "dod/engine/join.hpp"
#include "dod/engine/materialize.hpp"

using namespace dod;
using dod::testing::ScratchDir;
using dod::testing::write_table;

namespace {

const std::filesystem::path kStaff = std::filesystem::path(DOD_FIXTURE_DIR) / "staff" / "corpus";

std::vector<Row> sorted(std::vector<Row> rows) {
  std::sort(rows.begin(), rows.end());
  return rows;
}

// Nested-loop equi-join.
std::vector<Row> nested_loop(const Relation& l, const Relation& r, const JoinSpec& spec) {
  std::vector<Row> out;
  for (const auto& a : l.rows) {
    auto ka = join_key(a[spec.left_column], spec.mode);
    if (!ka) continue;
    for (const auto& b : r.rows) {
      auto kb = join_key(b[spec.right_column], spec.mode);
      if (!kb || *ka != *kb) continue;
      Row row = a;
      row.insert(row.end(), b.begin(), b.end());
      out.push_back(row);
    }
  }
  return out;
}

Relation random_relation(std::mt19937_64& rng, std::size_t rows, std::size_t width, int key_domain) {
  Relation rel;
  for (std::size_t c = 0; c < width; ++c) rel.columns.push_back("c" + std::to_string(c));
  for (std::size_t i = 0; i < rows; ++i) {
    Row r;
    r.push_back(rng() % 17 == 0 ? "" : "k" + std::to_string(rng() % key_domain));
    for (std::size_t c = 1; c < width; ++c) r.push_back(std::to_string(rng() % 1000));
    rel.rows.push_back(r);
  }
  return rel;
}

struct Staff {
  DiscoveryIndex index = DiscoveryIndex::build(kStaff);
  QueryView qv = load_query_view(std::filesystem::path(DOD_FIXTURE_DIR) / "staff" / "query.yaml");
  EngineCaches caches{index};
  JoinStats stats;
  EngineContext ctx{index, caches, stats, {}};

  // The single one-hop graph joining employees with `table`.
  JoinGraph graph_with(const std::string& table) {
    for (const auto& g : find_candidate_groups(find_candidate_tables(index, qv), qv)) {
      if (std::find(g.tables.begin(), g.tables.end(), table) == g.tables.end()) continue;
      auto found = find_join_graphs(index, g, qv, 1);
      return found.graphs.at(0);
    }
    throw std::logic_error("no group with " + table);
  }
};

// Expected projected rows of employees joined with `other` on the given
// columns, computed straight from the CSV files.
std::vector<Row> staff_oracle(const std::string& other, const std::string& other_key) {
  auto emp = load_csv_relation(kStaff / "employees.csv");
  auto oth = load_csv_relation(kStaff / (other + ".csv"));
  auto ek = emp.column_index("EID");
  auto ok = oth.column_index(other_key);
  auto en = emp.column_index("employee");
  auto oa = oth.column_index("address");
  std::vector<Row> out;
  for (const auto& e : emp.rows) {
    for (const auto& o : oth.rows) {
      if (std::stoll(e[ek]) == std::stoll(o[ok])) out.push_back({e[en], o[oa]});
    }
  }
  return sorted(out);
}

}  // namespace

TEST(JoinKeys, TypeRules) {
  EXPECT_EQ(key_mode_for(ColumnType::integer, ColumnType::real), KeyMode::numeric);
  EXPECT_EQ(key_mode_for(ColumnType::text, ColumnType::text), KeyMode::text);
  EXPECT_THROW(key_mode_for(ColumnType::integer, ColumnType::text), JoinError);
  EXPECT_EQ(join_key("1.0", KeyMode::numeric), join_key("1", KeyMode::numeric));
  EXPECT_NE(join_key("1.0", KeyMode::text), join_key("1", KeyMode::text));
  EXPECT_EQ(join_key(" Raul  CF ", KeyMode::text), join_key("raul cf", KeyMode::text));
  EXPECT_FALSE(join_key("", KeyMode::text).has_value());
}

TEST(JoinTwo, NullKeysNeverMatch) {
  Relation l{{"k", "a"}, {{"", "x"}, {"1", "y"}}};
  Relation r{{"k", "b"}, {{"", "p"}, {"1", "q"}}};
  auto out = join_two(l, r, {0, 0, KeyMode::text});
  ASSERT_EQ(out.rows.size(), 1u);
  EXPECT_EQ(out.rows[0], (Row{"1", "y", "1", "q"}));
  EXPECT_EQ(out.columns, (std::vector<std::string>{"k", "a", "k", "b"}));
}

TEST(JoinTwo, AbsentKeyGivesEmptyResultAndLogsZero) {
  Relation l{{"k"}, {{"a"}, {"b"}}};
  Relation r{{"k"}, {{"c"}}};
  JoinStats stats;
  auto edge = JoinEdgeSpec::make({"l", "k"}, {"r", "k"});
  auto out = join_two(l, r, {0, 0, KeyMode::text}, {}, &stats, &edge);
  EXPECT_TRUE(out.rows.empty());
  ASSERT_EQ(stats.size(), 1u);
  EXPECT_EQ(stats.lookup(edge), 0u);
}

TEST(JoinTwo, BothStrategiesMatchNestedLoop) {
  std::mt19937_64 rng(5);
  ScratchDir spill("spill");
  for (int trial = 0; trial < 25; ++trial) {
    auto l = random_relation(rng, rng() % 300, 1 + rng() % 3, 1 + static_cast<int>(rng() % 60));
    auto r = random_relation(rng, rng() % 300, 1 + rng() % 3, 1 + static_cast<int>(rng() % 60));
    JoinSpec spec{0, 0, KeyMode::text};
    auto expected = sorted(nested_loop(l, r, spec));

    JoinOptions mem;
    mem.force = JoinStrategy::in_memory;
    JoinReport mrep;
    auto a = join_two(l, r, spec, mem, nullptr, nullptr, &mrep);
    EXPECT_EQ(mrep.strategy, JoinStrategy::in_memory);
    EXPECT_EQ(sorted(a.rows), expected);

    JoinOptions ext;
    ext.force = JoinStrategy::external;
    ext.spill_dir = spill.path();
    ext.memory_budget_bytes = 1;
    ext.partitions = 8;
    std::size_t files_seen = 0;
    ext.on_spill = [&](const std::filesystem::path& dir) {
      for (auto& e : std::filesystem::directory_iterator(dir)) files_seen += e.is_regular_file();
    };
    JoinReport erep;
    auto b = join_two(l, r, spec, ext, nullptr, nullptr, &erep);
    EXPECT_EQ(erep.strategy, JoinStrategy::external);
    EXPECT_EQ(sorted(b.rows), expected);
    if (!l.rows.empty() || !r.rows.empty()) EXPECT_EQ(files_seen, erep.spill_files);
  }
  EXPECT_TRUE(std::filesystem::is_empty(spill.path())) << "spill files left behind";
}

TEST(JoinTwo, BudgetPicksExternal) {
  std::mt19937_64 rng(8);
  auto l = random_relation(rng, 2000, 3, 50);
  auto r = random_relation(rng, 2000, 3, 50);
  JoinOptions opt;
  opt.memory_budget_bytes = 1024;
  JoinReport rep;
  auto out = join_two(l, r, {0, 0, KeyMode::text}, opt, nullptr, nullptr, &rep);
  EXPECT_EQ(rep.strategy, JoinStrategy::external);
  EXPECT_GT(rep.spill_files, 0u);
  EXPECT_EQ(sorted(out.rows), sorted(nested_loop(l, r, {0, 0, KeyMode::text})));

  opt.memory_budget_bytes = std::size_t(1) << 40;
  join_two(l, r, {0, 0, KeyMode::text}, opt, nullptr, nullptr, &rep);
  EXPECT_EQ(rep.strategy, JoinStrategy::in_memory);
}

TEST(Estimate, FullFractionIsExact) {
  std::mt19937_64 rng(3);
  auto l = random_relation(rng, 500, 2, 40);
  auto r = random_relation(rng, 500, 2, 40);
  JoinSpec spec{0, 0, KeyMode::text};
  auto est = estimate_join_cardinality(l, r, spec, 1.0);
  EXPECT_DOUBLE_EQ(est.rows, static_cast<double>(count_join(l, r, spec)));
  EXPECT_DOUBLE_EQ(est.bytes, est.rows * (mean_row_bytes(l) + mean_row_bytes(r)));
}

TEST(Estimate, ScalesObservedRowsByFraction) {
  std::mt19937_64 rng(4);
  auto l = random_relation(rng, 1000, 2, 200);
  auto r = random_relation(rng, 1000, 2, 200);
  auto est = estimate_join_cardinality(l, r, {0, 0, KeyMode::text}, 0.1);
  EXPECT_DOUBLE_EQ(est.rows, est.observed_rows / 0.1);
  EXPECT_LT(est.sampled_left_rows, l.rows.size());
}

TEST(Estimate, NoMatchesGivesZero) {
  Relation l{{"k"}, {{"a"}, {"b"}}};
  Relation r{{"k"}, {{"c"}}};
  auto est = estimate_join_cardinality(l, r, {0, 0, KeyMode::text}, 0.1);
  EXPECT_EQ(est.rows, 0.0);
  EXPECT_EQ(est.bytes, 0.0);
  EXPECT_THROW(estimate_join_cardinality(l, r, {0, 0, KeyMode::text}, 0.0), std::invalid_argument);
}

// Each left key matches exactly 3 right rows; with many keys a 10% hash
// sample lands close to the true count.
TEST(Estimate, UniformMatchesWithinTwentyPercent) {
  Relation l{{"k"}, {}};
  Relation r{{"k", "v"}, {}};
  for (int i = 0; i < 5000; ++i) {
    l.rows.push_back({"key" + std::to_string(i)});
    for (int j = 0; j < 3; ++j) r.rows.push_back({"key" + std::to_string(i), std::to_string(j)});
  }
  auto est = estimate_join_cardinality(l, r, {0, 0, KeyMode::text}, 0.1);
  EXPECT_NEAR(est.rows, 15000.0, 3000.0);
}

TEST(ConsistentSample, DeterministicAcrossCopies) {
  std::mt19937_64 rng(12);
  auto a = random_relation(rng, 800, 2, 300);
  auto b = a;
  std::shuffle(b.rows.begin(), b.rows.end(), rng);
  auto sa = consistent_sample(a, 0, 50);
  auto sb = consistent_sample(b, 0, 50);
  EXPECT_EQ(sa.keys.size(), 50u);
  EXPECT_EQ(sa.keys, sb.keys);
  EXPECT_EQ(sorted(sa.rows.rows), sorted(sb.rows.rows));
  EXPECT_EQ(consistent_sample(a, 0, 50).keys, sa.keys);
}

TEST(ConsistentSample, LargeKKeepsEverything) {
  std::mt19937_64 rng(13);
  auto a = random_relation(rng, 100, 2, 30);
  auto s = consistent_sample(a, 0, 30);
  std::vector<Row> keyed;
  for (const auto& r : a.rows) {
    if (!r[0].empty()) keyed.push_back(r);
  }
  ASSERT_LT(keyed.size(), a.rows.size());
  EXPECT_EQ(s.rows.rows, keyed);
  EXPECT_THROW(consistent_sample(a, 0, 0), std::invalid_argument);
}

// The sample equals "sort every distinct key by hash, take the first K".
TEST(ConsistentSample, MatchesHashRankOracle) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    auto a = random_relation(rng, 50 + rng() % 500, 2, 10 + static_cast<int>(rng() % 400));
    const std::size_t k = 1 + rng() % 60;
    const std::uint64_t seed = rng();
    std::set<std::string> distinct;
    for (const auto& r : a.rows) {
      if (auto key = join_key(r[0], KeyMode::text)) distinct.insert(*key);
    }
    std::vector<std::pair<std::uint64_t, std::string>> ranked;
    for (const auto& d : distinct) ranked.emplace_back(hash64(d, seed), d);
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::string> expect;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) expect.push_back(ranked[i].second);
    std::sort(expect.begin(), expect.end());

    auto s = consistent_sample(a, 0, k, KeyMode::text, seed);
    ASSERT_EQ(s.keys, expect) << "trial " << trial;
    std::vector<Row> expect_rows;
    for (const auto& r : a.rows) {
      auto key = join_key(r[0], KeyMode::text);
      if (key && std::binary_search(expect.begin(), expect.end(), *key)) expect_rows.push_back(r);
    }
    EXPECT_EQ(s.rows.rows, expect_rows);
  }
}

TEST(ConsistentSample, ForcedKeysAreAdded) {
  Relation a{{"k"}, {}};
  for (int i = 0; i < 100; ++i) a.rows.push_back({"k" + std::to_string(i)});
  auto base = consistent_sample(a, 0, 5);
  std::string extra;
  for (int i = 0; i < 100 && extra.empty(); ++i) {
    auto k = "k" + std::to_string(i);
    if (!std::binary_search(base.keys.begin(), base.keys.end(), k)) extra = k;
  }
  std::vector<std::string> force{extra, "not-there"};
  auto s = consistent_sample(a, 0, 5, KeyMode::text, kSampleSeed, &force);
  EXPECT_EQ(s.keys.size(), 6u);
  EXPECT_TRUE(std::binary_search(s.keys.begin(), s.keys.end(), extra));
}

TEST(TableCache, EvictsLeastRecentlyUsed) {
  ScratchDir d("lru");
  for (auto t : {"a", "b", "c"}) write_table(d / (std::string(t) + ".csv"), {"x"}, {{"1"}, {"2"}});
  auto idx = DiscoveryIndex::build(d.path());
  auto one = relation_bytes(load_csv_relation(d / "a.csv"));
  TableCache cache(idx, 2 * one);
  cache.get("a");
  cache.get("b");
  cache.get("a");
  cache.get("c");
  EXPECT_EQ(cache.resident(), (std::vector<std::string>{"c", "a"}));
  EXPECT_EQ(cache.evictions(), 1u);
  EXPECT_EQ(cache.hits(), 1u);
  EXPECT_EQ(cache.loads(), 3u);
  cache.get("b");
  EXPECT_EQ(cache.resident(), (std::vector<std::string>{"b", "c"}));
  EXPECT_THROW(cache.get("zzz"), std::out_of_range);
}

TEST(TableCache, OversizedTableIsNotRetained) {
  ScratchDir d("big");
  write_table(d / "a.csv", {"x"}, {{"1"}, {"2"}});
  auto idx = DiscoveryIndex::build(d.path());
  TableCache cache(idx, 8);
  EXPECT_EQ(cache.get("a")->rows.size(), 2u);
  EXPECT_TRUE(cache.resident().empty());
}

TEST(Materialize, StaffViewsMatchOracle) {
  Staff f;
  for (auto [table, key] : std::vector<std::pair<std::string, std::string>>{
           {"billing_address", "EID"}, {"staff_2019", "EID"}, {"staff_2020", "EID"}, {"customers", "CID"}}) {
    auto g = f.graph_with(table);
    auto v = materialize_join_graph(g, MaterializeMode::full(), f.ctx, "v");
    EXPECT_EQ(v.schema, (std::vector<std::string>{"employee", "address"}));
    EXPECT_EQ(sorted(v.rows), staff_oracle(table, key)) << table;
    ASSERT_EQ(v.provenance.steps.size(), 1u);
    EXPECT_EQ(v.provenance.steps[0].output_rows, v.rows.size());
    EXPECT_FALSE(v.sampled);
    EXPECT_EQ(f.stats.lookup(g.edges[0]), v.rows.size());
  }
}

TEST(Materialize, ExportAndProvenance) {
  Staff f;
  auto v = materialize_join_graph(f.graph_with("billing_address"), MaterializeMode::full(), f.ctx, "v1");
  std::ostringstream csv_out;
  export_view_csv(csv_out, v);
  auto doc = csv::parse(csv_out.str());
  EXPECT_EQ(doc.header, v.schema);
  EXPECT_EQ(doc.rows, v.rows);
  auto j = provenance_json(v);
  EXPECT_EQ(j.at("view_id"), "v1");
  EXPECT_EQ(j.at("joins").size(), 1u);
}

TEST(Materialize, ChainJoinsSmallestObservedLeafEdgeFirst) {
  ScratchDir d("chain");
  write_table(d / "a.csv", {"id", "name"}, {{"1", "x"}, {"2", "y"}, {"3", "z"}});
  write_table(d / "b.csv", {"id", "ref"}, {{"1", "r1"}, {"2", "r2"}, {"3", "r3"}});
  write_table(d / "c.csv", {"ref", "city"}, {{"r1", "p"}, {"r2", "q"}, {"r3", "s"}});
  auto idx = DiscoveryIndex::build(d.path());
  EngineCaches caches(idx);
  JoinStats stats;
  EngineContext ctx{idx, caches, stats, {}};
  JoinGraph g;
  g.nodes = {"a", "b", "c"};
  g.group_tables = {"a", "c"};
  auto ab = JoinEdgeSpec::make({"a", "id"}, {"b", "id"});
  auto bc = JoinEdgeSpec::make({"b", "ref"}, {"c", "ref"});
  g.edges = {ab, bc};
  g.projection = {{"name", {"a", "name"}}, {"city", {"c", "city"}}};

  auto first = materialize_join_graph(g, MaterializeMode::full(), ctx);
  EXPECT_EQ(sorted(first.rows), (std::vector<Row>{{"x", "p"}, {"y", "q"}, {"z", "s"}}));
  EXPECT_EQ(first.provenance.steps.at(0).edge, ab);

  stats.record(bc, 1);
  auto second = materialize_join_graph(g, MaterializeMode::full(), ctx);
  EXPECT_EQ(second.provenance.steps.at(0).edge, bc);
  EXPECT_EQ(sorted(second.rows), sorted(first.rows));
}

TEST(Materialize, MixedKeyTypesRaise) {
  Staff f;
  JoinGraph g;
  g.nodes = {"customers", "employees"};
  g.group_tables = g.nodes;
  g.edges = {JoinEdgeSpec::make({"employees", "EID"}, {"customers", "customer"})};
  g.projection = {{"employee", {"employees", "employee"}}};
  EXPECT_THROW(materialize_join_graph(g, MaterializeMode::full(), f.ctx), JoinError);
}

TEST(Materialize, SamplingKeepsValueRowsWhenAsked) {
  Staff f;
  auto g = f.graph_with("customers");
  auto v = materialize_join_graph(g, MaterializeMode::sample(2, true), f.ctx);
  EXPECT_TRUE(v.sampled);
  bool raul = false;
  for (const auto& r : v.rows) raul |= r[0] == "Raul CF";
  EXPECT_TRUE(raul);
  EXPECT_LE(v.rows.size(), 3u);
}

TEST(CheckMaterializable, StaffWitnessHoldsValue) {
  Staff f;
  auto res = check_materializable(f.graph_with("billing_address"), f.ctx);
  ASSERT_TRUE(res.ok) << res.reason;
  ASSERT_EQ(res.witness.size(), 1u);
  EXPECT_EQ(res.witness[0], (Row{"Raul CF", "Pie street"}));
}

TEST(CheckMaterializable, WithoutValueConstraints) {
  Staff f;
  auto g = f.graph_with("staff_2019");
  g.value_constraints.clear();
  auto res = check_materializable(g, f.ctx);
  ASSERT_TRUE(res.ok);
  EXPECT_EQ(res.witness.size(), f.ctx.config.witness_rows);
}

TEST(CheckMaterializable, DeadEndIsRejectedWithoutReading) {
  ScratchDir d("dead");
  write_table(d / "people.csv", {"pid", "name"}, {{"1", "Raul"}, {"2", "Ana"}, {"3", "Bo"}});
  write_table(d / "addr.csv", {"pid", "address"}, {{"2", "X"}, {"3", "Y"}});
  auto idx = DiscoveryIndex::build(d.path());
  auto qv = parse_query_view("attributes: [name, address]\ntuples: [{name: Raul}]");
  auto groups = find_candidate_groups(find_candidate_tables(idx, qv), qv);
  ASSERT_EQ(groups.size(), 1u);
  auto graphs = find_join_graphs(idx, groups[0], qv, 1);
  ASSERT_EQ(graphs.graphs.size(), 1u);

  EngineCaches caches(idx);
  JoinStats stats;
  EngineContext ctx{idx, caches, stats, {}};
  auto first = check_materializable(graphs.graphs[0], ctx);
  EXPECT_FALSE(first.ok);
  EXPECT_FALSE(first.rejected_from_cache);
  EXPECT_EQ(caches.deadend_cache.size(), 1u);

  EngineCaches fresh(idx);
  fresh.deadend_cache.add(graphs.graphs[0].edges[0], value_signature(graphs.graphs[0].value_constraints[0]));
  EngineContext ctx2{idx, fresh, stats, {}};
  auto second = check_materializable(graphs.graphs[0], ctx2);
  EXPECT_FALSE(second.ok);
  EXPECT_TRUE(second.rejected_from_cache);
  EXPECT_EQ(fresh.table_cache.rows_read(), 0u);
  EXPECT_EQ(fresh.table_cache.loads(), 0u);

  // A different value on the same edge is not affected by the entry.
  auto ana = graphs.graphs[0];
  ana.value_constraints[0].value = "Ana";
  EXPECT_TRUE(check_materializable(ana, ctx2).ok);
}

TEST(CheckMaterializable, MissingValueFails) {
  Staff f;
  auto g = f.graph_with("billing_address");
  g.value_constraints[0].value = "Nobody";
  auto res = check_materializable(g, f.ctx);
  EXPECT_FALSE(res.ok);
  EXPECT_NE(res.reason.find("Nobody"), std::string::npos);
}

TEST(CellMatchesValue, ExactOrAllTokens) {
  EXPECT_TRUE(cell_matches_value("Raul CF", "raul  cf"));
  EXPECT_TRUE(cell_matches_value("Dr. Raul CF Jr", "Raul CF"));
  EXPECT_FALSE(cell_matches_value("Raul", "Raul CF"));
  EXPECT_FALSE(cell_matches_value("", "x"));
}
