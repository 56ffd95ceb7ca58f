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

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dod/service/http.hpp"
#include "dod/service/pipeline.hpp"

namespace dod {

namespace cli_detail {

inline void add_run_flags(CLI::App* cmd, RunConfig& cfg, std::string& strategy) {
  cmd->add_option("--max-hops", cfg.max_hops, "Maximum join path length")->capture_default_str();
  cmd->add_flag("--sample", cfg.sample, "Materialize on consistent samples");
  cmd->add_option("--sample-k", cfg.sample_k, "Distinct join keys kept per sample")->capture_default_str();
  cmd->add_option("--memory-budget-mb", cfg.memory_budget_mb, "Per-join memory budget")->capture_default_str();
  cmd->add_option("--join-graph-cap", cfg.join_graph_cap, "Join graphs kept per group")->capture_default_str();
  cmd->add_option("--strategy", strategy, "Presentation strategy: 4c-summary or multi-row")->capture_default_str();
}

inline void print_timings(std::ostream& out, const PipelineTimings& t) {
  out << std::fixed << std::setprecision(4);
  out << "timings (s): does_join=" << t.does_join << " does_materialize=" << t.does_materialize
      << " materialize=" << t.materialize << " 4c=" << t.fourc << " other=" << t.other << " total=" << t.total << "\n";
  out.unsetf(std::ios::floatfield);
}

inline void print_rows(std::ostream& out, const std::vector<std::string>& schema, const std::vector<Row>& rows,
                       std::size_t limit = 10) {
  out << "    | " << text::join(schema, " | ") << "\n";
  for (std::size_t i = 0; i < rows.size() && i < limit; ++i) out << "    | " << text::join(rows[i], " | ") << "\n";
  if (rows.size() > limit) out << "    ... " << rows.size() - limit << " more rows\n";
}

inline void print_prompt(std::ostream& out, const ContradictionPrompt& p) {
  out << "contradiction " << p.prompt_id << " on key '" << p.key << "', attribute '" << p.contradiction_attribute
      << "', values [" << text::join(p.contradiction_values, ", ") << "]\n";
  out << "  [a] " << p.a.view_id << "\n";
  print_rows(out, p.schema, p.a.rows);
  out << "  [b] " << p.b.view_id << "\n";
  print_rows(out, p.schema, p.b.rows);
}

inline void write_outputs(const std::filesystem::path& dir, const PipelineResult& r, const nlohmann::json& report) {
  std::filesystem::create_directories(dir);
  for (const auto& v : r.views) {
    std::ofstream csv_out(dir / (v.view_id + ".csv"), std::ios::binary);
    export_view_csv(csv_out, v);
    std::ofstream prov(dir / (v.view_id + ".provenance.json"));
    prov << provenance_json(v).dump(2) << "\n";
  }
  if (r.summary) {
    for (const auto& id : r.summary->pending_views) {
      if (!summary_detail::is_union(id)) continue;
      const auto& v = r.store->at(id);
      std::ofstream csv_out(dir / (id + ".csv"), std::ios::binary);
      csv::write(csv_out, v.schema, v.rows);
    }
    std::ofstream audit(dir / "audit.json");
    audit << audit_json(*r.summary).dump(2) << "\n";
  }
  for (const auto& mv : r.multi_rows) {
    std::vector<std::string> header = mv.schema;
    header.push_back("sources");
    header.push_back("multi");
    std::vector<Row> rows;
    for (const auto& e : mv.rows) {
      Row row = e.row;
      row.push_back(text::join(e.sources, ";"));
      row.push_back(e.multi ? "1" : "0");
      rows.push_back(std::move(row));
    }
    auto name = mv.signature;
    std::replace(name.begin(), name.end(), ',', '_');
    std::ofstream csv_out(dir / ("multirow_" + name + ".csv"), std::ios::binary);
    csv::write(csv_out, header, rows);
  }
  std::ofstream rep(dir / "report.json");
  rep << report.dump(2) << "\n";
}

inline nlohmann::json report_json(const PipelineResult& r, const RunConfig& cfg) {
  nlohmann::json j;
  j["config"] = cfg.to_json();
  j["query"] = r.query.to_json();
  j["counts"] = r.counts_json();
  j["timings"] = r.timings.to_json();
  j["diagnostics"] = r.diagnostics;
  j["views"] = nlohmann::json::array();
  for (const auto& v : r.views) j["views"].push_back(provenance_json(v));
  if (r.fourc) j["classification"] = r.fourc->to_json();
  if (r.summary) j["summary"] = r.summary->to_json();
  if (!r.multi_rows.empty()) {
    j["multi_row"] = nlohmann::json::array();
    for (const auto& mv : r.multi_rows) j["multi_row"].push_back(mv.to_json());
  }
  return j;
}

}  // namespace cli_detail

// Entry point of the `dod` tool. Exit codes: 0 success, 1 runtime failure,
// 2 usage or input errors.
inline int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  CLI::App app{"Dataset discovery over a directory of CSV tables"};
  app.require_subcommand(1);

  std::string corpus;
  std::string index_dir;
  std::string query_file;
  std::string out_dir;
  std::string strategy = "4c-summary";
  std::string host = "127.0.0.1";
  std::string data_dir;
  std::string full_view;
  int port = 8080;
  unsigned threads = 0;
  bool interactive = false;
  bool dry_run = false;
  bool as_json = false;
  RunConfig cfg;

  auto* index_cmd = app.add_subcommand("index", "Profile a corpus and write the discovery index");
  index_cmd->add_option("corpus", corpus, "Directory of CSV files")->required();
  index_cmd->add_option("--out,-o", index_dir, "Index output directory")->required();
  index_cmd->add_option("--containment", cfg.containment_threshold, "Containment threshold")->capture_default_str();
  index_cmd->add_option("--uniqueness", cfg.uniqueness_threshold, "Uniqueness threshold")->capture_default_str();
  index_cmd->add_option("--threads", threads, "Profiling threads (0: all cores)");

  auto* query_cmd = app.add_subcommand("query", "Run a query view against an index");
  query_cmd->add_option("--index,-i", index_dir, "Index directory")->required();
  query_cmd->add_option("--query,-q", query_file, "Query view file (YAML or JSON)")->required();
  query_cmd->add_option("--out,-o", out_dir, "Write views, provenance and report here");
  query_cmd->add_flag("--interactive", interactive, "Resolve contradictions on the terminal");
  query_cmd->add_flag("--dry-run", dry_run, "Stop after the materializability checks");
  query_cmd->add_flag("--json", as_json, "Print the report as JSON");
  add_run_flags(query_cmd, cfg, strategy);

  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
  serve_cmd->add_option("--index,-i", index_dir, "Index directory")->required();
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port,-p", port)->capture_default_str();
  serve_cmd->add_option("--data-dir", data_dir, "Session storage (default: $DOD_DATA_DIR)");
  add_run_flags(serve_cmd, cfg, strategy);

  auto* mat_cmd = app.add_subcommand("materialize", "Materialize one candidate view without sampling");
  mat_cmd->add_option("--index,-i", index_dir, "Index directory")->required();
  mat_cmd->add_option("--query,-q", query_file, "Query view file")->required();
  mat_cmd->add_option("--full", full_view, "View id, e.g. v3")->required();
  mat_cmd->add_option("--out,-o", out_dir, "Output CSV file (default: stdout)");
  add_run_flags(mat_cmd, cfg, strategy);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  try {
    cfg.strategy = strategy_from_string(strategy);
    cfg.validate();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*index_cmd) {
      if (!std::filesystem::is_directory(corpus)) {
        err << "error: corpus directory not found: " << corpus << "\n"
            << "usage: dod index <corpus-dir> --out <index-dir>\n";
        return 2;
      }
      IndexConfig icfg;
      icfg.containment_threshold = cfg.containment_threshold;
      icfg.uniqueness_threshold = cfg.uniqueness_threshold;
      icfg.threads = threads;
      auto idx = DiscoveryIndex::build(corpus, icfg, &err);
      idx.save(index_dir);
      out << "tables: " << idx.tables().size() << "\n"
          << "columns: " << idx.column_count() << "\n"
          << "inclusion dependencies: " << idx.ind_edges().size() << "\n"
          << "join edges: " << idx.join_edges().size() << "\n"
          << "index written to " << index_dir << "\n";
      return 0;
    }

    if (!std::filesystem::is_directory(index_dir)) {
      err << "error: index directory not found: " << index_dir << "\n"
          << "build one with: dod index <corpus-dir> --out <index-dir>\n";
      return 2;
    }
    auto index = std::make_shared<const DiscoveryIndex>(DiscoveryIndex::load(index_dir));

    if (*serve_cmd) {
      SessionManager sessions(index, cfg, data_dir.empty() ? default_data_dir() : std::filesystem::path(data_dir));
      HttpServer server(sessions);
      out << "serving /api/v1 on http://" << host << ":" << port << "\n" << std::flush;
      return server.listen(host, port) ? 0 : 1;
    }

    QueryView qv;
    try {
      qv = load_query_view(query_file);
    } catch (const QueryViewError& e) {
      err << "error: " << query_file << ": " << e.what() << "\n";
      return 2;
    }

    EngineCaches caches(*index);
    JoinStats stats;

    if (*mat_cmd) {
      auto r = run_pipeline(*index, qv, cfg, caches, stats);
      for (std::size_t i = 0; i < r.views.size(); ++i) {
        if (r.views[i].view_id != full_view) continue;
        EngineContext ctx{*index, caches, stats, engine_config(cfg)};
        auto v = materialize_join_graph(r.materializable_graphs[i], MaterializeMode::full(), ctx, full_view);
        if (out_dir.empty()) {
          export_view_csv(out, v);
        } else {
          std::ofstream f(out_dir, std::ios::binary);
          export_view_csv(f, v);
          std::ofstream prov(out_dir + ".provenance.json");
          prov << provenance_json(v).dump(2) << "\n";
          out << "wrote " << v.rows.size() << " rows to " << out_dir << "\n";
        }
        return 0;
      }
      err << "error: no candidate view '" << full_view << "' (" << r.views.size() << " views)\n";
      return 2;
    }

    PipelineOptions opt;
    opt.dry_run = dry_run;
    auto r = run_pipeline(*index, qv, cfg, caches, stats, opt);

    if (dry_run) {
      out << "CG " << r.groups.size() << "\n"
          << "P " << r.table_pairs << "\n"
          << "JG " << r.join_graphs << (r.join_graphs_truncated ? " (truncated)" : "") << "\n"
          << "MG " << r.materializable << "\n";
      print_timings(out, r.timings);
      return 0;
    }

    if (interactive && r.summary) {
      while (r.summary->next_prompt) {
        print_prompt(out, *r.summary->next_prompt);
        out << "choose [a/b/skip]: " << std::flush;
        std::string answer;
        if (!std::getline(in, answer)) break;
        answer = std::string(text::trim(answer));
        const auto& p = *r.summary->next_prompt;
        std::string chosen = answer == "a" ? p.a.view_id : answer == "b" ? p.b.view_id : answer;
        try {
          apply_choice(*r.summary, p.prompt_id, chosen);
        } catch (const ChoiceError& e) {
          out << e.what() << "\n";
        }
      }
    }

    auto report = report_json(r, cfg);
    if (!out_dir.empty()) write_outputs(out_dir, r, report);
    if (as_json) {
      out << report.dump(2) << "\n";
      return 0;
    }

    out << "candidate views: " << r.views.size() << "\n";
    if (r.views.empty()) out << "no candidate views found for this query view\n";
    for (const auto& v : r.views) {
      out << "  " << v.view_id << " rows=" << v.rows.size() << " tables=" << text::join(v.provenance.graph.nodes, ",")
          << " joins=" << v.provenance.graph.signature() << (v.sampled ? " sampled" : "") << "\n";
    }
    for (const auto& d : r.diagnostics) out << "  discarded: " << d << "\n";
    if (r.fourc) {
      for (const auto& s : r.fourc->schemas) {
        out << "schema [" << s.signature << "]: compatible groups=" << s.c1.size() << " contained=" << s.c2.size()
            << " complementary=" << s.c3.size() << " contradictory=" << s.c4.size() << "\n";
      }
    }
    if (r.summary) {
      auto rep = r.summary->report();
      out << "4c-summary: " << rep.input_views << " views -> " << rep.final_views << " (prompts shown "
          << rep.prompts_shown << ", choices made " << rep.choices_made << ")\n";
      for (const auto& id : r.summary->pending_views) {
        const auto& v = r.store->at(id);
        out << "  " << id << " rows=" << v.rows.size() << "\n";
      }
      if (r.summary->next_prompt) {
        out << "pending contradiction:\n";
        print_prompt(out, *r.summary->next_prompt);
      }
    }
    for (const auto& mv : r.multi_rows) {
      out << "multi-row [" << mv.signature << "]: rows=" << mv.rows.size() << " multi-keys=" << mv.multi_keys.size()
          << (mv.key ? " key=" + *mv.key : std::string(" no key")) << "\n";
    }
    print_timings(out, r.timings);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace dod
