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
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace dod {

enum class Strategy { four_c_summary, multi_row };

inline std::string to_string(Strategy s) { return s == Strategy::multi_row ? "multi-row" : "4c-summary"; }

class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

private:
  std::string field_;
};

inline Strategy strategy_from_string(const std::string& s) {
  if (s == "4c-summary") return Strategy::four_c_summary;
  if (s == "multi-row") return Strategy::multi_row;
  throw ConfigError("strategy", "expected '4c-summary' or 'multi-row', got '" + s + "'");
}

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path index;
  double containment_threshold = 0.8;
  double uniqueness_threshold = 0.9;
  int max_hops = 2;
  bool sample = false;
  std::size_t sample_k = 1000;
  std::size_t memory_budget_mb = 512;
  std::size_t join_graph_cap = 50;
  Strategy strategy = Strategy::four_c_summary;

  void validate() const {
    if (!(containment_threshold > 0.0 && containment_threshold <= 1.0)) {
      throw ConfigError("containment_threshold", "must be in (0, 1]");
    }
    if (!(uniqueness_threshold > 0.0 && uniqueness_threshold <= 1.0)) {
      throw ConfigError("uniqueness_threshold", "must be in (0, 1]");
    }
    if (max_hops < 1 || max_hops > 6) throw ConfigError("max_hops", "must be between 1 and 6");
    if (sample_k < 1) throw ConfigError("sample_k", "must be at least 1");
    if (memory_budget_mb < 1 || memory_budget_mb > (std::size_t(1) << 20)) {
      throw ConfigError("memory_budget_mb", "must be between 1 and 1048576");
    }
    if (join_graph_cap < 1 || join_graph_cap > 10000) throw ConfigError("join_graph_cap", "must be between 1 and 10000");
  }

  nlohmann::json to_json() const {
    return {{"corpus", corpus.string()},
            {"index", index.string()},
            {"containment_threshold", containment_threshold},
            {"uniqueness_threshold", uniqueness_threshold},
            {"max_hops", max_hops},
            {"sample", sample},
            {"sample_k", sample_k},
            {"memory_budget_mb", memory_budget_mb},
            {"join_graph_cap", join_graph_cap},
            {"strategy", to_string(strategy)}};
  }
};

}  // namespace dod
