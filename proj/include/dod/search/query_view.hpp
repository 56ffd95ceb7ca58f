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
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "dod/util/text.hpp"

namespace dod {

// A query view: the attribute constraints plus optional example tuples. Each
// tuple maps a subset of the attributes to a value.
struct QueryView {
  std::vector<std::string> attributes;
  std::vector<std::map<std::string, std::string>> tuples;

  std::size_t attribute_position(std::string_view name) const {
    auto n = text::normalize_attribute(name);
    for (std::size_t i = 0; i < attributes.size(); ++i) {
      if (text::normalize_attribute(attributes[i]) == n) return i;
    }
    return attributes.size();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["attributes"] = attributes;
    j["tuples"] = nlohmann::json::array();
    for (const auto& t : tuples) j["tuples"].push_back(t);
    return j;
  }
};

class QueryViewError : public std::runtime_error {
public:
  QueryViewError(int line, std::string field, const std::string& message)
      : std::runtime_error(format(line, field, message)), line_(line), field_(std::move(field)) {}

  int line() const { return line_; }
  const std::string& field() const { return field_; }

private:
  static std::string format(int line, const std::string& field, const std::string& message) {
    std::ostringstream os;
    if (line > 0) os << "line " << line << ": ";
    if (!field.empty()) os << field << ": ";
    os << message;
    return os.str();
  }

  int line_;
  std::string field_;
};

namespace query_view_detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

inline std::string scalar(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) throw QueryViewError(line_of(n), field, "expected a string");
  return n.as<std::string>();
}

}  // namespace query_view_detail

// Parses the YAML/JSON query view document:
//   attributes: [employee, address]
//   tuples:
//     - {employee: "Raul CF"}
inline QueryView parse_query_view(const std::string& document) {
  using namespace query_view_detail;
  YAML::Node root;
  try {
    root = YAML::Load(document);
  } catch (const YAML::Exception& e) {
    throw QueryViewError(e.mark.line >= 0 ? e.mark.line + 1 : 0, "", "syntax error: " + e.msg);
  }
  if (!root.IsMap()) throw QueryViewError(line_of(root), "", "document must be a mapping");

  QueryView qv;
  for (auto it = root.begin(); it != root.end(); ++it) {
    auto key = scalar(it->first, "");
    if (key != "attributes" && key != "tuples") {
      throw QueryViewError(line_of(it->first), key, "unknown field");
    }
  }

  auto attrs = root["attributes"];
  if (!attrs) throw QueryViewError(line_of(root), "attributes", "missing required field");
  if (!attrs.IsSequence()) throw QueryViewError(line_of(attrs), "attributes", "expected a list");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    auto field = "attributes[" + std::to_string(i) + "]";
    auto a = scalar(attrs[i], field);
    auto norm = text::normalize_attribute(a);
    if (norm.empty()) throw QueryViewError(line_of(attrs[i]), field, "attribute must not be empty");
    if (!seen.insert(norm).second) throw QueryViewError(line_of(attrs[i]), field, "duplicate attribute");
    qv.attributes.push_back(std::string(text::trim(a)));
  }
  if (qv.attributes.empty()) throw QueryViewError(line_of(attrs), "attributes", "at least one attribute required");

  if (auto tuples = root["tuples"]) {
    if (tuples.IsNull()) return qv;
    if (!tuples.IsSequence()) throw QueryViewError(line_of(tuples), "tuples", "expected a list");
    for (std::size_t i = 0; i < tuples.size(); ++i) {
      auto field = "tuples[" + std::to_string(i) + "]";
      const auto& t = tuples[i];
      if (!t.IsMap()) throw QueryViewError(line_of(t), field, "expected a mapping of attribute to value");
      std::map<std::string, std::string> tuple;
      for (auto it = t.begin(); it != t.end(); ++it) {
        auto key = scalar(it->first, field);
        auto kfield = field + "." + key;
        auto pos = qv.attribute_position(key);
        if (pos == qv.attributes.size()) {
          throw QueryViewError(line_of(it->first), kfield, "attribute not declared in attributes");
        }
        auto value = scalar(it->second, kfield);
        if (!tuple.emplace(qv.attributes[pos], value).second) {
          throw QueryViewError(line_of(it->first), kfield, "attribute repeated in tuple");
        }
      }
      qv.tuples.push_back(std::move(tuple));
    }
  }
  return qv;
}

inline QueryView load_query_view(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw QueryViewError(0, "", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_query_view(ss.str());
}

}  // namespace dod
