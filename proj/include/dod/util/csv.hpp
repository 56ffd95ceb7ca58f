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
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dod::csv {

class CsvError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Document {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC-4180 parser: comma delimiter, double-quote quoting, "" escapes, CRLF or
// LF record separators. The header row is mandatory and every record must
// have as many fields as the header.
inline Document parse(std::string_view input, std::string_view source = "<memory>") {
  Document doc;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_quoted = false;
  bool record_has_content = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto fail = [&](const std::string& what) {
    std::ostringstream os;
    os << source << ":" << line << ": " << what;
    throw CsvError(os.str());
  };

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    if (doc.header.empty() && doc.rows.empty() && !record_has_content && record.size() == 1) {
      record.clear();
      return;  // leading blank line
    }
    if (!record_has_content && record.size() == 1 && record[0].empty()) {
      record.clear();
      return;  // blank line
    }
    if (doc.header.empty()) {
      doc.header = std::move(record);
    } else {
      if (record.size() != doc.header.size()) {
        std::ostringstream os;
        os << source << ":" << record_line << ": expected " << doc.header.size() << " fields, got "
           << record.size();
        throw CsvError(os.str());
      }
      doc.rows.push_back(std::move(record));
    }
    record.clear();
    record_has_content = false;
  };

  std::size_t i = 0;
  if (input.size() >= 3 && static_cast<unsigned char>(input[0]) == 0xEF &&
      static_cast<unsigned char>(input[1]) == 0xBB && static_cast<unsigned char>(input[2]) == 0xBF) {
    i = 3;
  }
  for (; i < input.size(); ++i) {
    char c = input[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < input.size() && input[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_quoted) fail("unexpected quote inside unquoted field");
        in_quotes = true;
        field_quoted = true;
        record_has_content = true;
        break;
      case ',':
        record_has_content = true;
        end_field();
        break;
      case '\r':
        if (i + 1 < input.size() && input[i + 1] == '\n') break;
        end_record();
        ++line;
        record_line = line;
        break;
      case '\n':
        end_record();
        ++line;
        record_line = line;
        break;
      default:
        if (field_quoted) fail("characters after closing quote");
        record_has_content = true;
        field.push_back(c);
    }
  }
  if (in_quotes) fail("unterminated quoted field");
  if (record_has_content || !field.empty()) end_record();
  if (doc.header.empty()) fail("missing header row");
  return doc;
}

inline Document read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw CsvError("read error on " + path.string());
  return parse(ss.str(), path.string());
}

inline bool needs_quoting(std::string_view s) {
  if (s.empty()) return false;
  if (s.front() == ' ' || s.back() == ' ') return true;
  return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline void write_field(std::ostream& out, std::string_view s) {
  if (!needs_quoting(s)) {
    out << s;
    return;
  }
  out << '"';
  for (char c : s) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

inline void write_record(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    write_field(out, fields[i]);
  }
  out << "\r\n";
}

inline void write(std::ostream& out, const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows) {
  write_record(out, header);
  for (const auto& r : rows) write_record(out, r);
}

}  // namespace dod::csv
