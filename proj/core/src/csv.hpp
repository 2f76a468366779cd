#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

#include <boost/tokenizer.hpp>

#include "surgcurate/error.hpp"

namespace surgcurate::detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::vector<std::string> out;
  try {
    Tokenizer tok(line);
    for (const auto& field : tok) out.push_back(field);
  } catch (const boost::escaped_list_error& e) {
    throw Error(ErrorCode::kParse, std::string("malformed CSV line: ") + e.what());
  }
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\\\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Header-addressed CSV rows. Blank lines are skipped; '\r' is stripped.
class CsvReader {
 public:
  CsvReader(std::istream& in, const std::vector<std::string>& required) : in_(in) {
    std::string line;
    if (!next_line(line)) throw Error(ErrorCode::kParse, "CSV input is empty");
    const auto header = split_csv_line(line);
    for (std::size_t i = 0; i < header.size(); ++i) columns_[header[i]] = i;
    for (const auto& name : required) {
      if (!columns_.contains(name)) throw Error(ErrorCode::kParse, "CSV missing column '" + name + "'");
    }
    width_ = header.size();
  }

  bool next(std::vector<std::string>& fields) {
    std::string line;
    if (!next_line(line)) return false;
    fields = split_csv_line(line);
    if (fields.size() != width_) {
      throw Error(ErrorCode::kParse, "CSV line " + std::to_string(line_no_) + " has " +
                                         std::to_string(fields.size()) + " fields, expected " +
                                         std::to_string(width_));
    }
    return true;
  }

  bool has(const std::string& name) const { return columns_.contains(name); }
  std::size_t index(const std::string& name) const { return columns_.at(name); }
  std::size_t line_no() const { return line_no_; }

 private:
  bool next_line(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  }

  std::istream& in_;
  std::map<std::string, std::size_t> columns_;
  std::size_t width_ = 0;
  std::size_t line_no_ = 0;
};

}  // namespace surgcurate::detail
