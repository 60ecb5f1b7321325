#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "atp/table.hpp"

namespace atp {

struct DatasetDiagnostics {
  struct BadLine {
    int line_number;
    std::string message;
  };
  std::vector<BadLine> malformed;
};

// One record per line: {"id": ..., "table": [[...], ...], "question": ...,
// "answer": ...}; the first table row is the header.
inline TqaExample parse_record(const std::string& line) {
  const nlohmann::json j = nlohmann::json::parse(line);
  TqaExample ex;
  ex.table.id = j.at("id").get<std::string>();
  const auto& rows = j.at("table");
  if (!rows.is_array() || rows.empty())
    throw std::invalid_argument("table must be a nonempty array of rows");
  ex.table.header = rows.at(0).get<std::vector<std::string>>();
  for (std::size_t i = 1; i < rows.size(); ++i)
    ex.table.rows.push_back(rows.at(i).get<std::vector<std::string>>());
  ex.question = j.at("question").get<std::string>();
  ex.answer = j.at("answer").get<std::string>();
  ex.validate();
  return ex;
}

inline nlohmann::json record_to_json(const TqaExample& ex) {
  nlohmann::json rows = nlohmann::json::array();
  rows.push_back(ex.table.header);
  for (const auto& r : ex.table.rows) rows.push_back(r);
  return nlohmann::json{{"id", ex.table.id},
                        {"table", std::move(rows)},
                        {"question", ex.question},
                        {"answer", ex.answer}};
}

inline void save_dataset(const std::vector<TqaExample>& examples, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
  for (const auto& ex : examples) out << record_to_json(ex).dump() << '\n';
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

// Loads the line-delimited dataset, flags order-sensitive questions, and
// reports malformed lines with their numbers. Zero valid records is an error.
inline std::vector<TqaExample> load_dataset(
    const std::string& path,
    const std::vector<std::string>& keywords = default_order_keywords(),
    DatasetDiagnostics* diag = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  std::vector<TqaExample> examples;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      TqaExample ex = parse_record(line);
      ex.order_sensitive = is_order_sensitive(ex.question, keywords);
      examples.push_back(std::move(ex));
    } catch (const std::exception& e) {
      if (diag) diag->malformed.push_back({line_number, e.what()});
    }
  }
  if (examples.empty())
    throw std::runtime_error("load_dataset: zero valid records in " + path);
  return examples;
}

}  // namespace atp
