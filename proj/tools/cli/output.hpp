#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace cli {

// Writes to a sibling temp file and renames it over `path`.
void write_atomic(const std::string& path, const std::string& content);

// Shortest text that reads back to the same double.
std::string num(double v);

class Csv {
 public:
  Csv(const std::string& config_hash, const std::vector<std::string>& header);
  Csv& row(const std::vector<std::string>& cells);
  const std::string& text() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

std::string json_text(const nlohmann::json& j);

}  // namespace cli
