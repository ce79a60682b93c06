#include "output.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace cli {

namespace fs = std::filesystem;

void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Csv::Csv(const std::string& config_hash, const std::vector<std::string>& header) : columns_(header.size()) {
  text_ = "# config_hash=" + config_hash + "\n";
  row(header);
}

Csv& Csv::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("csv row has the wrong number of cells");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    const auto& c = cells[i];
    if (c.find_first_of(",\"\n") == std::string::npos) {
      text_ += c;
      continue;
    }
    text_ += '"';
    for (char ch : c) {
      if (ch == '"') text_ += '"';
      text_ += ch == '\n' ? ' ' : ch;
    }
    text_ += '"';
  }
  text_ += '\n';
  return *this;
}

std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace cli
