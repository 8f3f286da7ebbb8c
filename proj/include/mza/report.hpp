#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mza/config.hpp"

namespace mza {

// Comma-separated table with a header row. Numbers are written in their
// shortest round-trip form with '.' decimals, independent of locale.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& add_row(std::vector<std::string> cells);
  const std::vector<std::string>& header() const { return header_; }
  std::size_t row_count() const { return rows_.size(); }
  std::string to_string() const;

  static std::string cell(double v);
  static std::string cell(std::int64_t v);
  static std::string cell(int v) { return cell(static_cast<std::int64_t>(v)); }
  static std::string cell(const std::string& v) { return v; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Writes <dir>/<name>.csv and <dir>/<name>.json, each through a temp file
// and rename. The JSON carries the resolved config (loadable with
// load_config_text), its digest, the seeds and `summary`.
void write_report(const std::filesystem::path& dir, const std::string& name,
                  const CsvTable& table, const RunConfig& config,
                  const nlohmann::json& summary);

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

}  // namespace mza
