#include "mza/report.hpp"

#include <fstream>
#include <stdexcept>

namespace mza {

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) {
    throw std::invalid_argument("CSV row has " + std::to_string(cells.size()) +
                                " cells, header has " +
                                std::to_string(header_.size()));
  }
  rows_.push_back(std::move(cells));
  return *this;
}

std::string CsvTable::to_string() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

std::string CsvTable::cell(double v) { return format_double(v); }
std::string CsvTable::cell(std::int64_t v) { return std::to_string(v); }

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_report(const std::filesystem::path& dir, const std::string& name,
                  const CsvTable& table, const RunConfig& config,
                  const nlohmann::json& summary) {
  nlohmann::json j;
  j["report"] = name;
  j["config"] = config.to_map();
  j["config_digest"] = config.digest_hex();
  j["seeds"] = config.random_seeds;
  j["summary"] = summary;
  write_file_atomic(dir / (name + ".csv"), table.to_string());
  write_file_atomic(dir / (name + ".json"), j.dump(2) + "\n");
}

}  // namespace mza
