#include "cli/artifacts.hpp"

#include "cli/config.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qfilt::cli {

namespace fs = std::filesystem;

void Table::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) {
    throw std::invalid_argument("row has " + std::to_string(row.size()) + " values for " +
                                std::to_string(columns.size()) + " columns");
  }
  rows.push_back(std::move(row));
}

std::string Table::to_csv() const {
  std::string out;
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += columns[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

int Table::column(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

Table parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw std::runtime_error("CSV has no header line");
  Table t;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) t.columns.push_back(col);
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double x = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw std::runtime_error("CSV line " + std::to_string(lineno) + ": not a number '" + cell + "'");
      }
      row.push_back(x);
    }
    if (row.size() != t.columns.size()) {
      throw std::runtime_error("CSV line " + std::to_string(lineno) + ": expected " +
                               std::to_string(t.columns.size()) + " values");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

ArtifactWriter::ArtifactWriter(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) {
    throw std::runtime_error("cannot create output directory '" + dir_ + "'");
  }
}

void ArtifactWriter::write_text(const std::string& name, const std::string& content) {
  const fs::path p = fs::path(dir_) / name;
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + p.string() + "'");
  entries_.push_back({name, sha256_hex(content), content.size()});
}

void ArtifactWriter::write_csv(const std::string& name, const Table& table) {
  write_text(name, table.to_csv());
}

void ArtifactWriter::write_json(const std::string& name, const Json& j) {
  write_text(name, j.dump(2) + "\n");
}

void ArtifactWriter::write_manifest(const std::string& scenario, std::uint64_t seed,
                                    const std::string& config, std::uint64_t aborted,
                                    const std::vector<std::string>& diagnostics) {
  Json m;
  m["schema_version"] = kSchemaVersion;
  m["scenario"] = scenario;
  m["seed"] = seed;
  m["config"] = config;
  Json arts = Json::array();
  for (const auto& e : entries_) arts.push_back({{"file", e.file}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  m["artifacts"] = arts;
  m["aborted_trajectories"] = aborted;
  m["diagnostics"] = diagnostics;
  const std::string text = m.dump(2) + "\n";
  const fs::path p = fs::path(dir_) / "manifest.json";
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << text;
}

}  // namespace qfilt::cli
