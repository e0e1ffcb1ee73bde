#pragma once

// Artifact files: CSV tables, JSON reports and a manifest with SHA-256
// content hashes. Output bytes depend only on the data written, never on
// timing or scheduling.

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace qfilt::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  explicit Table(std::vector<std::string> cols = {}) : columns(std::move(cols)) {}
  void add_row(std::vector<double> row);
  /// Header line of column names, then one comma-separated row per line.
  std::string to_csv() const;
  int column(const std::string& name) const;
};

/// Throws std::runtime_error on malformed input.
Table parse_csv(const std::string& text);
Table read_csv(const std::string& path);

std::string sha256_hex(const std::string& data);

class ArtifactWriter {
 public:
  /// Creates the directory if needed.
  explicit ArtifactWriter(std::string dir);

  const std::string& dir() const { return dir_; }
  void write_text(const std::string& name, const std::string& content);
  void write_csv(const std::string& name, const Table& table);
  void write_json(const std::string& name, const Json& j);
  /// Writes manifest.json listing every artifact written so far.
  void write_manifest(const std::string& scenario, std::uint64_t seed, const std::string& config,
                      std::uint64_t aborted, const std::vector<std::string>& diagnostics);

 private:
  struct Entry {
    std::string file;
    std::string sha256;
    std::uint64_t bytes;
  };
  std::string dir_;
  std::vector<Entry> entries_;
};

}  // namespace qfilt::cli
