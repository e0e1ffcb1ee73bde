#pragma once

// Column-wise comparison of two CSV artifacts.

#include "cli/artifacts.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qfilt::cli {

/// Raised when two artifacts do not share columns or row count.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "0.05" applies to every column; "a=0.01,b=0.1" names columns; "*=x"
/// sets the default for unnamed ones.
struct ToleranceSpec {
  std::optional<double> fallback;
  std::map<std::string, double> per_column;

  static ToleranceSpec parse(const std::string& text);
  std::optional<double> for_column(const std::string& name) const;
};

struct ColumnDeviation {
  std::string column;
  double max_abs = 0.0;
  double mean_abs = 0.0;
  std::optional<double> tolerance;
  bool pass = true;
};

struct CompareReport {
  std::vector<ColumnDeviation> columns;
  size_t rows = 0;
  bool pass = true;

  Json to_json() const;
};

/// Throws SchemaError when column names or row counts differ.
CompareReport compare_tables(const Table& a, const Table& b, const ToleranceSpec& tol);

}  // namespace qfilt::cli
