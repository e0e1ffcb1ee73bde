#include "cli/compare.hpp"

#include <cmath>
#include <sstream>

namespace qfilt::cli {

namespace {

double parse_tol(const std::string& s) {
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad tolerance '" + s + "'");
  }
  if (used != s.size() || !(v >= 0.0)) throw std::invalid_argument("bad tolerance '" + s + "'");
  return v;
}

}  // namespace

ToleranceSpec ToleranceSpec::parse(const std::string& text) {
  ToleranceSpec spec;
  if (text.empty()) return spec;
  if (text.find('=') == std::string::npos) {
    spec.fallback = parse_tol(text);
    return spec;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("bad tolerance entry '" + item + "'");
    const std::string name = item.substr(0, eq);
    const double v = parse_tol(item.substr(eq + 1));
    if (name == "*")
      spec.fallback = v;
    else
      spec.per_column[name] = v;
  }
  return spec;
}

std::optional<double> ToleranceSpec::for_column(const std::string& name) const {
  auto it = per_column.find(name);
  if (it != per_column.end()) return it->second;
  return fallback;
}

Json CompareReport::to_json() const {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["rows"] = rows;
  j["pass"] = pass;
  Json cols = Json::array();
  for (const auto& c : columns) {
    Json e;
    e["column"] = c.column;
    e["max_abs"] = c.max_abs;
    e["mean_abs"] = c.mean_abs;
    if (c.tolerance)
      e["tolerance"] = *c.tolerance;
    else
      e["tolerance"] = nullptr;
    e["pass"] = c.pass;
    cols.push_back(e);
  }
  j["columns"] = cols;
  return j;
}

CompareReport compare_tables(const Table& a, const Table& b, const ToleranceSpec& tol) {
  if (a.columns != b.columns) {
    std::string msg = "column sets differ: [";
    for (size_t i = 0; i < a.columns.size(); ++i) msg += (i ? "," : "") + a.columns[i];
    msg += "] vs [";
    for (size_t i = 0; i < b.columns.size(); ++i) msg += (i ? "," : "") + b.columns[i];
    throw SchemaError(msg + "]");
  }
  if (a.rows.size() != b.rows.size()) {
    throw SchemaError("row counts differ: " + std::to_string(a.rows.size()) + " vs " +
                      std::to_string(b.rows.size()));
  }
  for (const auto& [name, v] : tol.per_column) {
    (void)v;
    if (a.column(name) < 0) throw SchemaError("tolerance names unknown column '" + name + "'");
  }
  CompareReport rep;
  rep.rows = a.rows.size();
  for (size_t c = 0; c < a.columns.size(); ++c) {
    ColumnDeviation d;
    d.column = a.columns[c];
    double sum = 0.0;
    for (size_t r = 0; r < a.rows.size(); ++r) {
      const double dev = std::abs(a.rows[r][c] - b.rows[r][c]);
      // NaN in either file counts as an infinite deviation
      const double v = std::isnan(dev) ? INFINITY : dev;
      d.max_abs = std::max(d.max_abs, v);
      sum += v;
    }
    d.mean_abs = a.rows.empty() ? 0.0 : sum / static_cast<double>(a.rows.size());
    d.tolerance = tol.for_column(d.column);
    d.pass = !d.tolerance || d.max_abs <= *d.tolerance;
    rep.pass = rep.pass && d.pass;
    rep.columns.push_back(d);
  }
  return rep;
}

}  // namespace qfilt::cli
