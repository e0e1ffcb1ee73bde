#pragma once

// Scenario configuration: a YAML document with nested sections, every field
// optional, plus flag overrides. See README for the schema.

#include "qfilt/statespace.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qfilt::cli {

/// Configuration error carrying the source line (0 when unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& msg);
  int line() const { return line_; }

 private:
  int line_;
};

/// Operator given as a Pauli triple or as explicit row-major complex rows.
struct OperatorSpec {
  std::optional<Vec3> pauli;
  std::vector<std::vector<cplx>> rows;

  Operator build() const;
  bool operator==(const OperatorSpec& o) const;
};

const std::vector<std::string>& scenario_names();

struct ScenarioConfig {
  std::string scenario;

  // model
  std::optional<Vec3> h;
  std::optional<Vec3> k;
  std::optional<Vec3> l;
  std::optional<double> nu;
  std::optional<double> hbar;
  std::optional<OperatorSpec> H, L, C, E;

  // initial
  std::optional<std::vector<cplx>> psi;
  std::optional<Vec3> r0;

  // grid
  std::optional<double> T;
  std::optional<double> dt;

  // ensemble
  std::optional<std::uint64_t> N;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;

  // scheme
  std::optional<std::string> method;
  std::optional<std::string> measure;

  // scenario-specific parameters
  std::optional<double> w, t, lambda, x_min, x_max;
  std::optional<int> directions, points, n_max;
  std::optional<std::uint64_t> samples;
  std::optional<std::vector<double>> separations;
  std::optional<std::vector<cplx>> f, g;
  std::optional<OperatorSpec> F;

  // output
  std::optional<std::string> out_dir;

  /// Source lines of the keys that were read, for diagnostics.
  std::map<std::string, int> lines;

  bool operator==(const ScenarioConfig& o) const;

  // Resolved values with defaults.
  double hbar_or_default() const { return hbar.value_or(1.0); }
  Vec3 k_resolved() const;
  Vec3 l_or_default() const { return l.value_or(Vec3(0, 0, 1)); }
  double nu_or_default() const { return nu.value_or(100.0); }
  double T_or_default() const { return T.value_or(1.0); }
  double dt_or_default() const { return dt.value_or(1e-3); }
  std::uint64_t N_or_default() const { return N.value_or(1000); }
  std::uint64_t seed_or_default() const { return seed.value_or(7); }
  int workers_or_default() const { return workers.value_or(1); }
  std::string method_or_default() const { return method.value_or("euler"); }
  std::string measure_or_default() const { return measure.value_or("output"); }
  /// Initial state vector (default (1,1)/sqrt(2) in dimension 2).
  StateVector psi_resolved(int dim) const;
  /// Initial Bloch vector (default from psi, else (1,0,0)).
  Vec3 r0_resolved() const;

  int line_of(const std::string& key) const;
};

/// Parses YAML text. Throws ConfigError with a line number.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);
/// Canonical YAML rendering; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ScenarioConfig& c);

/// Checks every parameter against the preconditions of the target module.
void validate_config(const ScenarioConfig& c);

/// Parses "a,b,c" into a 3-vector (flag syntax).
Vec3 parse_vec3(const std::string& s);

/// Formats a double in shortest round-trip form.
std::string format_double(double x);

}  // namespace qfilt::cli
