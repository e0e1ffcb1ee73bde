#pragma once

// Scenario runner: validates a config, dispatches to the library and writes
// CSV/JSON artifacts plus manifest.json into the output directory.

#include "cli/artifacts.hpp"
#include "cli/config.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace qfilt::cli {

inline constexpr const char* kOutDirEnv = "QFILT_OUT_DIR";

struct RunResult {
  /// 0 on success, 1 when a built-in check of the scenario failed.
  int exit_code = 0;
  std::string out_dir;
  std::uint64_t aborted = 0;
  /// The main JSON report of the scenario.
  Json report;
};

/// Flag, then config, then $QFILT_OUT_DIR, then "qfilt_out".
std::string resolve_out_dir(const ScenarioConfig& c, const std::optional<std::string>& flag);

/// Throws ConfigError for invalid configs before any computation starts.
RunResult run_scenario(const ScenarioConfig& c, const std::string& out_dir);

}  // namespace qfilt::cli
