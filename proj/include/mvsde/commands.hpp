#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvsde/config.hpp"
#include "mvsde/operators.hpp"

namespace mvsde {

enum ExitStatus : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitUsage = 2,
  kExitNumeric = 3,
};

struct RunOptions {
  std::optional<std::filesystem::path> config_path;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::vector<std::string> overrides;  // "key.path=value"
};

struct RunResult {
  int exit_code = kExitOk;
  std::string out;  // stdout text
  std::string err;  // stderr text
  std::vector<std::filesystem::path> files;
};

/// Subcommands: simulate, picard, ito-check, stability, operators-test,
/// scenarios, validate. Never throws.
RunResult run_command(const std::string& subcommand, const RunOptions& options);

/// Raw config after --config, --seed, --threads and --set are applied.
Json assemble_config(const RunOptions& options);

/// Parameterised instances of every operator kind in dimension d.
std::vector<OperatorCatalogEntry> sample_operator_catalog(std::size_t d);

std::string trajectory_csv(const TrajectoryRecord& traj);

}  // namespace mvsde
