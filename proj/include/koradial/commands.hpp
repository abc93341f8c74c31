#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "koradial/config.hpp"

namespace koradial {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitHypothesis = 2,
  kExitIndeterminate = 3,
  kExitNoConvergence = 4,
  kExitBlowUp = 5,
  kExitBounds = 6,
};

struct CommandResult {
  int exit_code = kExitOk;
  std::string summary;  // human-readable, one item per line
};

/// Writes `content` to a temporary file beside `path` and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string solution_csv(const SolutionPair& sol);

/// Reads a `r,u1,u2` CSV; the radii must match `grid` node by node.
SolutionPair read_solution_csv(const std::filesystem::path& path, const GridPtr& grid);

CommandResult run_check(const RunConfig& cfg, const std::filesystem::path& out);
CommandResult run_solve(const RunConfig& cfg, const std::filesystem::path& out);
CommandResult run_classify(const RunConfig& cfg, const std::filesystem::path& out);
CommandResult run_bounds(const RunConfig& cfg, const std::filesystem::path& out,
                         const std::optional<std::filesystem::path>& solution = std::nullopt);
CommandResult run_report(const RunConfig& cfg, const std::filesystem::path& out);

}  // namespace koradial
