#pragma once

#include "mintime/error.hpp"
#include "mintime_cli/io.hpp"
#include "mintime_cli/scenario.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace mintime::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitParse = 2,
  kExitValidation = 3,
  kExitNonConvergence = 4,
  kExitMissingInputs = 5,
};

int exit_code(ErrorCode code);

struct RunContext {
  std::filesystem::path scenario;
  std::filesystem::path out;
  std::filesystem::path trajectory;  // verify only
  Overrides overrides;
  bool quiet = false;
  std::ostream* log = nullptr;
};

/// Each stage throws mintime::Error; run_cli maps codes to exit statuses.
void run_solve(const RunContext& ctx);
void run_analyze(const RunContext& ctx);
void run_verify(const RunContext& ctx);
/// Validates manifest.json in ctx.out against the files on disk and prints the summary.
void run_report(const RunContext& ctx);

/// The defaults table as echoed into manifests.
Json defaults_json();

/// Parses argv (subcommand plus flags) and runs it; returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mintime::cli
