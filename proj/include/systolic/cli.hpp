#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace systolic::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigError = 2,
  kTopologyError = 3,
  kSimulationError = 4,
  kIoError = 5,
};

// Default output root when --out is not given.
inline constexpr const char* kOutEnvVar = "SYSTOLIC_SIM_OUT";

/// Entry point of the `systolic-sim` binary. `args` excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Recomputes summary.csv and network.csv of a run directory from its
/// manifest and trace files.
void regenerate_reports(const std::filesystem::path& run_dir);

}  // namespace systolic::cli
