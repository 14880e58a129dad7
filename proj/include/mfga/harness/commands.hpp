#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mfga/harness/config.hpp"
#include "mfga/harness/report.hpp"

namespace mfga::harness {

enum ExitCode { kOk = 0, kChecksFailed = 1, kConfigError = 2, kSolverFailure = 3 };

const std::vector<std::string> &subcommands();

struct Invocation {
  std::string command;
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> jobs;
};

/// Output directory: --out, then [output] dir, then MFG_ANTIMONO_OUT, then "mfga-out".
std::string output_dir(const Invocation &inv, const RunConfig &cfg);

/// Runs one pipeline and fills the report. Library errors propagate.
RunReport run_pipeline(const std::string &command, const RunConfig &cfg);

/// Full dispatch with the exit-code contract; diagnostics go to err.
int dispatch(const Invocation &inv, std::ostream &out, std::ostream &err);

} // namespace mfga::harness
