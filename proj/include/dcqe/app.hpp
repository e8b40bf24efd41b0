#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dcqe/config.hpp"
#include "dcqe/harness.hpp"
#include "dcqe/stats.hpp"

namespace dcqe {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitNoHistory = 3,
  kExitLogs = 4,
};

/// Everything the analysis stage derives from a click log.
struct AnalysisResult {
  std::uint64_t clicks = 0;
  std::uint64_t coincidences = 0;
  std::uint64_t unmatched_upper = 0;
  std::uint64_t unmatched_lower = 0;
  JointTable table;         // every coincidence
  JointTable tested_table;  // after the optional D1Click exclusion
  std::optional<double> correlation;
  std::vector<TestReport> reports;
  /// Screen runs: fringe visibility of the hits coincident with each lower
  /// outcome ("E3", "E4", ...) and of all of them ("all").
  std::map<std::string, std::optional<double>> visibility;
  std::map<std::string, std::uint64_t> screen_hits;
  /// Tests that could not run, with the reason.
  std::vector<std::string> notes;
};

/// Matches coincidences and runs the configured tests. Used both right
/// after a run and when re-reading its logs, so the two agree exactly.
AnalysisResult analyze_clicks(const RunConfig& cfg,
                              std::vector<ClickRecord> clicks);

/// Entry point of the `dcqe` tool. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace dcqe
