#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcqe/harness.hpp"
#include "dcqe/stats.hpp"

namespace dcqe {

/// A log file that is missing, truncated or malformed.
class LogError : public Error {
 public:
  using Error::Error;
};

/// Rounds `t` to the 12 significant digits used in click logs.
double quantize_timestamp(double t);
void quantize_timestamps(std::vector<ClickRecord>& clicks);

/// clicks.csv: pairId,detectorId,timestamp_s,screenX_m. Empty fields for
/// dark counts and non-screen clicks.
void write_clicks_csv(std::ostream& os, std::span<const ClickRecord> clicks);
/// Throws LogError naming the offending line.
std::vector<ClickRecord> read_clicks_csv(std::istream& is);

/// One outcomes.csv row. `upper` is empty in screen runs, where the upper
/// photon has no port outcome.
struct OutcomeRow {
  std::uint64_t pair_id = 0;
  std::optional<SideOutcome> upper;
  SideOutcome lower = SideOutcome::E3;
  Basis resolved_lower_basis = Basis::Eraser;
  std::optional<HiddenVariable> hidden;
};

/// outcomes.csv: pairId,upper,lower,resolvedLowerBasis,hiddenPath,hiddenTag.
/// Screen runs write "Screen" in the upper column.
void write_outcomes_csv(std::ostream& os, std::span<const PairOutcome> raw,
                        bool screen);
std::vector<OutcomeRow> read_outcomes_csv(std::istream& is);

/// upper,lower,count for every non-empty cell.
void write_table_csv(std::ostream& os, const JointTable& table);

}  // namespace dcqe
