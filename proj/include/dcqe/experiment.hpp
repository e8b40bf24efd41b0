#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "dcqe/types.hpp"

namespace dcqe {

/// Classical wiring from an upper-arm detector to the lower arm. The only
/// effect is switching D1 on, which turns the lower eraser into HybridD1.
struct FeedbackRule {
  enum class Effect : std::uint8_t { TurnOnD1 };
  SideOutcome trigger = SideOutcome::E4;
  Effect effect = Effect::TurnOnD1;
};

struct MeasurementConfig {
  Basis upper_basis = Basis::Eraser;
  Basis lower_basis = Basis::Eraser;
  std::optional<FeedbackRule> feedback;
  std::uint64_t pair_count = 1;
  std::uint64_t seed = 0;
  TemporalOrder temporal_order = TemporalOrder::UpperFirst;
  /// Upper arm goes to a position-resolving screen instead of detectors.
  bool screen = false;

  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

enum class ExperimentName : std::uint8_t { E1, E2, E3, E4, E5, E6 };

std::string_view to_string(ExperimentName e);
ExperimentName parse_experiment(std::string_view name);

/// E1 which-way/which-way, E2 eraser/eraser, E3 eraser/which-way,
/// E4 eraser/hybrid, E5 eraser/eraser with U4 switching D1 on, E6 screen on
/// the upper arm with the eraser below.
MeasurementConfig catalog(ExperimentName name);

/// Lower basis in force for a pair whose upper outcome is `upper`. Feedback
/// acts on registered clicks only, so a missed trigger leaves D1 off.
Basis resolve_lower_basis(const MeasurementConfig& config, SideOutcome upper,
                          bool upper_detected = true);

}  // namespace dcqe
