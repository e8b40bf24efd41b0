#include "dcqe/experiment.hpp"

#include <stdexcept>
#include <string>

namespace dcqe {

void MeasurementConfig::validate() const {
  if (pair_count == 0) throw std::invalid_argument("pair_count must be >= 1");
  if (upper_basis == Basis::HybridD1)
    throw IllegalBasis("HybridD1 exists only on the lower arm");
  if (feedback) {
    if (feedback->trigger != SideOutcome::E3 &&
        feedback->trigger != SideOutcome::E4)
      throw std::invalid_argument("feedback trigger must be an eraser port");
    if (upper_basis != Basis::Eraser && !screen)
      throw std::invalid_argument("feedback requires the upper eraser");
    if (lower_basis != Basis::Eraser)
      throw std::invalid_argument(
          "feedback toggles D1 and requires the lower eraser as base setting");
    if (temporal_order != TemporalOrder::UpperFirst)
      throw std::invalid_argument("feedback requires upper-first ordering");
    if (screen) throw std::invalid_argument("feedback has no screen variant");
  }
}

std::string_view to_string(ExperimentName e) {
  switch (e) {
    case ExperimentName::E1: return "E1";
    case ExperimentName::E2: return "E2";
    case ExperimentName::E3: return "E3";
    case ExperimentName::E4: return "E4";
    case ExperimentName::E5: return "E5";
    case ExperimentName::E6: return "E6";
  }
  return "?";
}

ExperimentName parse_experiment(std::string_view name) {
  for (auto e : {ExperimentName::E1, ExperimentName::E2, ExperimentName::E3,
                 ExperimentName::E4, ExperimentName::E5, ExperimentName::E6})
    if (to_string(e) == name) return e;
  throw std::invalid_argument("unknown experiment '" + std::string(name) + "'");
}

MeasurementConfig catalog(ExperimentName name) {
  MeasurementConfig c;
  switch (name) {
    case ExperimentName::E1:
      c.upper_basis = Basis::WhichWay;
      c.lower_basis = Basis::WhichWay;
      break;
    case ExperimentName::E2:
      c.upper_basis = Basis::Eraser;
      c.lower_basis = Basis::Eraser;
      break;
    case ExperimentName::E3:
      c.upper_basis = Basis::Eraser;
      c.lower_basis = Basis::WhichWay;
      break;
    case ExperimentName::E4:
      c.upper_basis = Basis::Eraser;
      c.lower_basis = Basis::HybridD1;
      break;
    case ExperimentName::E5:
      c.upper_basis = Basis::Eraser;
      c.lower_basis = Basis::Eraser;
      c.feedback = FeedbackRule{};
      break;
    case ExperimentName::E6:
      // The screen does not measure a path basis; WhichWay stands for the
      // upper arm's natural slit labelling.
      c.upper_basis = Basis::WhichWay;
      c.lower_basis = Basis::Eraser;
      c.screen = true;
      break;
  }
  return c;
}

Basis resolve_lower_basis(const MeasurementConfig& config, SideOutcome upper,
                          bool upper_detected) {
  if (config.feedback && upper_detected && upper == config.feedback->trigger)
    return Basis::HybridD1;
  return config.lower_basis;
}

}  // namespace dcqe
