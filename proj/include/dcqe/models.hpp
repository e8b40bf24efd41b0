#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "dcqe/experiment.hpp"
#include "dcqe/rng.hpp"
#include "dcqe/types.hpp"

namespace dcqe {

/// Hidden state carried by a pair in the realist models: the path both
/// photons took and the shared port choice at the eraser splitters.
struct HiddenVariable {
  int path = 1;          // 1 or 2
  int splitter_tag = 3;  // 3 or 4

  bool operator==(const HiddenVariable&) const = default;
};

/// Outcome a realist particle with hidden state `h` produces in `basis`:
/// which-way reports the path, the eraser reports the shared tag, and the
/// hybrid absorbs path 1 at D1.
SideOutcome realist_outcome(Basis basis, const HiddenVariable& h);

enum class RetroPolicy : std::uint8_t { Strict, NovikovUniform };

struct ModelKind {
  enum class Kind : std::uint8_t {
    QM,
    LocalRealistBall,
    RetrocausalConsistent,
    Superdeterministic
  };
  Kind kind = Kind::QM;
  RetroPolicy retro_policy = RetroPolicy::Strict;

  static ModelKind qm() { return {Kind::QM}; }
  static ModelKind ball() { return {Kind::LocalRealistBall}; }
  static ModelKind retro(RetroPolicy p = RetroPolicy::Strict) {
    return {Kind::RetrocausalConsistent, p};
  }
  static ModelKind superdeterministic() { return {Kind::Superdeterministic}; }

  bool operator==(const ModelKind&) const = default;
};

std::string_view to_string(ModelKind::Kind k);
std::string_view to_string(RetroPolicy p);
/// "QM", "LocalRealistBall", "RetrocausalConsistent/Strict", ...
std::string describe(const ModelKind& m);
ModelKind::Kind parse_model_kind(std::string_view name);
RetroPolicy parse_retro_policy(std::string_view name);

struct PairOutcome {
  SideOutcome upper = SideOutcome::E3;
  SideOutcome lower = SideOutcome::E3;
  std::optional<HiddenVariable> hidden;
  Basis resolved_lower_basis = Basis::Eraser;
  /// Set when the model itself decided whether the upper click registered,
  /// which happens whenever a feedback wire listens to that click.
  std::optional<bool> upper_detected;
};

/// One pair under `model`. `trigger_efficiency` is the probability that an
/// upper click arriving at the feedback trigger registers and fires the wire.
/// Throws NoConsistentHistory if the retrocausal filter leaves nothing.
PairOutcome simulate_pair(const ModelKind& model,
                          const MeasurementConfig& config, Rng& rng,
                          double trigger_efficiency = 1.0);

/// A self-consistent history of the retrocausal model.
struct History {
  bool d1_on = false;
  bool upper_detected = true;
  SideOutcome upper = SideOutcome::E3;
  SideOutcome lower = SideOutcome::E3;
  std::optional<HiddenVariable> hidden;  // empty after aggregation
  double weight = 0.0;
};

/// Every candidate history (assumed lower setting, hidden draw, retro-chosen
/// upper port, trigger registration) whose wiring reproduces the assumed
/// setting, with weights renormalized to 1. Only valid for
/// RetrocausalConsistent.
std::vector<History> enumerate_histories(const ModelKind& model,
                                         const MeasurementConfig& config,
                                         double trigger_efficiency = 1.0);

/// enumerate_histories merged over hidden variables: one entry per
/// (D1 state, trigger registration, upper, lower).
std::vector<History> consistent_histories(const ModelKind& model,
                                          const MeasurementConfig& config,
                                          double trigger_efficiency = 1.0);

/// Closed-form joint outcome table of a model for ideal detection.
struct ModelPrediction {
  ModelKind model;
  Distribution table;

  /// Restricted to cells where `keep` holds and renormalized.
  template <typename Pred>
  ModelPrediction conditioned(Pred keep) const {
    ModelPrediction out{model, {}};
    double total = 0.0;
    table.for_each([&](SideOutcome u, SideOutcome l, double p) {
      if (keep(u, l)) {
        out.table(u, l) = p;
        total += p;
      }
    });
    if (total > 0.0)
      out.table.for_each([&](SideOutcome u, SideOutcome l, double p) {
        out.table(u, l) = p / total;
      });
    return out;
  }
};

ModelPrediction declared_distribution(const ModelKind& model,
                                      const MeasurementConfig& config);

}  // namespace dcqe
