#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "dcqe/experiment.hpp"
#include "dcqe/models.hpp"
#include "dcqe/screen.hpp"

namespace dcqe {

/// Parametric single-photon detector shared by all detectors of a run.
struct DetectorModel {
  double efficiency = 1.0;           // per-photon registration probability
  double dark_rate = 0.0;            // counts / s per detector
  double jitter_sigma = 0.0;         // s, Gaussian timing jitter
  double coincidence_window = 1e-9;  // s, half-width of the matching window
  double pair_rate = 1e4;            // pairs / s
  double lower_delay = 50e-9;        // s, extra flight time of the lower arm

  void validate() const;
};

/// Named detector presets: "ideal", "spad", "mkid".
DetectorModel detector_preset(std::string_view name);
std::vector<std::string_view> detector_preset_names();

enum class DetectorId : std::uint8_t { U1, U2, U3, U4, D1, D2, D3, D4, Screen };

std::string_view to_string(DetectorId d);
DetectorId parse_detector(std::string_view name);
bool is_upper(DetectorId d);

DetectorId upper_detector(SideOutcome o);
DetectorId lower_detector(SideOutcome o);

/// Outcome a detector click stands for. D1 reads as P1 under the which-way
/// setting and as D1Click whenever D1 sits in front of the lower eraser.
/// Returns nullopt for the screen.
std::optional<SideOutcome> click_outcome(DetectorId d, Basis lower_basis);

struct ClickRecord {
  DetectorId detector = DetectorId::U1;
  double timestamp = 0.0;              // s
  std::optional<std::uint64_t> pair_id;  // absent for dark counts
  std::optional<double> screen_x;      // m, screen clicks only

  bool operator==(const ClickRecord&) const = default;
};

/// Detectors that exist (and hence dark-count) in a configuration.
std::vector<DetectorId> active_detectors(const MeasurementConfig& config);

struct RunResult {
  std::vector<ClickRecord> clicks;  // sorted by time
  std::vector<PairOutcome> raw;     // noiseless ground truth, index = pair id
};

/// Simulates config.pair_count pairs. Pairs are split into fixed-size chunks
/// with independent RNG substreams derived from config.seed, so the result is
/// identical for any `threads` (0 = hardware concurrency), and the first n
/// pairs of a longer run equal a run of n pairs.
RunResult run_experiment(const MeasurementConfig& config, const ModelKind& model,
                         const DetectorModel& det, unsigned threads = 0);

struct CoincidenceRecord {
  ClickRecord upper;
  ClickRecord lower;
  double dt = 0.0;  // lower - upper - lower_delay
};

struct CoincidenceResult {
  std::vector<CoincidenceRecord> coincidences;  // in upper-click time order
  std::uint64_t unmatched_upper = 0;
  std::uint64_t unmatched_lower = 0;
};

/// Greedy nearest-neighbour pairing: each upper click, in time order, takes
/// the closest unused lower click with |t_lower - lower_delay - t_upper| <=
/// window. Unmatched clicks go to the singles tally.
CoincidenceResult match_coincidences(std::vector<ClickRecord> clicks,
                                     double window, double lower_delay = 0.0);

struct ScreenHit {
  std::uint64_t pair_id = 0;
  double x = 0.0;
  SideOutcome lower = SideOutcome::E3;
};

struct ScreenRunResult {
  std::vector<ClickRecord> clicks;
  std::vector<PairOutcome> raw;
  std::vector<ScreenHit> hits;  // ground-truth hit per pair
  ScreenGrid grid;
};

/// Screen run: the upper photon lands on a position-resolving screen.
/// QM samples the lower outcome first and the hit from the conditioned
/// pattern; the ball model draws the hit with path and tag correlated to it.
/// Throws UnsupportedModel for the retrocausal and superdeterministic models.
ScreenRunResult run_screen_experiment(const MeasurementConfig& config,
                                      const ModelKind& model,
                                      const SlitGeometry& geometry,
                                      const DetectorModel& det,
                                      unsigned threads = 0);

}  // namespace dcqe
