#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcqe/experiment.hpp"
#include "dcqe/harness.hpp"
#include "dcqe/models.hpp"

namespace dcqe {

struct JointTable {
  OutcomeTable<std::uint64_t> counts;
  std::uint64_t total = 0;

  void add(SideOutcome upper, SideOutcome lower, std::uint64_t n = 1) {
    counts(upper, lower) += n;
    total += n;
  }
  /// Subset of cells where `keep` holds.
  JointTable filtered(
      const std::function<bool(SideOutcome, SideOutcome)>& keep) const;
  double frequency(SideOutcome upper, SideOutcome lower) const;

  bool operator==(const JointTable&) const = default;
};

enum class Verdict : std::uint8_t { FavorsQM, FavorsRival, Inconclusive };

std::string_view to_string(Verdict v);
Verdict parse_verdict(std::string_view name);

inline constexpr double kNegInfinity = -std::numeric_limits<double>::infinity();

struct TestReport {
  std::string test_name;
  double statistic = 0.0;
  double p_value = 1.0;
  /// log L(rival) - log L(QM); -inf when the data is impossible under the
  /// rival.
  double log_likelihood_ratio = 0.0;
  std::uint64_t n_pairs = 0;
  Verdict verdict = Verdict::Inconclusive;
  /// Number of outcomes a sequential reader needs before the verdict is
  /// settled, when the test is sequential and settles.
  std::optional<std::uint64_t> decided_at;
  std::optional<int> degrees_of_freedom;

  bool operator==(const TestReport&) const = default;
};

/// How D1 clicks read in a configuration: P1 under which-way, D1Click
/// wherever D1 can sit in front of the eraser.
Basis d1_reading(const MeasurementConfig& config);

/// Outcome pair of a coincidence; nullopt for screen coincidences.
std::optional<OutcomePair> coincidence_outcome(const CoincidenceRecord& c,
                                               Basis d1_basis);

/// Tallies coincidences by their detector ids. Accidentals are counted
/// wherever their detectors put them.
JointTable build_table(std::span<const CoincidenceRecord> coincidences,
                       const MeasurementConfig& config);
/// Ground-truth table of raw model outcomes.
JointTable build_table(std::span<const PairOutcome> raw);

/// Outcome sequence of the coincidences in time order.
std::vector<OutcomePair> outcome_sequence(
    std::span<const CoincidenceRecord> coincidences,
    const MeasurementConfig& config);

/// Maps an outcome to +1 / -1, or nullopt to leave it out.
using Grouping = std::function<std::optional<int>(SideOutcome)>;

/// P1, E3 -> +1; P2, E4 -> -1; D1Click excluded.
Grouping default_grouping();

/// Pearson correlation of the two +-1 variables over the included cells.
/// Throws DegenerateMarginal if either side is constant or nothing remains.
double binary_correlation(const JointTable& table, const Grouping& grouping);

/// Smallest N with 2^-N <= alpha. Requires 0 < alpha < 1.
int pairs_to_significance(double alpha);

/// Exact test of the strict retrocausal prediction (only (E3,E3)) against
/// QM, which gives (E3,E3) probability `qm_e3e3` per pair. The p-value is
/// qm_e3e3^N for the all-(E3,E3) prefix of length N. Any other outcome is
/// impossible under the rival: logLR = -inf and the verdict favours QM.
/// Otherwise the verdict favours the rival once p <= alpha.
TestReport sequence_test(std::span<const OutcomePair> outcomes, double alpha,
                         double qm_e3e3 = 0.5);

/// Pearson chi-square of `table` against `predicted`. Cells expected below 5
/// counts are pooled. A predicted-zero cell with counts gives p = 0.
/// Throws InsufficientData if the table is empty or pooling leaves one cell
/// out of several predicted ones.
TestReport chi_square_test(const JointTable& table,
                           const ModelPrediction& predicted,
                           double alpha = 0.01);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double statistic, int dof);

/// One-sample Kolmogorov-Smirnov statistic against U(0, 1).
double ks_statistic_uniform(std::vector<double> samples);
/// Asymptotic Kolmogorov p-value of statistic `d` for `n` samples.
double ks_p_value(double d, std::size_t n);

/// Per-cell z-scores (n - N p) / sqrt(N p (1 - p)); nullopt where p is 0 or 1.
OutcomeTable<std::optional<double>> cell_z_scores(const JointTable& table,
                                                  const Distribution& expected);

struct PowerSweepRequest {
  ModelKind data_model = ModelKind::qm();
  ModelKind rival = ModelKind::retro();
  MeasurementConfig config = catalog(ExperimentName::E5);
  DetectorModel base_detector;
  std::vector<double> efficiencies = {1.0};
  std::vector<double> dark_rates = {0.0};
  double alpha = 1e-6;
  std::uint32_t trials = 200;
  std::uint64_t max_pairs = 100000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

struct PowerSweepRow {
  double efficiency = 0.0;
  double dark_rate = 0.0;
  std::uint32_t trials = 0;
  std::uint32_t unreachable = 0;  // trials that never rejected within budget
  /// Emitted pairs needed to reject the rival; nullopt = unreachable.
  std::optional<double> median;
  std::optional<double> median_lo, median_hi;  // 95 % order-statistic CI
  std::optional<double> mean;                  // over reaching trials
  std::optional<double> mean_lo, mean_hi;      // 95 % normal CI
};

/// Monte Carlo of the emitted pairs needed before the rival is rejected at
/// level alpha, for every (efficiency, dark rate) point. Feedback configs use
/// the sequence test when the rival (or the data model) is the strict
/// retrocausal model; everything else uses chi-square against the rival's
/// declared table at doubling checkpoints.
std::vector<PowerSweepRow> power_sweep(const PowerSweepRequest& request);

}  // namespace dcqe
