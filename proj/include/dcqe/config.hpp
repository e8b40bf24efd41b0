#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcqe/experiment.hpp"
#include "dcqe/harness.hpp"
#include "dcqe/models.hpp"
#include "dcqe/screen.hpp"

namespace dcqe {

/// Bad configuration text or values. `line` is 0 when the problem is not tied
/// to a line (a missing file, or a default that conflicts with another key).
class ConfigError : public Error {
 public:
  ConfigError(std::string source, std::size_t line, std::string key,
              const std::string& message);
  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  std::string source_;
  std::size_t line_;
  std::string key_;
};

/// Accepts "QM", "LocalRealistBall", "Superdeterministic",
/// "RetrocausalConsistent" and "RetrocausalConsistent/<policy>".
ModelKind parse_model_descriptor(std::string_view text);

struct AnalysisSpec {
  /// Any of "correlation", "chi_square", "sequence". Empty = defaults for
  /// the experiment.
  std::vector<std::string> tests;
  /// Model tested against QM. Defaults to the strict retrocausal model for
  /// feedback experiments and the ball model otherwise.
  std::optional<ModelKind> rival;
  double alpha = 0.01;
  double sequence_alpha = 1e-6;
  /// Drop D1Click rows before testing. Defaults to true for E4.
  std::optional<bool> exclude_d1click;
  /// Keep only coincidences whose two clicks belong to the same pair.
  bool oracle_filter = false;
  /// Full width of the visibility window in screen runs; 0 = lambda L / a.
  double visibility_window = 0.0;
};

struct SweepSpec {
  std::vector<double> efficiencies = {1.0, 0.5};
  std::vector<double> dark_rates = {0.0};
  std::uint32_t trials = 200;
  std::uint64_t max_pairs = 100000;
  ModelKind rival = ModelKind::retro();
  double alpha = 1e-6;
};

struct FringeSpec {
  ScreenCondition condition = ScreenCondition::OnD3;
  /// Monte Carlo hits for an optional histogram CSV; 0 = none.
  std::uint64_t samples = 0;
  /// Write unit-mass patterns instead of the common joint scale.
  bool unit_mass = false;
};

struct RunConfig {
  ExperimentName experiment = ExperimentName::E2;
  ModelKind model = ModelKind::qm();
  std::uint64_t pairs = 100000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  TemporalOrder temporal_order = TemporalOrder::UpperFirst;

  std::string detector_preset = "ideal";
  DetectorModel detector;

  SlitGeometry geometry;
  std::optional<double> grid_min, grid_max;
  std::size_t grid_bins = 2048;
  /// Pump wavelength of the pair source. Recorded only; the down-converted
  /// photons sit at twice this value.
  double pump_wavelength = 350e-9;

  std::string output_dir = "out";

  AnalysisSpec analysis;
  SweepSpec sweep;
  FringeSpec fringe;

  /// Line on which each "section.key" was set.
  std::map<std::string, std::size_t> key_lines;
  std::string source = "<defaults>";

  MeasurementConfig measurement() const;
  ScreenGrid grid() const;
  ModelKind rival() const;
  bool exclude_d1click() const;
  std::vector<std::string> tests() const;
  double visibility_window() const;

  /// Cross-key checks. Throws ConfigError naming the key involved.
  void validate() const;
};

/// Parses the sectioned key = value format. Unknown sections or keys,
/// duplicates and bad values raise ConfigError with the line number.
RunConfig parse_config(std::istream& is, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Applies one "section.key=value" assignment on top of `cfg`, as if it were
/// the last line of the file, then re-validates. Errors name `source`.
void apply_setting(RunConfig& cfg, std::string_view assignment,
                   const std::string& source = "command line");

struct ConfigKey {
  std::string section;
  std::string key;
  std::string default_value;
  std::string description;
};

/// Every accepted key, in the order they are documented.
const std::vector<ConfigKey>& config_keys();

/// Markdown reference page generated from config_keys().
std::string config_reference_markdown();

/// Config text that parses back to `cfg` exactly, apart from key_lines, the
/// thread count and the output directory, none of which affect results.
std::string to_config_text(const RunConfig& cfg);

/// A complete config file with every key at its default.
std::string default_config_text();

}  // namespace dcqe
