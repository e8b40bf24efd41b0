#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dcqe/quantum.hpp"
#include "dcqe/rng.hpp"

namespace dcqe {

/// Far-field double-slit geometry. All lengths in meters.
struct SlitGeometry {
  double slit_width = 30e-6;
  double slit_separation = 150e-6;
  double wavelength = 700e-9;
  double screen_distance = 1.0;
  double envelope_shift = 0.0;

  /// Throws std::invalid_argument unless width > 0, separation > width,
  /// wavelength > 0 and distance > 0.
  void validate() const;
  /// Fraunhofer number d^2 / (lambda L) below 1. Reported, not enforced.
  bool far_field() const;

  double fringe_period() const;       // lambda L / d
  double first_envelope_zero() const; // lambda L / a
};

struct ScreenGrid {
  double x_min = 0.0;
  double x_max = 0.0;
  std::size_t bins = 2048;
};

/// 2048 bins spanning +-3 lambda L / a.
ScreenGrid default_grid(const SlitGeometry& g);

enum class ScreenCondition : std::uint8_t { OnD1, OnD2, OnD3, OnD4, NoCondition };

std::string_view to_string(ScreenCondition c);
ScreenCondition parse_condition(std::string_view name);

/// Binned screen intensity. `intensity` is a density over x: the sum of
/// intensity * bin_width equals `mass` (1 for a normalized pattern).
struct ScreenPattern {
  std::vector<double> xs;
  std::vector<double> intensity;
  double bin_width = 0.0;
  double mass = 1.0;
  /// Spatial fringe period of the source geometry, when known.
  std::optional<double> fringe_period;

  std::size_t size() const { return xs.size(); }
  double center() const;
};

/// Fraunhofer amplitude of slit 1 or 2 at screen position x, normalized to
/// 1 at the envelope peak.
Amplitude slit_amplitude(const SlitGeometry& g, double x, int slit);

/// Screen amplitude of an upper-arm state c1 |U1> + c2 |U2>.
Amplitude screen_amplitude(const SlitGeometry& g, const ArmState& arm, double x);

/// Joint screen density for the given lower-arm condition, weighted by the
/// probability of that condition: OnD1 = |psi1|^2/2, OnD2 = |psi2|^2/2,
/// OnD3 = |psi1+psi2|^2/4, OnD4 = |psi1-psi2|^2/4,
/// NoCondition = (|psi1|^2+|psi2|^2)/2. Hence OnD3 + OnD4 = OnD1 + OnD2 =
/// NoCondition pointwise.
double condition_intensity(const SlitGeometry& g, ScreenCondition c, double x);

/// Conditioned pattern on `grid`, renormalized to unit mass.
ScreenPattern conditioned_pattern(const SlitGeometry& g, ScreenCondition c,
                                  const ScreenGrid& grid);
ScreenPattern conditioned_pattern(const SlitGeometry& g, ScreenCondition c);

/// Same shape as conditioned_pattern but on the common scale where the
/// NoCondition pattern has unit mass; each condition then carries its joint
/// probability and patterns add pointwise.
ScreenPattern joint_pattern(const SlitGeometry& g, ScreenCondition c,
                            const ScreenGrid& grid);

/// Unit-mass pattern of an arbitrary upper-arm state.
ScreenPattern arm_pattern(const SlitGeometry& g, const ArmState& arm,
                          const ScreenGrid& grid);

/// Empirical density of `hits` over `grid`; hits outside the grid are
/// dropped.
ScreenPattern histogram_pattern(std::span<const double> hits,
                                const ScreenGrid& grid,
                                std::optional<double> fringe_period = {});

/// Fringe contrast (Imax - Imin) / (Imax + Imin) at the pattern center,
/// estimated over a full-width window around it. The pattern is fitted as
/// P(x) + Q(x) cos(kx) + R(x) sin(kx) with quartic envelopes P, Q, R, which
/// separates the fringe modulation from the diffraction envelope and averages
/// out sampling noise. k comes from `fringe_period` when known and is
/// otherwise located by scanning. Throws DegenerateWindow when the window
/// holds fewer than two fringe periods or too few bins.
double visibility(const ScreenPattern& p, double window);

/// Inverse-CDF sampler over the bins of a pattern; draws return bin centers.
class ScreenSampler {
 public:
  explicit ScreenSampler(const ScreenPattern& p);
  std::size_t sample_bin(Rng& rng) const;
  double operator()(Rng& rng) const;

 private:
  std::vector<double> xs_;
  std::vector<double> cdf_;
};

double sample_screen_position(const ScreenPattern& p, Rng& rng);

/// Two-column CSV: x_m,intensity.
void write_pattern_csv(std::ostream& os, const ScreenPattern& p);

}  // namespace dcqe
