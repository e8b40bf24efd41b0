#pragma once

#include <array>
#include <complex>
#include <vector>

#include "dcqe/rng.hpp"
#include "dcqe/types.hpp"

namespace dcqe {

using Amplitude = std::complex<double>;

inline constexpr double kExactTolerance = 1e-12;

/// Two-photon state over {U-path1, U-path2} x {D-path1, D-path2}.
/// Paths are 1-based to match detector numbering.
class JointState {
 public:
  JointState() = default;
  /// Throws std::invalid_argument if any amplitude is non-finite.
  JointState(Amplitude a11, Amplitude a12, Amplitude a21, Amplitude a22);

  Amplitude amp(int upper_path, int lower_path) const;
  void set_amp(int upper_path, int lower_path, Amplitude value);

  double norm_squared() const;
  bool is_normalized(double tol = kExactTolerance) const;

 private:
  std::array<Amplitude, 4> amp_{};
};

/// State of one arm after its partner has been measured.
struct ArmState {
  std::array<Amplitude, 2> amp{};
};

/// (|1>|1> + |2>|2>)/sqrt(2).
JointState make_entangled_state();

/// Applies (1, 1; 1, -1)/sqrt(2) to the path index of one arm. Port 3 is
/// the symmetric and port 4 the antisymmetric combination.
JointState eraser_rotate(const JointState& state, Side side);

/// Born-rule joint outcome probabilities. Throws IllegalBasis when HybridD1 is
/// requested on the upper arm.
Distribution joint_distribution(const JointState& state, Basis upper_basis,
                                Basis lower_basis);

/// Single-arm outcome probabilities, indexed by SideOutcome.
std::array<double, kOutcomeCount> arm_probabilities(const ArmState& arm,
                                                    Basis basis);

struct Collapse {
  SideOutcome outcome;
  ArmState partner;  // normalized conditional state of the other arm
};

/// Measures one arm of `state`, sampling from its marginal, and returns the
/// collapsed state of the other arm.
Collapse measure_arm(const JointState& state, Side side, Basis basis, Rng& rng);

/// Normalized state of the other arm after `outcome` was observed on
/// `measured`. Throws std::invalid_argument if the outcome has probability 0.
ArmState conditional_arm(const JointState& state, Side measured, Basis basis,
                         SideOutcome outcome);

/// Measures a single-arm state.
SideOutcome measure_arm_state(const ArmState& arm, Basis basis, Rng& rng);

/// Measures both arms in the given temporal order with collapse in between.
OutcomePair measure_sequential(const JointState& state, TemporalOrder order,
                               Basis upper_basis, Basis lower_basis, Rng& rng);

enum class BombOutcome : std::uint8_t { Explode, DetectorBright, DetectorDark };

std::string_view to_string(BombOutcome o);

/// Exact outcome probabilities of the Mach-Zehnder bomb tester, indexed by
/// BombOutcome.
std::array<double, 3> bomb_probabilities(bool bomb_live);

/// One photon through the bomb tester.
BombOutcome bomb_test(bool bomb_live, Rng& rng);

}  // namespace dcqe
