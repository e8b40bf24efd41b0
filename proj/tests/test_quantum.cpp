#include <gtest/gtest.h>

#include <map>

#include "dcqe/experiment.hpp"
#include "dcqe/models.hpp"
#include "dcqe/quantum.hpp"
#include "oracles.hpp"

using namespace dcqe;

namespace {

constexpr double kTol = 1e-12;

// Probability table from a 4-vector in the (port, port) basis after the
// given local unitaries; port index 0 -> first outcome of the basis.
std::array<double, 4> born(const oracle::Vec4& v) {
  std::array<double, 4> p{};
  for (int i = 0; i < 4; ++i) p[i] = std::norm(v[i]);
  return p;
}

// Sequential Born rule with collapse for one upper outcome row (a bra on the
// upper arm), returning the unnormalized lower-arm state.
std::array<oracle::C, 2> lower_after(const oracle::Vec4& v,
                                     const std::array<double, 2>& bra) {
  return {bra[0] * v[0] + bra[1] * v[2], bra[0] * v[1] + bra[1] * v[3]};
}

void expect_within_3_sigma(std::uint64_t count, std::uint64_t n, double p) {
  const double mean = static_cast<double>(n) * p;
  const double sigma = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
  EXPECT_LE(std::abs(static_cast<double>(count) - mean), 3.0 * sigma + 1e-9)
      << "count " << count << " expected " << mean;
}

}  // namespace

TEST(EntangledState, IsNormalizedAndCorrelated) {
  const JointState s = make_entangled_state();
  EXPECT_NEAR(s.norm_squared(), 1.0, kTol);
  EXPECT_NEAR(std::abs(s.amp(1, 2)), 0.0, kTol);
  EXPECT_NEAR(std::abs(s.amp(2, 1)), 0.0, kTol);
  EXPECT_NEAR(s.amp(1, 1).real(), oracle::kS, kTol);
}

TEST(EntangledState, RejectsNonFiniteAmplitude) {
  EXPECT_THROW(JointState(std::nan(""), 0.0, 0.0, 0.0), std::invalid_argument);
}

TEST(EraserRotate, MatchesKroneckerProduct) {
  const auto h = oracle::hadamard();
  const auto id = oracle::identity2();
  const oracle::Vec4 v = {oracle::C(0.3, 0.1), oracle::C(-0.2, 0.5),
                          oracle::C(0.6, 0.0), oracle::C(0.1, -0.4)};
  JointState s(v[0], v[1], v[2], v[3]);
  const auto up = oracle::apply(oracle::kron(h, id), v);
  const auto lo = oracle::apply(oracle::kron(id, h), v);
  const JointState su = eraser_rotate(s, Side::Upper);
  const JointState sl = eraser_rotate(s, Side::Lower);
  for (int i = 1; i <= 2; ++i)
    for (int j = 1; j <= 2; ++j) {
      EXPECT_NEAR(std::abs(su.amp(i, j) - up[(i - 1) * 2 + (j - 1)]), 0.0, kTol);
      EXPECT_NEAR(std::abs(sl.amp(i, j) - lo[(i - 1) * 2 + (j - 1)]), 0.0, kTol);
    }
}

TEST(JointDistribution, BothErasersGiveCorrelatedPorts) {
  const auto p = born(oracle::apply(
      oracle::kron(oracle::hadamard(), oracle::hadamard()), oracle::bell()));
  const Distribution d =
      joint_distribution(make_entangled_state(), Basis::Eraser, Basis::Eraser);
  EXPECT_NEAR(d(SideOutcome::E3, SideOutcome::E3), p[0], kTol);
  EXPECT_NEAR(d(SideOutcome::E3, SideOutcome::E4), p[1], kTol);
  EXPECT_NEAR(d(SideOutcome::E4, SideOutcome::E3), p[2], kTol);
  EXPECT_NEAR(d(SideOutcome::E4, SideOutcome::E4), p[3], kTol);
  EXPECT_NEAR(d(SideOutcome::E3, SideOutcome::E3), 0.5, kTol);
  EXPECT_NEAR(d(SideOutcome::E4, SideOutcome::E4), 0.5, kTol);
}

TEST(JointDistribution, MixedBasesMatchKronecker) {
  const auto p = born(oracle::apply(
      oracle::kron(oracle::hadamard(), oracle::identity2()), oracle::bell()));
  const Distribution d =
      joint_distribution(make_entangled_state(), Basis::Eraser, Basis::WhichWay);
  EXPECT_NEAR(d(SideOutcome::E3, SideOutcome::P1), p[0], kTol);
  EXPECT_NEAR(d(SideOutcome::E3, SideOutcome::P2), p[1], kTol);
  EXPECT_NEAR(d(SideOutcome::E4, SideOutcome::P1), p[2], kTol);
  EXPECT_NEAR(d(SideOutcome::E4, SideOutcome::P2), p[3], kTol);
  for (double x : p) EXPECT_NEAR(x, 0.25, kTol);
}

TEST(JointDistribution, WhichWayOnBothSidesIsPerfectlyCorrelated) {
  const Distribution d = joint_distribution(make_entangled_state(),
                                            Basis::WhichWay, Basis::WhichWay);
  EXPECT_NEAR(d(SideOutcome::P1, SideOutcome::P1), 0.5, kTol);
  EXPECT_NEAR(d(SideOutcome::P2, SideOutcome::P2), 0.5, kTol);
  EXPECT_NEAR(d(SideOutcome::P1, SideOutcome::P2), 0.0, kTol);
  EXPECT_NEAR(d.sum(), 1.0, kTol);
}

TEST(JointDistribution, HybridMatchesAbsorbThenSplitOracle) {
  // Lower arm: D1 absorbs path 1; the surviving path-2 amplitude meets the
  // eraser splitter with an empty path-1 input.
  const auto v = oracle::bell();
  const auto h = oracle::hadamard();
  std::map<std::pair<SideOutcome, SideOutcome>, double> expected;
  for (int up = 0; up < 2; ++up) {
    const auto lower = lower_after(v, {h[up][0].real(), h[up][1].real()});
    const SideOutcome u = up == 0 ? SideOutcome::E3 : SideOutcome::E4;
    expected[{u, SideOutcome::D1Click}] = std::norm(lower[0]);
    const std::array<oracle::C, 2> residual = {0.0, lower[1]};
    expected[{u, SideOutcome::E3}] =
        std::norm(h[0][0] * residual[0] + h[0][1] * residual[1]);
    expected[{u, SideOutcome::E4}] =
        std::norm(h[1][0] * residual[0] + h[1][1] * residual[1]);
  }
  const Distribution d =
      joint_distribution(make_entangled_state(), Basis::Eraser, Basis::HybridD1);
  for (const auto& [cell, p] : expected)
    EXPECT_NEAR(d(cell.first, cell.second), p, kTol);
  EXPECT_NEAR(d.sum(), 1.0, kTol);
}

TEST(JointDistribution, FeedbackTableFromSequentialBornRule) {
  // Upper eraser first; port 4 switches D1 on for the lower arm.
  const auto v = oracle::bell();
  const auto h = oracle::hadamard();
  Distribution expected;
  for (int up = 0; up < 2; ++up) {
    const auto lower = lower_after(v, {h[up][0].real(), h[up][1].real()});
    const SideOutcome u = up == 0 ? SideOutcome::E3 : SideOutcome::E4;
    if (u == SideOutcome::E4) {
      expected(u, SideOutcome::D1Click) = std::norm(lower[0]);
      expected(u, SideOutcome::E3) = std::norm(h[0][1] * lower[1]);
      expected(u, SideOutcome::E4) = std::norm(h[1][1] * lower[1]);
    } else {
      expected(u, SideOutcome::E3) = std::norm(h[0][0] * lower[0] + h[0][1] * lower[1]);
      expected(u, SideOutcome::E4) = std::norm(h[1][0] * lower[0] + h[1][1] * lower[1]);
    }
  }
  EXPECT_NEAR(expected(SideOutcome::E3, SideOutcome::E3), 0.5, kTol);
  EXPECT_NEAR(expected(SideOutcome::E4, SideOutcome::D1Click), 0.25, kTol);
  EXPECT_NEAR(expected(SideOutcome::E4, SideOutcome::E3), 0.125, kTol);
  EXPECT_NEAR(expected(SideOutcome::E4, SideOutcome::E4), 0.125, kTol);

  const ModelPrediction qm =
      declared_distribution(ModelKind::qm(), catalog(ExperimentName::E5));
  expected.for_each([&](SideOutcome u, SideOutcome l, double p) {
    EXPECT_NEAR(qm.table(u, l), p, kTol) << to_string(u) << "," << to_string(l);
  });
}

TEST(JointDistribution, RejectsHybridOnUpperArm) {
  EXPECT_THROW(
      joint_distribution(make_entangled_state(), Basis::HybridD1, Basis::Eraser),
      IllegalBasis);
  Rng rng(1);
  EXPECT_THROW(measure_arm(make_entangled_state(), Side::Upper, Basis::HybridD1, rng),
               IllegalBasis);
}

TEST(JointDistribution, RejectsUnnormalizedState) {
  EXPECT_THROW(joint_distribution(JointState(1.0, 1.0, 0.0, 0.0), Basis::Eraser,
                                  Basis::Eraser),
               std::invalid_argument);
}

TEST(MeasureArm, CollapseGivesPartnerState) {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const Collapse c =
        measure_arm(make_entangled_state(), Side::Upper, Basis::WhichWay, rng);
    if (c.outcome == SideOutcome::P1) {
      EXPECT_NEAR(std::abs(c.partner.amp[0]), 1.0, kTol);
      EXPECT_NEAR(std::abs(c.partner.amp[1]), 0.0, kTol);
    } else {
      ASSERT_EQ(c.outcome, SideOutcome::P2);
      EXPECT_NEAR(std::abs(c.partner.amp[1]), 1.0, kTol);
    }
  }
}

TEST(ConditionalArm, ZeroProbabilityOutcomeThrows) {
  const JointState s(1.0, 0.0, 0.0, 0.0);
  EXPECT_THROW(conditional_arm(s, Side::Upper, Basis::WhichWay, SideOutcome::P2),
               std::invalid_argument);
}

TEST(MeasureSequential, SamplesMatchDistributionInBothOrders) {
  const int n = 100000;
  const Distribution d =
      joint_distribution(make_entangled_state(), Basis::Eraser, Basis::HybridD1);
  for (auto order : {TemporalOrder::UpperFirst, TemporalOrder::LowerFirst}) {
    Rng rng(order == TemporalOrder::UpperFirst ? 11 : 12);
    OutcomeTable<std::uint64_t> counts;
    for (int i = 0; i < n; ++i) {
      const auto o = measure_sequential(make_entangled_state(), order,
                                        Basis::Eraser, Basis::HybridD1, rng);
      ++counts[o];
    }
    d.for_each([&](SideOutcome u, SideOutcome l, double p) {
      expect_within_3_sigma(counts(u, l), n, p);
    });
  }
}

TEST(BombTest, ProbabilitiesMatchAmplitudeOracle) {
  // Photon enters port 1 of a splitter; the bomb sits in arm 2.
  const auto h = oracle::hadamard();
  const std::array<oracle::C, 2> inside = {h[0][0], h[1][0]};
  const double explode = std::norm(inside[1]);
  const std::array<oracle::C, 2> survivor = {inside[0], 0.0};
  const double bright = std::norm(h[0][0] * survivor[0] + h[0][1] * survivor[1]);
  const double dark = std::norm(h[1][0] * survivor[0] + h[1][1] * survivor[1]);
  const auto live = bomb_probabilities(true);
  EXPECT_NEAR(live[0], explode, kTol);
  EXPECT_NEAR(live[1], bright, kTol);
  EXPECT_NEAR(live[2], dark, kTol);
  EXPECT_NEAR(live[0], 0.5, kTol);
  EXPECT_NEAR(live[1], 0.25, kTol);
  EXPECT_NEAR(live[2], 0.25, kTol);

  const auto dud = bomb_probabilities(false);
  const oracle::C dud_dark = h[1][0] * inside[0] + h[1][1] * inside[1];
  EXPECT_NEAR(dud[2], std::norm(dud_dark), kTol);
  EXPECT_NEAR(dud[2], 0.0, kTol);
  EXPECT_NEAR(dud[1], 1.0, kTol);
}

TEST(BombTest, MonteCarloWithinThreeSigma) {
  const int n = 100000;
  Rng rng(2024);
  std::array<std::uint64_t, 3> live{}, dud{};
  for (int i = 0; i < n; ++i) {
    ++live[static_cast<std::size_t>(bomb_test(true, rng))];
    ++dud[static_cast<std::size_t>(bomb_test(false, rng))];
  }
  expect_within_3_sigma(live[0], n, 0.5);
  expect_within_3_sigma(live[1], n, 0.25);
  expect_within_3_sigma(live[2], n, 0.25);
  EXPECT_EQ(dud[2], 0u);
  EXPECT_EQ(dud[0], 0u);
}
