#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "dcqe/screen.hpp"

using namespace dcqe;

namespace {

const SlitGeometry kGeom;

// Direct evaluation of the two-slit Fraunhofer amplitudes.
std::complex<double> psi(int slit, double x) {
  const double pi = std::numbers::pi;
  const double lam_l = kGeom.wavelength * kGeom.screen_distance;
  const double beta = pi * kGeom.slit_width * x / lam_l;
  const double env = beta == 0.0 ? 1.0 : std::sin(beta) / beta;
  const double phase = (slit == 1 ? 1.0 : -1.0) * pi * kGeom.slit_separation * x / lam_l;
  return std::polar(env, phase);
}

ScreenPattern synthetic(double a, double v0, double b, double period,
                        std::size_t bins = 1001) {
  ScreenPattern p;
  const double lo = -4.0 * period, hi = 4.0 * period;
  p.bin_width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    const double x = lo + (static_cast<double>(i) + 0.5) * p.bin_width;
    p.xs.push_back(x);
    p.intensity.push_back(a * (1.0 + v0 * std::cos(2.0 * std::numbers::pi * x / period)) + b);
  }
  p.fringe_period = period;
  return p;
}

}  // namespace

TEST(SlitGeometry, DerivedLengths) {
  EXPECT_NEAR(kGeom.fringe_period(), 700e-9 / 150e-6, 1e-15);
  EXPECT_NEAR(kGeom.first_envelope_zero(), 700e-9 / 30e-6, 1e-15);
  EXPECT_TRUE(kGeom.far_field());
}

TEST(SlitGeometry, ValidateRejectsBadValues) {
  SlitGeometry g;
  g.slit_width = 0.0;
  EXPECT_THROW(g.validate(), std::invalid_argument);
  g = SlitGeometry{};
  g.slit_separation = g.slit_width / 2.0;
  EXPECT_THROW(g.validate(), std::invalid_argument);
  g = SlitGeometry{};
  g.wavelength = -1.0;
  EXPECT_THROW(g.validate(), std::invalid_argument);
}

TEST(SlitAmplitude, MatchesDirectFraunhoferFormula) {
  for (double x : {-0.03, -0.004, 0.0, 0.0011, 0.02}) {
    for (int s : {1, 2}) {
      const auto a = slit_amplitude(kGeom, x, s);
      EXPECT_NEAR(std::abs(a - psi(s, x)), 0.0, 1e-12);
    }
  }
}

TEST(ConditionIntensity, MatchesJointWeightedOracle) {
  for (double x : {-0.02, -0.0031, 0.0, 0.0007, 0.015}) {
    const auto p1 = psi(1, x), p2 = psi(2, x);
    EXPECT_NEAR(condition_intensity(kGeom, ScreenCondition::OnD1, x), std::norm(p1) / 2, 1e-12);
    EXPECT_NEAR(condition_intensity(kGeom, ScreenCondition::OnD2, x), std::norm(p2) / 2, 1e-12);
    EXPECT_NEAR(condition_intensity(kGeom, ScreenCondition::OnD3, x), std::norm(p1 + p2) / 4, 1e-12);
    EXPECT_NEAR(condition_intensity(kGeom, ScreenCondition::OnD4, x), std::norm(p1 - p2) / 4, 1e-12);
  }
}

TEST(ConditionIntensity, ErasedPatternsAddUpToNoCondition) {
  for (int i = -500; i <= 500; ++i) {
    const double x = i * 1.37e-4;
    const double sum = condition_intensity(kGeom, ScreenCondition::OnD3, x) +
                       condition_intensity(kGeom, ScreenCondition::OnD4, x);
    const double which = condition_intensity(kGeom, ScreenCondition::OnD1, x) +
                         condition_intensity(kGeom, ScreenCondition::OnD2, x);
    const double none = condition_intensity(kGeom, ScreenCondition::NoCondition, x);
    EXPECT_NEAR(sum, none, 1e-12);
    EXPECT_NEAR(which, none, 1e-12);
  }
  EXPECT_NEAR(condition_intensity(kGeom, ScreenCondition::OnD4, 0.0), 0.0, 1e-12);
}

TEST(JointPattern, ConditionsShareOneScale) {
  const ScreenGrid grid = default_grid(kGeom);
  const auto d3 = joint_pattern(kGeom, ScreenCondition::OnD3, grid);
  const auto d4 = joint_pattern(kGeom, ScreenCondition::OnD4, grid);
  const auto none = joint_pattern(kGeom, ScreenCondition::NoCondition, grid);
  ASSERT_EQ(d3.size(), none.size());
  double peak = 0.0;
  for (double v : none.intensity) peak = std::max(peak, v);
  for (std::size_t i = 0; i < none.size(); ++i)
    EXPECT_NEAR(d3.intensity[i] + d4.intensity[i], none.intensity[i], 1e-12 * peak);
  EXPECT_NEAR(none.mass, 1.0, 1e-12);
  EXPECT_NEAR(d3.mass + d4.mass, 1.0, 1e-12);
}

TEST(ConditionedPattern, HasUnitMass) {
  for (auto c : {ScreenCondition::OnD1, ScreenCondition::OnD3, ScreenCondition::NoCondition}) {
    const auto p = conditioned_pattern(kGeom, c);
    double mass = 0.0;
    for (double v : p.intensity) mass += v * p.bin_width;
    EXPECT_NEAR(mass, 1.0, 1e-12);
  }
}

TEST(Visibility, RecoversContrastOfSyntheticFringes) {
  const double period = 1e-3;
  EXPECT_NEAR(visibility(synthetic(1.0, 1.0, 0.0, period), 6 * period), 1.0, 1e-9);
  EXPECT_NEAR(visibility(synthetic(1.0, 0.4, 0.0, period), 6 * period), 0.4, 1e-9);
  // 10 % flat background: V = A V0 / (A + B).
  EXPECT_NEAR(visibility(synthetic(0.9, 1.0, 0.1, period), 6 * period), 0.9, 1e-9);
  EXPECT_NEAR(visibility(synthetic(1.0, 0.0, 0.0, period), 6 * period), 0.0, 1e-9);
}

TEST(Visibility, ScansForUnknownPeriod) {
  auto p = synthetic(0.9, 1.0, 0.1, 1e-3);
  p.fringe_period.reset();
  EXPECT_NEAR(visibility(p, 6e-3), 0.9, 1e-3);
}

TEST(Visibility, IdealConditionedPatterns) {
  const double w = kGeom.first_envelope_zero();
  EXPECT_GT(visibility(conditioned_pattern(kGeom, ScreenCondition::OnD3), w), 0.999);
  EXPECT_GT(visibility(conditioned_pattern(kGeom, ScreenCondition::OnD4), w), 0.999);
  EXPECT_LT(visibility(conditioned_pattern(kGeom, ScreenCondition::OnD1), w), 0.01);
  EXPECT_LT(visibility(conditioned_pattern(kGeom, ScreenCondition::NoCondition), w), 0.01);
}

TEST(Visibility, DegenerateWindowThrows) {
  const auto p = conditioned_pattern(kGeom, ScreenCondition::OnD3);
  EXPECT_THROW(visibility(p, kGeom.fringe_period()), DegenerateWindow);
  EXPECT_THROW(visibility(p, 0.0), DegenerateWindow);
}

TEST(ScreenSampler, HistogramsFollowThePattern) {
  const ScreenGrid grid = default_grid(kGeom);
  const auto target = conditioned_pattern(kGeom, ScreenCondition::OnD3, grid);
  const ScreenSampler sampler(target);
  Rng rng(99);
  const int n = 100000;
  std::vector<double> hits(n);
  for (auto& x : hits) x = sampler(rng);
  const auto hist = histogram_pattern(hits, grid, kGeom.fringe_period());
  EXPECT_GE(visibility(hist, kGeom.first_envelope_zero()), 0.95);
  // Bin counts within 3 sigma of the binomial expectation, in aggregate over
  // coarse blocks of 64 bins.
  for (std::size_t b = 0; b < grid.bins; b += 64) {
    double p = 0.0, observed = 0.0;
    for (std::size_t i = b; i < b + 64; ++i) {
      p += target.intensity[i] * target.bin_width;
      observed += hist.intensity[i] * hist.bin_width * n;
    }
    const double sigma = std::sqrt(n * p * (1 - p));
    EXPECT_LE(std::abs(observed - n * p), 4.0 * sigma + 1.0) << "block " << b;
  }
}

TEST(ScreenSampler, DiscreteInverseCdf) {
  ScreenPattern p;
  p.xs = {0.0, 1.0, 2.0, 3.0};
  p.intensity = {0.1, 0.2, 0.0, 0.7};
  p.bin_width = 1.0;
  const ScreenSampler s(p);
  Rng rng(5);
  std::array<int, 4> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[s.sample_bin(rng)];
  EXPECT_EQ(counts[2], 0);
  for (int i : {0, 1, 3}) {
    const double q = p.intensity[static_cast<std::size_t>(i)];
    EXPECT_NEAR(counts[static_cast<std::size_t>(i)], n * q, 3 * std::sqrt(n * q * (1 - q)));
  }
}

TEST(PatternCsv, HeaderAndRows) {
  ScreenPattern p;
  p.xs = {-1e-3, 1e-3};
  p.intensity = {0.5, 0.25};
  p.bin_width = 2e-3;
  std::ostringstream os;
  write_pattern_csv(os, p);
  EXPECT_EQ(os.str(), "x_m,intensity\n-0.001,0.5\n0.001,0.25\n");
}
