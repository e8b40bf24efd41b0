#include "dcqe/screen.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace dcqe {
namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double u) { return std::abs(u) < 1e-12 ? 1.0 : std::sin(u) / u; }

std::vector<double> bin_centers(const ScreenGrid& grid, double& width) {
  if (grid.bins == 0 || !(grid.x_max > grid.x_min))
    throw std::invalid_argument("screen grid must have bins and x_max > x_min");
  width = (grid.x_max - grid.x_min) / static_cast<double>(grid.bins);
  std::vector<double> xs(grid.bins);
  for (std::size_t i = 0; i < grid.bins; ++i)
    xs[i] = grid.x_min + (static_cast<double>(i) + 0.5) * width;
  return xs;
}

template <typename F>
ScreenPattern tabulate(const ScreenGrid& grid, F&& density) {
  ScreenPattern p;
  p.xs = bin_centers(grid, p.bin_width);
  p.intensity.resize(p.xs.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < p.xs.size(); ++i) {
    p.intensity[i] = density(p.xs[i]);
    mass += p.intensity[i] * p.bin_width;
  }
  p.mass = mass;
  return p;
}

void rescale(ScreenPattern& p, double mass) {
  if (!(mass > 0.0)) throw std::invalid_argument("pattern has zero mass");
  for (auto& v : p.intensity) v /= mass;
  p.mass /= mass;
}

struct FringeFit {
  double visibility = 0.0;
  double amplitude = 0.0;  // |fringe term| at the center
};

constexpr int kEnvelopeDegree = 4;

FringeFit fit_fringes(const std::vector<double>& t, const std::vector<double>& x,
                      const std::vector<double>& y, double xc, double k) {
  const int cols = 3 * (kEnvelopeDegree + 1);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(t.size()), cols);
  Eigen::VectorXd b(static_cast<Eigen::Index>(t.size()));
  for (std::size_t r = 0; r < t.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    const double c = std::cos(k * (x[r] - xc));
    const double s = std::sin(k * (x[r] - xc));
    double tm = 1.0;
    for (int m = 0; m <= kEnvelopeDegree; ++m) {
      a(row, 3 * m) = tm;
      a(row, 3 * m + 1) = tm * c;
      a(row, 3 * m + 2) = tm * s;
      tm *= t[r];
    }
    b(row) = y[r];
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  FringeFit fit;
  const double p0 = coef(0);
  fit.amplitude = std::hypot(coef(1), coef(2));
  if (p0 <= 0.0) return fit;
  fit.visibility = std::clamp(fit.amplitude / p0, 0.0, 1.0);
  return fit;
}

}  // namespace

void SlitGeometry::validate() const {
  if (!(slit_width > 0.0)) throw std::invalid_argument("slit_width must be > 0");
  if (!(slit_separation > slit_width))
    throw std::invalid_argument("slit_separation must exceed slit_width");
  if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be > 0");
  if (!(screen_distance > 0.0))
    throw std::invalid_argument("screen_distance must be > 0");
  if (!std::isfinite(envelope_shift))
    throw std::invalid_argument("envelope_shift must be finite");
}

bool SlitGeometry::far_field() const {
  return slit_separation * slit_separation / (wavelength * screen_distance) < 1.0;
}

double SlitGeometry::fringe_period() const {
  return wavelength * screen_distance / slit_separation;
}

double SlitGeometry::first_envelope_zero() const {
  return wavelength * screen_distance / slit_width;
}

ScreenGrid default_grid(const SlitGeometry& g) {
  const double half = 3.0 * g.first_envelope_zero();
  return {-half, half, 2048};
}

std::string_view to_string(ScreenCondition c) {
  switch (c) {
    case ScreenCondition::OnD1: return "OnD1";
    case ScreenCondition::OnD2: return "OnD2";
    case ScreenCondition::OnD3: return "OnD3";
    case ScreenCondition::OnD4: return "OnD4";
    case ScreenCondition::NoCondition: return "NoCondition";
  }
  return "?";
}

ScreenCondition parse_condition(std::string_view name) {
  for (auto c : {ScreenCondition::OnD1, ScreenCondition::OnD2,
                 ScreenCondition::OnD3, ScreenCondition::OnD4,
                 ScreenCondition::NoCondition})
    if (to_string(c) == name) return c;
  throw std::invalid_argument("unknown screen condition '" + std::string(name) +
                              "'");
}

double ScreenPattern::center() const {
  if (xs.empty()) return 0.0;
  return 0.5 * (xs.front() + xs.back());
}

Amplitude slit_amplitude(const SlitGeometry& g, double x, int slit) {
  if (slit != 1 && slit != 2) throw std::invalid_argument("slit must be 1 or 2");
  const double sign = slit == 1 ? 1.0 : -1.0;
  const double scale = kPi / (g.wavelength * g.screen_distance);
  const double xe = x - sign * g.envelope_shift;
  const double envelope = sinc(scale * g.slit_width * xe);
  return std::polar(1.0, sign * scale * g.slit_separation * x) * envelope;
}

Amplitude screen_amplitude(const SlitGeometry& g, const ArmState& arm,
                           double x) {
  return arm.amp[0] * slit_amplitude(g, x, 1) +
         arm.amp[1] * slit_amplitude(g, x, 2);
}

double condition_intensity(const SlitGeometry& g, ScreenCondition c, double x) {
  const Amplitude p1 = slit_amplitude(g, x, 1);
  const Amplitude p2 = slit_amplitude(g, x, 2);
  switch (c) {
    case ScreenCondition::OnD1: return 0.5 * std::norm(p1);
    case ScreenCondition::OnD2: return 0.5 * std::norm(p2);
    case ScreenCondition::OnD3: return 0.25 * std::norm(p1 + p2);
    case ScreenCondition::OnD4: return 0.25 * std::norm(p1 - p2);
    case ScreenCondition::NoCondition:
      return 0.5 * (std::norm(p1) + std::norm(p2));
  }
  return 0.0;
}

ScreenPattern conditioned_pattern(const SlitGeometry& g, ScreenCondition c,
                                  const ScreenGrid& grid) {
  g.validate();
  ScreenPattern p =
      tabulate(grid, [&](double x) { return condition_intensity(g, c, x); });
  rescale(p, p.mass);
  p.fringe_period = g.fringe_period();
  return p;
}

ScreenPattern conditioned_pattern(const SlitGeometry& g, ScreenCondition c) {
  return conditioned_pattern(g, c, default_grid(g));
}

ScreenPattern joint_pattern(const SlitGeometry& g, ScreenCondition c,
                            const ScreenGrid& grid) {
  g.validate();
  const ScreenPattern total = tabulate(grid, [&](double x) {
    return condition_intensity(g, ScreenCondition::NoCondition, x);
  });
  ScreenPattern p =
      tabulate(grid, [&](double x) { return condition_intensity(g, c, x); });
  rescale(p, total.mass);
  p.fringe_period = g.fringe_period();
  return p;
}

ScreenPattern arm_pattern(const SlitGeometry& g, const ArmState& arm,
                          const ScreenGrid& grid) {
  g.validate();
  ScreenPattern p = tabulate(
      grid, [&](double x) { return std::norm(screen_amplitude(g, arm, x)); });
  rescale(p, p.mass);
  p.fringe_period = g.fringe_period();
  return p;
}

ScreenPattern histogram_pattern(std::span<const double> hits,
                                const ScreenGrid& grid,
                                std::optional<double> fringe_period) {
  ScreenPattern p;
  p.xs = bin_centers(grid, p.bin_width);
  p.intensity.assign(p.xs.size(), 0.0);
  std::size_t kept = 0;
  for (double x : hits) {
    if (!(x >= grid.x_min && x < grid.x_max)) continue;
    auto i = static_cast<std::size_t>((x - grid.x_min) / p.bin_width);
    i = std::min(i, p.xs.size() - 1);
    p.intensity[i] += 1.0;
    ++kept;
  }
  p.mass = 0.0;
  if (kept > 0) {
    for (auto& v : p.intensity) v /= static_cast<double>(kept) * p.bin_width;
    p.mass = 1.0;
  }
  p.fringe_period = fringe_period;
  return p;
}

double visibility(const ScreenPattern& p, double window) {
  const double xc = p.center();
  const double half = 0.5 * window;
  std::vector<double> t, x, y;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dx = p.xs[i] - xc;
    if (std::abs(dx) <= half) {
      t.push_back(dx / half);
      x.push_back(p.xs[i]);
      y.push_back(p.intensity[i]);
    }
  }
  constexpr std::size_t kMinBins = 9 * (kEnvelopeDegree + 1);
  if (!(window > 0.0) || t.size() < kMinBins)
    throw DegenerateWindow("visibility window holds " +
                           std::to_string(t.size()) + " bins, need " +
                           std::to_string(kMinBins));
  const double span = x.back() - x.front() + p.bin_width;

  if (p.fringe_period) {
    if (span < 2.0 * *p.fringe_period * (1.0 - 1e-9))
      throw DegenerateWindow("visibility window spans fewer than two fringes");
    return fit_fringes(t, x, y, xc, 2.0 * kPi / *p.fringe_period).visibility;
  }

  // Unknown period: remove a quartic trend, locate the strongest spatial
  // frequency of the residual between two cycles per window and a quarter of
  // the sampling rate, refine it, then run the full fit there.
  const double f_lo = 2.0 / span;
  const double f_hi = 0.25 / p.bin_width;
  if (f_hi <= f_lo)
    throw DegenerateWindow("visibility window too coarse to resolve fringes");
  Eigen::MatrixXd trend(static_cast<Eigen::Index>(t.size()), kEnvelopeDegree + 1);
  Eigen::VectorXd obs(static_cast<Eigen::Index>(t.size()));
  for (std::size_t r = 0; r < t.size(); ++r) {
    double tm = 1.0;
    for (int m = 0; m <= kEnvelopeDegree; ++m, tm *= t[r])
      trend(static_cast<Eigen::Index>(r), m) = tm;
    obs(static_cast<Eigen::Index>(r)) = y[r];
  }
  const Eigen::VectorXd residual =
      obs - trend * trend.colPivHouseholderQr().solve(obs);
  auto power = [&](double f) {
    std::complex<double> acc{};
    for (std::size_t r = 0; r < t.size(); ++r)
      acc += residual(static_cast<Eigen::Index>(r)) *
             std::polar(1.0, -2.0 * kPi * f * (x[r] - xc));
    return std::norm(acc);
  };
  const double step = 0.25 / span;
  double best_f = f_lo;
  double best_power = -1.0;
  for (double f = f_lo; f <= f_hi; f += step) {
    const double pw = power(f);
    if (pw > best_power) {
      best_power = pw;
      best_f = f;
    }
  }
  double lo = std::max(f_lo, best_f - step);
  double hi = std::min(f_hi, best_f + step);
  for (int it = 0; it < 60; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (power(m1) < power(m2))
      lo = m1;
    else
      hi = m2;
  }
  return fit_fringes(t, x, y, xc, kPi * (lo + hi)).visibility;
}

ScreenSampler::ScreenSampler(const ScreenPattern& p) : xs_(p.xs) {
  cdf_.resize(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.intensity[i] < 0.0)
      throw std::invalid_argument("pattern has negative intensity");
    acc += p.intensity[i] * p.bin_width;
    cdf_[i] = acc;
  }
  if (!(acc > 0.0)) throw std::invalid_argument("pattern has zero mass");
  for (auto& c : cdf_) c /= acc;
  cdf_.back() = 1.0;
}

std::size_t ScreenSampler::sample_bin(Rng& rng) const {
  const double u = uniform01(rng);
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<std::size_t>(it - cdf_.begin());
}

double ScreenSampler::operator()(Rng& rng) const { return xs_[sample_bin(rng)]; }

double sample_screen_position(const ScreenPattern& p, Rng& rng) {
  return ScreenSampler(p)(rng);
}

void write_pattern_csv(std::ostream& os, const ScreenPattern& p) {
  os << "x_m,intensity\n";
  char buf[64];
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12g,%.17g\n", p.xs[i], p.intensity[i]);
    os << buf;
  }
}

}  // namespace dcqe
