#include "dcqe/quantum.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dcqe {
namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

// Row functional over the two paths of one arm: the amplitude of an outcome
// is sum_j row[j] * psi[j]. For HybridD1 the eraser rows act on the state
// with path 1 projected out (D1 absorbs path 1 first).
struct Branch {
  SideOutcome outcome;
  std::array<double, 2> row;
};

std::vector<Branch> branches(Basis basis) {
  switch (basis) {
    case Basis::WhichWay:
      return {{SideOutcome::P1, {1.0, 0.0}}, {SideOutcome::P2, {0.0, 1.0}}};
    case Basis::Eraser:
      return {{SideOutcome::E3, {kInvSqrt2, kInvSqrt2}},
              {SideOutcome::E4, {kInvSqrt2, -kInvSqrt2}}};
    case Basis::HybridD1:
      return {{SideOutcome::D1Click, {1.0, 0.0}},
              {SideOutcome::E3, {0.0, kInvSqrt2}},
              {SideOutcome::E4, {0.0, -kInvSqrt2}}};
  }
  return {};
}

void check_bases(Basis upper_basis) {
  if (upper_basis == Basis::HybridD1)
    throw IllegalBasis("HybridD1 exists only on the lower arm");
}

void check_state(const JointState& state) {
  if (!state.is_normalized(1e-9))
    throw std::invalid_argument("joint state is not normalized");
}

std::size_t sample_index(const double* probs, std::size_t n, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return n - 1;
}

// Conditional (unnormalized) partner state after outcome `row` on `side`.
ArmState partner_after(const JointState& s, Side side,
                       const std::array<double, 2>& row) {
  ArmState out;
  for (int k = 1; k <= 2; ++k) {
    Amplitude acc{};
    for (int i = 1; i <= 2; ++i) {
      acc += row[i - 1] * (side == Side::Upper ? s.amp(i, k) : s.amp(k, i));
    }
    out.amp[k - 1] = acc;
  }
  return out;
}

double arm_norm2(const ArmState& a) {
  return std::norm(a.amp[0]) + std::norm(a.amp[1]);
}

}  // namespace

JointState::JointState(Amplitude a11, Amplitude a12, Amplitude a21,
                       Amplitude a22)
    : amp_{a11, a12, a21, a22} {
  for (const auto& a : amp_)
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
      throw std::invalid_argument("non-finite amplitude");
}

Amplitude JointState::amp(int upper_path, int lower_path) const {
  return amp_[static_cast<std::size_t>((upper_path - 1) * 2 + (lower_path - 1))];
}

void JointState::set_amp(int upper_path, int lower_path, Amplitude value) {
  if (!std::isfinite(value.real()) || !std::isfinite(value.imag()))
    throw std::invalid_argument("non-finite amplitude");
  amp_[static_cast<std::size_t>((upper_path - 1) * 2 + (lower_path - 1))] =
      value;
}

double JointState::norm_squared() const {
  double n = 0.0;
  for (const auto& a : amp_) n += std::norm(a);
  return n;
}

bool JointState::is_normalized(double tol) const {
  return std::abs(norm_squared() - 1.0) <= tol;
}

JointState make_entangled_state() {
  return JointState(kInvSqrt2, 0.0, 0.0, kInvSqrt2);
}

JointState eraser_rotate(const JointState& state, Side side) {
  JointState out;
  for (int i = 1; i <= 2; ++i) {
    for (int j = 1; j <= 2; ++j) {
      // Output index 1 is port 3, index 2 is port 4.
      const double sign = (side == Side::Upper ? i : j) == 2 ? -1.0 : 1.0;
      Amplitude v;
      if (side == Side::Upper)
        v = kInvSqrt2 * (state.amp(1, j) + sign * state.amp(2, j));
      else
        v = kInvSqrt2 * (state.amp(i, 1) + sign * state.amp(i, 2));
      out.set_amp(i, j, v);
    }
  }
  return out;
}

Distribution joint_distribution(const JointState& state, Basis upper_basis,
                                Basis lower_basis) {
  check_bases(upper_basis);
  check_state(state);
  Distribution dist;
  for (const auto& ub : branches(upper_basis)) {
    const ArmState lower = partner_after(state, Side::Upper, ub.row);
    for (const auto& lb : branches(lower_basis)) {
      const Amplitude a = lb.row[0] * lower.amp[0] + lb.row[1] * lower.amp[1];
      dist(ub.outcome, lb.outcome) += std::norm(a);
    }
  }
  return dist;
}

std::array<double, kOutcomeCount> arm_probabilities(const ArmState& arm,
                                                    Basis basis) {
  std::array<double, kOutcomeCount> p{};
  for (const auto& b : branches(basis)) {
    const Amplitude a = b.row[0] * arm.amp[0] + b.row[1] * arm.amp[1];
    p[index_of(b.outcome)] += std::norm(a);
  }
  return p;
}

Collapse measure_arm(const JointState& state, Side side, Basis basis,
                     Rng& rng) {
  if (side == Side::Upper) check_bases(basis);
  check_state(state);
  const auto bs = branches(basis);
  std::vector<ArmState> partners;
  std::vector<double> probs;
  partners.reserve(bs.size());
  probs.reserve(bs.size());
  for (const auto& b : bs) {
    partners.push_back(partner_after(state, side, b.row));
    probs.push_back(arm_norm2(partners.back()));
  }
  std::size_t k = sample_index(probs.data(), probs.size(), rng);
  // Guard against sampling a zero-probability branch through rounding.
  while (probs[k] <= 0.0) k = (k + 1) % probs.size();
  ArmState partner = partners[k];
  const double n = std::sqrt(probs[k]);
  partner.amp[0] /= n;
  partner.amp[1] /= n;
  return {bs[k].outcome, partner};
}

ArmState conditional_arm(const JointState& state, Side measured, Basis basis,
                         SideOutcome outcome) {
  if (measured == Side::Upper) check_bases(basis);
  for (const auto& b : branches(basis)) {
    if (b.outcome != outcome) continue;
    ArmState partner = partner_after(state, measured, b.row);
    const double n2 = arm_norm2(partner);
    if (!(n2 > 0.0)) break;
    const double n = std::sqrt(n2);
    partner.amp[0] /= n;
    partner.amp[1] /= n;
    return partner;
  }
  throw std::invalid_argument("outcome " + std::string(to_string(outcome)) +
                              " has zero probability in basis " +
                              std::string(to_string(basis)));
}

SideOutcome measure_arm_state(const ArmState& arm, Basis basis, Rng& rng) {
  const auto p = arm_probabilities(arm, basis);
  std::size_t k = sample_index(p.data(), p.size(), rng);
  while (p[k] <= 0.0) k = (k + 1) % p.size();
  return kAllOutcomes[k];
}

OutcomePair measure_sequential(const JointState& state, TemporalOrder order,
                               Basis upper_basis, Basis lower_basis, Rng& rng) {
  check_bases(upper_basis);
  if (order == TemporalOrder::UpperFirst) {
    const Collapse c = measure_arm(state, Side::Upper, upper_basis, rng);
    return {c.outcome, measure_arm_state(c.partner, lower_basis, rng)};
  }
  const Collapse c = measure_arm(state, Side::Lower, lower_basis, rng);
  return {measure_arm_state(c.partner, upper_basis, rng), c.outcome};
}

std::string_view to_string(BombOutcome o) {
  switch (o) {
    case BombOutcome::Explode: return "Explode";
    case BombOutcome::DetectorBright: return "DetectorBright";
    case BombOutcome::DetectorDark: return "DetectorDark";
  }
  return "?";
}

namespace {

// Mach-Zehnder with the beamsplitter (1, 1; 1, -1)/sqrt(2) at both ends. The
// photon enters port 1; arm 2 carries the bomb. Output port 1 is the bright
// detector, port 2 the dark one.
constexpr std::array<std::array<double, 2>, 2> kSplitter = {
    {{kInvSqrt2, kInvSqrt2}, {kInvSqrt2, -kInvSqrt2}}};

std::array<double, 2> split(const std::array<double, 2>& in) {
  return {kSplitter[0][0] * in[0] + kSplitter[0][1] * in[1],
          kSplitter[1][0] * in[0] + kSplitter[1][1] * in[1]};
}

}  // namespace

std::array<double, 3> bomb_probabilities(bool bomb_live) {
  const auto inside = split({1.0, 0.0});
  std::array<double, 3> p{};
  if (!bomb_live) {
    const auto out = split(inside);
    p[1] = out[0] * out[0];
    p[2] = out[1] * out[1];
    return p;
  }
  p[0] = inside[1] * inside[1];
  // Survivors are projected onto arm 1 before the second splitter.
  const auto out = split({inside[0], 0.0});
  p[1] = out[0] * out[0];
  p[2] = out[1] * out[1];
  return p;
}

BombOutcome bomb_test(bool bomb_live, Rng& rng) {
  const auto inside = split({1.0, 0.0});
  std::array<double, 2> arms = inside;
  if (bomb_live) {
    if (bernoulli(rng, inside[1] * inside[1])) return BombOutcome::Explode;
    arms = {1.0, 0.0};
  }
  const auto out = split(arms);
  const double bright = out[0] * out[0] / (out[0] * out[0] + out[1] * out[1]);
  return bernoulli(rng, bright) ? BombOutcome::DetectorBright
                                : BombOutcome::DetectorDark;
}

}  // namespace dcqe
