#include "dcqe/models.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <tuple>

#include "dcqe/quantum.hpp"

namespace dcqe {
namespace {

SideOutcome path_outcome(int path) {
  return path == 1 ? SideOutcome::P1 : SideOutcome::P2;
}

SideOutcome port_outcome(int port) {
  return port == 3 ? SideOutcome::E3 : SideOutcome::E4;
}

HiddenVariable draw_hidden(Rng& rng) {
  HiddenVariable h;
  h.path = bernoulli(rng, 0.5) ? 1 : 2;
  h.splitter_tag = bernoulli(rng, 0.5) ? 3 : 4;
  return h;
}

bool feedback_listens(const MeasurementConfig& c, SideOutcome upper) {
  return c.feedback && upper == c.feedback->trigger;
}

PairOutcome simulate_qm(const MeasurementConfig& config, Rng& rng,
                        double trigger_efficiency) {
  const JointState state = make_entangled_state();
  PairOutcome out;
  if (!config.feedback) {
    const auto [u, l] = measure_sequential(state, config.temporal_order,
                                           config.upper_basis,
                                           config.lower_basis, rng);
    out.upper = u;
    out.lower = l;
    out.resolved_lower_basis = config.lower_basis;
    return out;
  }
  const Collapse c = measure_arm(state, Side::Upper, config.upper_basis, rng);
  out.upper = c.outcome;
  bool detected = true;
  if (feedback_listens(config, c.outcome)) {
    detected = bernoulli(rng, trigger_efficiency);
    out.upper_detected = detected;
  }
  out.resolved_lower_basis = resolve_lower_basis(config, c.outcome, detected);
  out.lower = measure_arm_state(c.partner, out.resolved_lower_basis, rng);
  return out;
}

PairOutcome simulate_ball(const MeasurementConfig& config, Rng& rng,
                          double trigger_efficiency) {
  PairOutcome out;
  const HiddenVariable h = draw_hidden(rng);
  out.hidden = h;
  out.upper = realist_outcome(config.upper_basis, h);
  bool detected = true;
  if (config.feedback) {
    if (feedback_listens(config, out.upper)) {
      detected = bernoulli(rng, trigger_efficiency);
      out.upper_detected = detected;
    }
  }
  out.resolved_lower_basis = resolve_lower_basis(config, out.upper, detected);
  out.lower = realist_outcome(out.resolved_lower_basis, h);
  return out;
}

PairOutcome simulate_superdeterministic(const MeasurementConfig& config,
                                        Rng& rng, double trigger_efficiency) {
  PairOutcome out = simulate_qm(config, rng, trigger_efficiency);
  // Back-fill the hidden state so that it agrees with whatever the outcomes
  // pin down, the delayed lower side first; unconstrained components are
  // drawn at random.
  std::optional<int> path;
  std::optional<int> tag;
  switch (out.lower) {
    case SideOutcome::P1: path = 1; break;
    case SideOutcome::P2: path = 2; break;
    case SideOutcome::D1Click: path = 1; break;
    case SideOutcome::E3:
    case SideOutcome::E4:
      if (out.resolved_lower_basis == Basis::HybridD1) path = 2;
      tag = out.lower == SideOutcome::E3 ? 3 : 4;
      break;
  }
  switch (out.upper) {
    case SideOutcome::P1: path = path.value_or(1); break;
    case SideOutcome::P2: path = path.value_or(2); break;
    case SideOutcome::E3: tag = tag.value_or(3); break;
    case SideOutcome::E4: tag = tag.value_or(4); break;
    default: break;
  }
  HiddenVariable h;
  h.path = path ? *path : (bernoulli(rng, 0.5) ? 1 : 2);
  h.splitter_tag = tag ? *tag : (bernoulli(rng, 0.5) ? 3 : 4);
  out.hidden = h;
  return out;
}

PairOutcome simulate_retro(const ModelKind& model,
                           const MeasurementConfig& config, Rng& rng,
                           double trigger_efficiency) {
  const auto histories = enumerate_histories(model, config, trigger_efficiency);
  const double u = uniform01(rng);
  double acc = 0.0;
  const History* pick = &histories.back();
  for (const auto& h : histories) {
    acc += h.weight;
    if (u < acc) {
      pick = &h;
      break;
    }
  }
  PairOutcome out;
  out.upper = pick->upper;
  out.lower = pick->lower;
  out.hidden = pick->hidden;
  out.resolved_lower_basis = pick->d1_on ? Basis::HybridD1 : config.lower_basis;
  if (feedback_listens(config, pick->upper))
    out.upper_detected = pick->upper_detected;
  return out;
}

void require_retro(const ModelKind& model) {
  if (model.kind != ModelKind::Kind::RetrocausalConsistent)
    throw std::invalid_argument(
        "history enumeration applies to the retrocausal model only");
}

}  // namespace

SideOutcome realist_outcome(Basis basis, const HiddenVariable& h) {
  switch (basis) {
    case Basis::WhichWay: return path_outcome(h.path);
    case Basis::Eraser: return port_outcome(h.splitter_tag);
    case Basis::HybridD1:
      return h.path == 1 ? SideOutcome::D1Click : port_outcome(h.splitter_tag);
  }
  return SideOutcome::E3;
}

std::string_view to_string(ModelKind::Kind k) {
  switch (k) {
    case ModelKind::Kind::QM: return "QM";
    case ModelKind::Kind::LocalRealistBall: return "LocalRealistBall";
    case ModelKind::Kind::RetrocausalConsistent: return "RetrocausalConsistent";
    case ModelKind::Kind::Superdeterministic: return "Superdeterministic";
  }
  return "?";
}

std::string_view to_string(RetroPolicy p) {
  return p == RetroPolicy::Strict ? "Strict" : "NovikovUniform";
}

std::string describe(const ModelKind& m) {
  std::string s(to_string(m.kind));
  if (m.kind == ModelKind::Kind::RetrocausalConsistent)
    s += "/" + std::string(to_string(m.retro_policy));
  return s;
}

ModelKind::Kind parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::Kind::QM, ModelKind::Kind::LocalRealistBall,
                 ModelKind::Kind::RetrocausalConsistent,
                 ModelKind::Kind::Superdeterministic})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

RetroPolicy parse_retro_policy(std::string_view name) {
  for (auto p : {RetroPolicy::Strict, RetroPolicy::NovikovUniform})
    if (to_string(p) == name) return p;
  throw std::invalid_argument("unknown retro policy '" + std::string(name) +
                              "'");
}

PairOutcome simulate_pair(const ModelKind& model,
                          const MeasurementConfig& config, Rng& rng,
                          double trigger_efficiency) {
  switch (model.kind) {
    case ModelKind::Kind::QM:
      return simulate_qm(config, rng, trigger_efficiency);
    case ModelKind::Kind::LocalRealistBall:
      return simulate_ball(config, rng, trigger_efficiency);
    case ModelKind::Kind::RetrocausalConsistent:
      return simulate_retro(model, config, rng, trigger_efficiency);
    case ModelKind::Kind::Superdeterministic:
      return simulate_superdeterministic(config, rng, trigger_efficiency);
  }
  throw std::invalid_argument("unknown model kind");
}

std::vector<History> enumerate_histories(const ModelKind& model,
                                         const MeasurementConfig& config,
                                         double trigger_efficiency) {
  require_retro(model);
  const bool loop = config.feedback.has_value();

  // Assumed lower settings: without a wire the setting is fixed; with one,
  // both D1 states are candidates with equal prior weight.
  std::vector<bool> settings;
  if (loop)
    settings = {false, true};
  else
    settings = {config.lower_basis == Basis::HybridD1};
  const double setting_prior = 1.0 / static_cast<double>(settings.size());

  std::vector<History> out;
  double total = 0.0;
  for (bool d1_on : settings) {
    // Strict admits only the loop-free branch.
    if (loop && d1_on && model.retro_policy == RetroPolicy::Strict)
      continue;
    const Basis lower_basis = d1_on ? Basis::HybridD1 : config.lower_basis;
    for (int path : {1, 2}) {
      for (int tag : {3, 4}) {
        const HiddenVariable hv{path, tag};
        // With D1 on, the retrocausal influence re-randomizes the upper
        // eraser port 50:50; otherwise the shared tag decides it.
        const bool retro_port =
            d1_on && config.upper_basis == Basis::Eraser;
        for (int port : retro_port ? std::vector<int>{3, 4}
                                   : std::vector<int>{0}) {
          const SideOutcome upper =
              retro_port ? port_outcome(port)
                         : realist_outcome(config.upper_basis, hv);
          for (bool detected : {true, false}) {
            double w = setting_prior * 0.25 * (retro_port ? 0.5 : 1.0);
            if (loop && upper == config.feedback->trigger)
              w *= detected ? trigger_efficiency : 1.0 - trigger_efficiency;
            else if (!detected)
              continue;  // registration only matters at the trigger
            if (w <= 0.0) continue;
            if (loop) {
              const bool wired_on =
                  resolve_lower_basis(config, upper, detected) ==
                  Basis::HybridD1;
              if (wired_on != d1_on) continue;
            }
            History h;
            h.d1_on = d1_on;
            h.upper_detected = detected;
            h.upper = upper;
            h.lower = realist_outcome(lower_basis, hv);
            h.hidden = hv;
            h.weight = w;
            total += w;
            out.push_back(h);
          }
        }
      }
    }
  }
  if (out.empty() || !(total > 0.0))
    throw NoConsistentHistory("no self-consistent history for " +
                              describe(model));
  for (auto& h : out) h.weight /= total;
  return out;
}

std::vector<History> consistent_histories(const ModelKind& model,
                                          const MeasurementConfig& config,
                                          double trigger_efficiency) {
  std::map<std::tuple<bool, bool, SideOutcome, SideOutcome>, double> merged;
  for (const auto& h : enumerate_histories(model, config, trigger_efficiency))
    merged[{h.d1_on, h.upper_detected, h.upper, h.lower}] += h.weight;
  std::vector<History> out;
  out.reserve(merged.size());
  for (const auto& [key, w] : merged) {
    History h;
    std::tie(h.d1_on, h.upper_detected, h.upper, h.lower) = key;
    h.weight = w;
    out.push_back(h);
  }
  return out;
}

ModelPrediction declared_distribution(const ModelKind& model,
                                      const MeasurementConfig& config) {
  config.validate();
  ModelPrediction pred{model, {}};
  switch (model.kind) {
    case ModelKind::Kind::QM:
    case ModelKind::Kind::Superdeterministic: {
      // No-signalling lets every upper outcome pick its own lower setting.
      const JointState state = make_entangled_state();
      for (auto u : kAllOutcomes) {
        if (!outcome_legal(config.upper_basis, u)) continue;
        const Basis lower = resolve_lower_basis(config, u);
        const Distribution d =
            joint_distribution(state, config.upper_basis, lower);
        for (auto l : kAllOutcomes) pred.table(u, l) += d(u, l);
      }
      break;
    }
    case ModelKind::Kind::LocalRealistBall:
      for (int path : {1, 2}) {
        for (int tag : {3, 4}) {
          const HiddenVariable h{path, tag};
          const SideOutcome u = realist_outcome(config.upper_basis, h);
          const SideOutcome l =
              realist_outcome(resolve_lower_basis(config, u), h);
          pred.table(u, l) += 0.25;
        }
      }
      break;
    case ModelKind::Kind::RetrocausalConsistent:
      for (const auto& h : consistent_histories(model, config))
        pred.table(h.upper, h.lower) += h.weight;
      break;
  }
  return pred;
}

}  // namespace dcqe
