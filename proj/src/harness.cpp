#include "dcqe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>

#include "dcqe/quantum.hpp"

namespace dcqe {
namespace {

constexpr std::uint64_t kChunkPairs = 4096;
constexpr std::uint64_t kPairStream = 0x7061697273ULL;  // "pairs"
constexpr std::uint64_t kDarkStream = 0x6461726bULL;    // "dark"

double gaussian(Rng& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log1p(-u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double jittered(double t, const DetectorModel& det, Rng& rng) {
  if (det.jitter_sigma > 0.0) t += det.jitter_sigma * gaussian(rng);
  return std::max(t, 0.0);
}

bool click_before(const ClickRecord& a, const ClickRecord& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  if (a.detector != b.detector) return a.detector < b.detector;
  return a.pair_id < b.pair_id;
}

struct ChunkOutput {
  std::vector<ClickRecord> clicks;
  std::vector<PairOutcome> raw;
  std::vector<ScreenHit> hits;
  std::exception_ptr error;
};

// Runs fn(pair_id, rng, chunk) over all pairs, one RNG substream per chunk.
template <typename PairFn>
std::vector<ChunkOutput> run_chunks(std::uint64_t pairs, std::uint64_t seed,
                                    unsigned threads, PairFn&& fn) {
  const std::uint64_t n_chunks = (pairs + kChunkPairs - 1) / kChunkPairs;
  std::vector<ChunkOutput> chunks(n_chunks);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t c = next++; c < n_chunks; c = next++) {
      ChunkOutput& out = chunks[c];
      try {
        Rng rng = make_substream(seed, kPairStream, c);
        const std::uint64_t first = c * kChunkPairs;
        const std::uint64_t last = std::min(pairs, first + kChunkPairs);
        out.raw.reserve(last - first);
        for (std::uint64_t id = first; id < last; ++id) fn(id, rng, out);
      } catch (...) {
        out.error = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(
      std::min<std::uint64_t>(threads, std::max<std::uint64_t>(n_chunks, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  for (const auto& c : chunks)
    if (c.error) std::rethrow_exception(c.error);
  return chunks;
}

void add_dark_counts(const std::vector<DetectorId>& detectors,
                     const DetectorModel& det, std::uint64_t seed,
                     double duration, const ScreenGrid* grid,
                     std::vector<ClickRecord>& clicks) {
  if (det.dark_rate <= 0.0) return;
  for (DetectorId d : detectors) {
    Rng rng = make_substream(seed, kDarkStream, static_cast<std::uint64_t>(d));
    double t = 0.0;
    while (true) {
      t += -std::log1p(-uniform01(rng)) / det.dark_rate;
      if (t >= duration) break;
      ClickRecord c{d, t, std::nullopt, std::nullopt};
      if (d == DetectorId::Screen && grid)
        c.screen_x = grid->x_min + uniform01(rng) * (grid->x_max - grid->x_min);
      clicks.push_back(c);
    }
  }
}

template <typename Result>
void gather(std::vector<ChunkOutput>& chunks, Result& result) {
  for (auto& c : chunks) {
    result.clicks.insert(result.clicks.end(), c.clicks.begin(), c.clicks.end());
    result.raw.insert(result.raw.end(), c.raw.begin(), c.raw.end());
  }
}

void emit_lower(std::uint64_t id, const PairOutcome& o, double emission,
                const DetectorModel& det, Rng& rng,
                std::vector<ClickRecord>& clicks) {
  if (!bernoulli(rng, det.efficiency)) return;
  clicks.push_back({lower_detector(o.lower),
                    jittered(emission + det.lower_delay, det, rng), id,
                    std::nullopt});
}

}  // namespace

void DetectorModel::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0))
    throw std::invalid_argument("detector efficiency must be in [0, 1]");
  if (!(dark_rate >= 0.0)) throw std::invalid_argument("dark_rate must be >= 0");
  if (!(jitter_sigma >= 0.0))
    throw std::invalid_argument("jitter_sigma must be >= 0");
  if (!(coincidence_window > 0.0))
    throw std::invalid_argument("coincidence_window must be > 0");
  if (!(pair_rate > 0.0)) throw std::invalid_argument("pair_rate must be > 0");
  if (!(lower_delay >= 0.0))
    throw std::invalid_argument("lower_delay must be >= 0");
}

DetectorModel detector_preset(std::string_view name) {
  DetectorModel d;
  if (name == "ideal") return d;
  if (name == "spad") {
    d.efficiency = 0.5;
    d.jitter_sigma = 50e-12;
    d.dark_rate = 100.0;
    d.coincidence_window = 1e-9;
    return d;
  }
  if (name == "mkid") {
    d.efficiency = 0.8;
    d.jitter_sigma = 100e-9;
    d.dark_rate = 1.0;
    d.coincidence_window = 1e-6;
    return d;
  }
  throw std::invalid_argument("unknown detector preset '" + std::string(name) +
                              "'");
}

std::vector<std::string_view> detector_preset_names() {
  return {"ideal", "spad", "mkid"};
}

std::string_view to_string(DetectorId d) {
  switch (d) {
    case DetectorId::U1: return "U1";
    case DetectorId::U2: return "U2";
    case DetectorId::U3: return "U3";
    case DetectorId::U4: return "U4";
    case DetectorId::D1: return "D1";
    case DetectorId::D2: return "D2";
    case DetectorId::D3: return "D3";
    case DetectorId::D4: return "D4";
    case DetectorId::Screen: return "Screen";
  }
  return "?";
}

DetectorId parse_detector(std::string_view name) {
  for (auto d : {DetectorId::U1, DetectorId::U2, DetectorId::U3, DetectorId::U4,
                 DetectorId::D1, DetectorId::D2, DetectorId::D3, DetectorId::D4,
                 DetectorId::Screen})
    if (to_string(d) == name) return d;
  throw std::invalid_argument("unknown detector '" + std::string(name) + "'");
}

bool is_upper(DetectorId d) {
  return d == DetectorId::U1 || d == DetectorId::U2 || d == DetectorId::U3 ||
         d == DetectorId::U4 || d == DetectorId::Screen;
}

DetectorId upper_detector(SideOutcome o) {
  switch (o) {
    case SideOutcome::P1: return DetectorId::U1;
    case SideOutcome::P2: return DetectorId::U2;
    case SideOutcome::E3: return DetectorId::U3;
    case SideOutcome::E4: return DetectorId::U4;
    case SideOutcome::D1Click: break;
  }
  throw IllegalBasis("D1Click cannot occur on the upper arm");
}

DetectorId lower_detector(SideOutcome o) {
  switch (o) {
    case SideOutcome::P1: return DetectorId::D1;
    case SideOutcome::P2: return DetectorId::D2;
    case SideOutcome::E3: return DetectorId::D3;
    case SideOutcome::E4: return DetectorId::D4;
    case SideOutcome::D1Click: return DetectorId::D1;
  }
  return DetectorId::D1;
}

std::optional<SideOutcome> click_outcome(DetectorId d, Basis lower_basis) {
  switch (d) {
    case DetectorId::U1: return SideOutcome::P1;
    case DetectorId::U2: return SideOutcome::P2;
    case DetectorId::U3: return SideOutcome::E3;
    case DetectorId::U4: return SideOutcome::E4;
    case DetectorId::D1:
      return lower_basis == Basis::WhichWay ? SideOutcome::P1
                                            : SideOutcome::D1Click;
    case DetectorId::D2: return SideOutcome::P2;
    case DetectorId::D3: return SideOutcome::E3;
    case DetectorId::D4: return SideOutcome::E4;
    case DetectorId::Screen: return std::nullopt;
  }
  return std::nullopt;
}

std::vector<DetectorId> active_detectors(const MeasurementConfig& config) {
  std::vector<DetectorId> out;
  if (config.screen)
    out.push_back(DetectorId::Screen);
  else if (config.upper_basis == Basis::WhichWay)
    out.insert(out.end(), {DetectorId::U1, DetectorId::U2});
  else
    out.insert(out.end(), {DetectorId::U3, DetectorId::U4});
  switch (config.lower_basis) {
    case Basis::WhichWay:
      out.insert(out.end(), {DetectorId::D1, DetectorId::D2});
      break;
    case Basis::Eraser:
      // A wired D1 sits in the beam line even while it is switched off.
      if (config.feedback) out.push_back(DetectorId::D1);
      out.insert(out.end(), {DetectorId::D3, DetectorId::D4});
      break;
    case Basis::HybridD1:
      out.insert(out.end(), {DetectorId::D1, DetectorId::D3, DetectorId::D4});
      break;
  }
  return out;
}

RunResult run_experiment(const MeasurementConfig& config, const ModelKind& model,
                         const DetectorModel& det, unsigned threads) {
  config.validate();
  det.validate();
  auto chunks = run_chunks(
      config.pair_count, config.seed, threads,
      [&](std::uint64_t id, Rng& rng, ChunkOutput& out) {
        const PairOutcome o = simulate_pair(model, config, rng, det.efficiency);
        const double emission = static_cast<double>(id) / det.pair_rate;
        const bool upper_hit =
            o.upper_detected ? *o.upper_detected : bernoulli(rng, det.efficiency);
        if (upper_hit)
          out.clicks.push_back({upper_detector(o.upper),
                                jittered(emission, det, rng), id,
                                std::nullopt});
        emit_lower(id, o, emission, det, rng, out.clicks);
        out.raw.push_back(o);
      });
  RunResult result;
  gather(chunks, result);
  const double duration =
      static_cast<double>(config.pair_count) / det.pair_rate + det.lower_delay;
  add_dark_counts(active_detectors(config), det, config.seed, duration, nullptr,
                  result.clicks);
  std::sort(result.clicks.begin(), result.clicks.end(), click_before);
  return result;
}

CoincidenceResult match_coincidences(std::vector<ClickRecord> clicks,
                                     double window, double lower_delay) {
  if (!(window > 0.0))
    throw std::invalid_argument("coincidence window must be > 0");
  std::sort(clicks.begin(), clicks.end(), click_before);
  std::vector<const ClickRecord*> upper;
  std::vector<const ClickRecord*> lower;
  for (const auto& c : clicks) (is_upper(c.detector) ? upper : lower).push_back(&c);
  // Lower clicks are already in time order; shifting by a constant keeps it.
  std::vector<double> lower_t(lower.size());
  for (std::size_t i = 0; i < lower.size(); ++i)
    lower_t[i] = lower[i]->timestamp - lower_delay;
  std::vector<bool> used(lower.size(), false);

  CoincidenceResult result;
  std::size_t start = 0;
  for (const ClickRecord* u : upper) {
    const double t = u->timestamp;
    while (start < lower.size() && lower_t[start] < t - window) ++start;
    std::size_t best = lower.size();
    double best_dt = 0.0;
    for (std::size_t j = start; j < lower.size() && lower_t[j] <= t + window;
         ++j) {
      if (used[j]) continue;
      const double dt = lower_t[j] - t;
      if (best == lower.size() || std::abs(dt) < std::abs(best_dt)) {
        best = j;
        best_dt = dt;
      }
    }
    if (best == lower.size()) {
      ++result.unmatched_upper;
      continue;
    }
    used[best] = true;
    result.coincidences.push_back({*u, *lower[best], best_dt});
  }
  for (bool b : used)
    if (!b) ++result.unmatched_lower;
  return result;
}

ScreenRunResult run_screen_experiment(const MeasurementConfig& config,
                                      const ModelKind& model,
                                      const SlitGeometry& geometry,
                                      const DetectorModel& det,
                                      unsigned threads) {
  config.validate();
  det.validate();
  geometry.validate();
  if (!config.screen)
    throw std::invalid_argument("screen experiment needs a screen configuration");
  if (config.feedback)
    throw std::invalid_argument("screen experiment has no feedback variant");
  if (model.kind != ModelKind::Kind::QM &&
      model.kind != ModelKind::Kind::LocalRealistBall)
    throw UnsupportedModel(describe(model) + " has no screen mode");

  ScreenRunResult result;
  result.grid = default_grid(geometry);
  const JointState state = make_entangled_state();

  // QM: one sampler per possible lower outcome, from the collapsed upper arm.
  std::map<SideOutcome, ScreenSampler> conditioned;
  // Ball model: hit position from the fringe-free pattern, then path and tag
  // drawn given the hit so that both conditional pictures come out right.
  std::optional<ScreenSampler> pooled;
  std::vector<double> xs, p_path1, p_tag3;
  if (model.kind == ModelKind::Kind::QM) {
    for (auto o : kAllOutcomes) {
      if (!outcome_legal(config.lower_basis, o)) continue;
      const ArmState arm =
          conditional_arm(state, Side::Lower, config.lower_basis, o);
      conditioned.emplace(o, ScreenSampler(arm_pattern(geometry, arm,
                                                       result.grid)));
    }
  } else {
    const ScreenPattern total = conditioned_pattern(
        geometry, ScreenCondition::NoCondition, result.grid);
    pooled.emplace(total);
    xs = total.xs;
    p_path1.resize(xs.size());
    p_tag3.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double i1 = condition_intensity(geometry, ScreenCondition::OnD1, xs[i]);
      const double i2 = condition_intensity(geometry, ScreenCondition::OnD2, xs[i]);
      const double i3 = condition_intensity(geometry, ScreenCondition::OnD3, xs[i]);
      const double sum = i1 + i2;
      p_path1[i] = sum > 0.0 ? i1 / sum : 0.5;
      p_tag3[i] = sum > 0.0 ? i3 / sum : 0.5;
    }
  }

  auto chunks = run_chunks(
      config.pair_count, config.seed, threads,
      [&](std::uint64_t id, Rng& rng, ChunkOutput& out) {
        PairOutcome o;
        o.resolved_lower_basis = config.lower_basis;
        double x = 0.0;
        if (model.kind == ModelKind::Kind::QM) {
          const Collapse c =
              measure_arm(state, Side::Lower, config.lower_basis, rng);
          o.lower = c.outcome;
          x = conditioned.at(c.outcome)(rng);
        } else {
          const std::size_t bin = pooled->sample_bin(rng);
          x = xs[bin];
          HiddenVariable h;
          h.path = bernoulli(rng, p_path1[bin]) ? 1 : 2;
          h.splitter_tag = bernoulli(rng, p_tag3[bin]) ? 3 : 4;
          o.hidden = h;
          o.lower = realist_outcome(config.lower_basis, h);
        }
        o.upper = (o.hidden && o.hidden->path == 2) ? SideOutcome::P2
                                                    : SideOutcome::P1;
        const double emission = static_cast<double>(id) / det.pair_rate;
        if (bernoulli(rng, det.efficiency))
          out.clicks.push_back(
              {DetectorId::Screen, jittered(emission, det, rng), id, x});
        emit_lower(id, o, emission, det, rng, out.clicks);
        out.hits.push_back({id, x, o.lower});
        out.raw.push_back(o);
      });
  gather(chunks, result);
  for (auto& c : chunks)
    result.hits.insert(result.hits.end(), c.hits.begin(), c.hits.end());
  const double duration =
      static_cast<double>(config.pair_count) / det.pair_rate + det.lower_delay;
  add_dark_counts(active_detectors(config), det, config.seed, duration,
                  &result.grid, result.clicks);
  std::sort(result.clicks.begin(), result.clicks.end(), click_before);
  return result;
}

}  // namespace dcqe
