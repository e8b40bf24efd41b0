#include "dcqe/stats.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace dcqe {

JointTable JointTable::filtered(
    const std::function<bool(SideOutcome, SideOutcome)>& keep) const {
  JointTable out;
  counts.for_each([&](SideOutcome u, SideOutcome l, std::uint64_t n) {
    if (n > 0 && keep(u, l)) out.add(u, l, n);
  });
  return out;
}

double JointTable::frequency(SideOutcome upper, SideOutcome lower) const {
  return total == 0 ? 0.0
                    : static_cast<double>(counts(upper, lower)) /
                          static_cast<double>(total);
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::FavorsQM: return "FavorsQM";
    case Verdict::FavorsRival: return "FavorsRival";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

Verdict parse_verdict(std::string_view name) {
  for (auto v : {Verdict::FavorsQM, Verdict::FavorsRival, Verdict::Inconclusive})
    if (to_string(v) == name) return v;
  throw std::invalid_argument("unknown verdict '" + std::string(name) + "'");
}

Basis d1_reading(const MeasurementConfig& config) {
  if (config.feedback) return Basis::HybridD1;
  return config.lower_basis;
}

std::optional<OutcomePair> coincidence_outcome(const CoincidenceRecord& c,
                                               Basis d1_basis) {
  const auto u = click_outcome(c.upper.detector, d1_basis);
  const auto l = click_outcome(c.lower.detector, d1_basis);
  if (!u || !l) return std::nullopt;
  return OutcomePair{*u, *l};
}

JointTable build_table(std::span<const CoincidenceRecord> coincidences,
                       const MeasurementConfig& config) {
  const Basis reading = d1_reading(config);
  JointTable t;
  for (const auto& c : coincidences)
    if (const auto o = coincidence_outcome(c, reading)) t.add(o->first, o->second);
  return t;
}

JointTable build_table(std::span<const PairOutcome> raw) {
  JointTable t;
  for (const auto& o : raw) t.add(o.upper, o.lower);
  return t;
}

std::vector<OutcomePair> outcome_sequence(
    std::span<const CoincidenceRecord> coincidences,
    const MeasurementConfig& config) {
  const Basis reading = d1_reading(config);
  std::vector<OutcomePair> out;
  out.reserve(coincidences.size());
  for (const auto& c : coincidences)
    if (const auto o = coincidence_outcome(c, reading)) out.push_back(*o);
  return out;
}

Grouping default_grouping() {
  return [](SideOutcome o) -> std::optional<int> {
    switch (o) {
      case SideOutcome::P1:
      case SideOutcome::E3: return 1;
      case SideOutcome::P2:
      case SideOutcome::E4: return -1;
      case SideOutcome::D1Click: return std::nullopt;
    }
    return std::nullopt;
  };
}

double binary_correlation(const JointTable& table, const Grouping& grouping) {
  double n = 0, sx = 0, sy = 0, sxy = 0;
  table.counts.for_each([&](SideOutcome u, SideOutcome l, std::uint64_t c) {
    if (c == 0) return;
    const auto x = grouping(u);
    const auto y = grouping(l);
    if (!x || !y) return;
    const auto w = static_cast<double>(c);
    n += w;
    sx += w * *x;
    sy += w * *y;
    sxy += w * *x * *y;
  });
  if (n == 0) throw DegenerateMarginal("no outcomes left after grouping");
  const double mx = sx / n, my = sy / n;
  // For +-1 variables E[x^2] = 1.
  const double vx = 1.0 - mx * mx, vy = 1.0 - my * my;
  if (vx <= 1e-15 || vy <= 1e-15)
    throw DegenerateMarginal("a marginal is constant");
  return std::clamp((sxy / n - mx * my) / std::sqrt(vx * vy), -1.0, 1.0);
}

int pairs_to_significance(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must be in (0, 1)");
  int n = static_cast<int>(std::ceil(std::log2(1.0 / alpha)));
  n = std::max(n, 1);
  while (n > 1 && std::ldexp(1.0, -(n - 1)) <= alpha) --n;
  while (std::ldexp(1.0, -n) > alpha) ++n;
  return n;
}

TestReport sequence_test(std::span<const OutcomePair> outcomes, double alpha,
                         double qm_e3e3) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must be in (0, 1)");
  if (!(qm_e3e3 > 0.0 && qm_e3e3 < 1.0))
    throw std::invalid_argument("qm_e3e3 must be in (0, 1)");
  const OutcomePair e3e3{SideOutcome::E3, SideOutcome::E3};
  TestReport r;
  r.test_name = "sequence";
  r.n_pairs = outcomes.size();
  const auto first_other = std::find_if(
      outcomes.begin(), outcomes.end(), [&](const auto& o) { return o != e3e3; });
  const auto prefix =
      static_cast<std::uint64_t>(std::distance(outcomes.begin(), first_other));
  r.statistic = static_cast<double>(prefix);
  r.p_value = std::pow(qm_e3e3, static_cast<double>(prefix));

  // Length of the all-(E3,E3) run at which p first drops to alpha.
  const auto needed = static_cast<std::uint64_t>(
      std::ceil(std::log(alpha) / std::log(qm_e3e3) - 1e-12));
  if (first_other != outcomes.end()) {
    r.log_likelihood_ratio = kNegInfinity;
    r.verdict = Verdict::FavorsQM;
    r.decided_at = prefix >= needed ? needed : prefix + 1;
  } else {
    r.log_likelihood_ratio = -static_cast<double>(prefix) * std::log(qm_e3e3);
    if (r.p_value <= alpha) {
      r.verdict = Verdict::FavorsRival;
      r.decided_at = needed;
    }
  }
  return r;
}

double chi_square_sf(double statistic, int dof) {
  if (dof <= 0) return statistic > 0.0 ? 0.0 : 1.0;
  if (statistic <= 0.0) return 1.0;
  if (!std::isfinite(statistic)) return 0.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

TestReport chi_square_test(const JointTable& table,
                           const ModelPrediction& predicted, double alpha) {
  if (table.total == 0) throw InsufficientData("empty table");
  TestReport r;
  r.test_name = "chi_square";
  r.n_pairs = table.total;
  const double n = static_cast<double>(table.total);
  const bool null_is_qm = predicted.model.kind == ModelKind::Kind::QM ||
                          predicted.model.kind == ModelKind::Kind::Superdeterministic;
  const Verdict reject = null_is_qm ? Verdict::FavorsRival : Verdict::FavorsQM;

  struct Cell {
    double observed, expected;
  };
  std::vector<Cell> cells;
  Cell pooled{0.0, 0.0};
  bool impossible = false;
  std::size_t predicted_cells = 0;
  for (auto u : kAllOutcomes) {
    for (auto l : kAllOutcomes) {
      const double p = predicted.table(u, l);
      const auto obs = static_cast<double>(table.counts(u, l));
      if (p <= 0.0) {
        if (obs > 0.0) impossible = true;
        continue;
      }
      ++predicted_cells;
      const Cell c{obs, n * p};
      if (c.expected < 5.0) {
        pooled.observed += c.observed;
        pooled.expected += c.expected;
      } else {
        cells.push_back(c);
      }
    }
  }
  if (impossible) {
    r.statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    r.log_likelihood_ratio = null_is_qm ? 0.0 : kNegInfinity;
    r.verdict = reject;
    return r;
  }
  if (pooled.expected > 0.0) {
    if (pooled.expected >= 5.0 || cells.empty()) {
      cells.push_back(pooled);
    } else {
      auto smallest = std::min_element(
          cells.begin(), cells.end(),
          [](const Cell& a, const Cell& b) { return a.expected < b.expected; });
      smallest->observed += pooled.observed;
      smallest->expected += pooled.expected;
    }
  }
  if (cells.size() < 2) {
    if (predicted_cells >= 2)
      throw InsufficientData("pooling left fewer than two cells");
    // A point prediction that the data matches exactly.
    r.statistic = 0.0;
    r.p_value = 1.0;
    r.degrees_of_freedom = 0;
    r.verdict = Verdict::Inconclusive;
    return r;
  }
  double chi2 = 0.0;
  for (const auto& c : cells) {
    const double d = c.observed - c.expected;
    chi2 += d * d / c.expected;
  }
  const int dof = static_cast<int>(cells.size()) - 1;
  r.statistic = chi2;
  r.degrees_of_freedom = dof;
  r.p_value = chi_square_sf(chi2, dof);
  r.verdict = r.p_value < alpha ? reject : Verdict::Inconclusive;
  return r;
}

double ks_statistic_uniform(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = std::clamp(samples[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f,
                  f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

OutcomeTable<std::optional<double>> cell_z_scores(const JointTable& table,
                                                  const Distribution& expected) {
  OutcomeTable<std::optional<double>> z;
  const double n = static_cast<double>(table.total);
  expected.for_each([&](SideOutcome u, SideOutcome l, double p) {
    if (p <= 0.0 || p >= 1.0 || n == 0.0) return;
    z(u, l) = (static_cast<double>(table.counts(u, l)) - n * p) /
              std::sqrt(n * p * (1.0 - p));
  });
  return z;
}

namespace {

constexpr std::uint64_t kSweepStream = 0x7377656570ULL;  // "sweep"

bool is_strict_retro(const ModelKind& m) {
  return m.kind == ModelKind::Kind::RetrocausalConsistent &&
         m.retro_policy == RetroPolicy::Strict;
}

// Emitted pair index (1-based) at which a coincidence happened.
double pair_index(const CoincidenceRecord& c, double pair_rate) {
  if (c.upper.pair_id) return static_cast<double>(*c.upper.pair_id) + 1.0;
  return std::floor(c.upper.timestamp * pair_rate) + 1.0;
}

// Pairs needed in one trial, or nullopt if the budget ran out first.
std::optional<double> sweep_trial(const PowerSweepRequest& req,
                                  const DetectorModel& det,
                                  std::uint64_t seed) {
  if (det.efficiency <= 0.0 && det.dark_rate <= 0.0) return std::nullopt;
  const bool sequential =
      req.config.feedback &&
      (is_strict_retro(req.rival) || is_strict_retro(req.data_model));
  std::optional<ModelPrediction> rival_table;
  if (!sequential) rival_table = declared_distribution(req.rival, req.config);

  MeasurementConfig cfg = req.config;
  cfg.seed = seed;
  std::uint64_t n = std::min<std::uint64_t>(64, req.max_pairs);
  while (true) {
    cfg.pair_count = n;
    const RunResult run = run_experiment(cfg, req.data_model, det, 1);
    const auto matched =
        match_coincidences(run.clicks, det.coincidence_window, det.lower_delay);
    if (sequential) {
      const auto seq = outcome_sequence(matched.coincidences, cfg);
      const TestReport r = sequence_test(seq, req.alpha);
      // The rival is rejected by a violation if it is the strict model, by a
      // long enough (E3,E3) run if it is QM.
      const Verdict rejecting =
          is_strict_retro(req.rival) ? Verdict::FavorsQM : Verdict::FavorsRival;
      if (r.decided_at) {
        if (r.verdict != rejecting) return std::nullopt;
        // Coincidence list and outcome sequence differ only by screen clicks,
        // which feedback configurations never have.
        return pair_index(matched.coincidences[*r.decided_at - 1],
                          det.pair_rate);
      }
    } else {
      const JointTable t = build_table(matched.coincidences, cfg);
      if (t.total > 0) {
        try {
          const TestReport r = chi_square_test(t, *rival_table, req.alpha);
          if (r.p_value <= req.alpha) return static_cast<double>(n);
        } catch (const InsufficientData&) {
        }
      }
    }
    if (n >= req.max_pairs) return std::nullopt;
    n = std::min(2 * n, req.max_pairs);
  }
}

PowerSweepRow summarize(double eta, double dark,
                        const std::vector<std::optional<double>>& results) {
  PowerSweepRow row;
  row.efficiency = eta;
  row.dark_rate = dark;
  row.trials = static_cast<std::uint32_t>(results.size());
  std::vector<double> sorted;
  for (const auto& r : results) {
    if (r)
      sorted.push_back(*r);
    else
      ++row.unreachable;
  }
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = results.size();
  // Unreachable trials rank above every finite count.
  auto order_stat = [&](std::size_t k) -> std::optional<double> {
    if (k >= sorted.size()) return std::nullopt;
    return sorted[k];
  };
  if (m > 0) {
    const std::size_t lo_k = (m - 1) / 2;
    const std::size_t hi_k = m / 2;
    const auto a = order_stat(lo_k), b = order_stat(hi_k);
    if (a && b) row.median = 0.5 * (*a + *b);
    const double half = 1.96 * std::sqrt(static_cast<double>(m)) / 2.0;
    const auto lo_i = static_cast<std::ptrdiff_t>(
        std::floor(static_cast<double>(m) / 2.0 - half));
    const auto hi_i = static_cast<std::ptrdiff_t>(
        std::ceil(static_cast<double>(m) / 2.0 + half));
    row.median_lo = order_stat(static_cast<std::size_t>(std::max<std::ptrdiff_t>(lo_i, 0)));
    row.median_hi = order_stat(static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(hi_i, static_cast<std::ptrdiff_t>(m) - 1)));
  }
  if (!sorted.empty()) {
    const double k = static_cast<double>(sorted.size());
    const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / k;
    double var = 0.0;
    for (double v : sorted) var += (v - mean) * (v - mean);
    var = sorted.size() > 1 ? var / (k - 1.0) : 0.0;
    const double se = std::sqrt(var / k);
    row.mean = mean;
    row.mean_lo = mean - 1.96 * se;
    row.mean_hi = mean + 1.96 * se;
  }
  return row;
}

}  // namespace

std::vector<PowerSweepRow> power_sweep(const PowerSweepRequest& req) {
  req.config.validate();
  req.base_detector.validate();
  if (!(req.alpha > 0.0 && req.alpha < 1.0))
    throw std::invalid_argument("alpha must be in (0, 1)");
  if (req.trials == 0) throw std::invalid_argument("trials must be >= 1");
  if (req.max_pairs == 0) throw std::invalid_argument("max_pairs must be >= 1");

  struct Point {
    double eta, dark;
  };
  std::vector<Point> grid;
  for (double eta : req.efficiencies)
    for (double dark : req.dark_rates) grid.push_back({eta, dark});

  const std::size_t jobs = grid.size() * req.trials;
  std::vector<std::optional<double>> results(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const std::size_t g = j / req.trials;
      const std::size_t t = j % req.trials;
      DetectorModel det = req.base_detector;
      det.efficiency = grid[g].eta;
      det.dark_rate = grid[g].dark;
      try {
        det.validate();
        results[j] = sweep_trial(req, det,
                                 substream_seed(req.seed, kSweepStream + g, t));
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  unsigned threads = req.threads == 0
                         ? std::max(1u, std::thread::hardware_concurrency())
                         : req.threads;
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<PowerSweepRow> rows;
  rows.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<std::optional<double>> slice(
        results.begin() + static_cast<std::ptrdiff_t>(g * req.trials),
        results.begin() + static_cast<std::ptrdiff_t>((g + 1) * req.trials));
    rows.push_back(summarize(grid[g].eta, grid[g].dark, slice));
  }
  return rows;
}

}  // namespace dcqe
