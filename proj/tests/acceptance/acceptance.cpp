// Runs the nine acceptance checks and prints one PASS/FAIL line for each.
// Exit status is nonzero when any check fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dcqe/app.hpp"
#include "dcqe/quantum.hpp"
#include "dcqe/screen.hpp"
#include "dcqe/stats.hpp"

using namespace dcqe;
namespace fs = std::filesystem;

namespace {

using O = SideOutcome;
using C = std::complex<double>;

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double within_sigma(double count, double n, double p) {
  const double sd = std::sqrt(n * p * (1.0 - p));
  if (sd == 0.0) return count == n * p ? 0.0 : INFINITY;
  return std::abs(count - n * p) / sd;
}

RunResult ideal_run(ExperimentName e, const ModelKind& m, std::uint64_t pairs,
                    std::uint64_t seed) {
  MeasurementConfig cfg = catalog(e);
  cfg.pair_count = pairs;
  cfg.seed = seed;
  return run_experiment(cfg, m, DetectorModel{});
}

// Table read back from the click stream, the way an experimenter sees it.
JointTable observed_table(ExperimentName e, const RunResult& r) {
  const DetectorModel det;
  const auto m = match_coincidences(r.clicks, det.coincidence_window, det.lower_delay);
  return build_table(m.coincidences, catalog(e));
}

bool not_d1(SideOutcome, SideOutcome l) { return l != O::D1Click; }

// --- 1 -------------------------------------------------------------------

void basis_change(Check& c) {
  const JointState s = make_entangled_state();
  const JointState both = eraser_rotate(eraser_rotate(s, Side::Upper), Side::Lower);
  // Independent oracle: H (x) H applied to the 4-vector by hand.
  const double r = 1.0 / std::sqrt(2.0);
  const C in[4] = {s.amp(1, 1), s.amp(1, 2), s.amp(2, 1), s.amp(2, 2)};
  const double h[2][2] = {{r, r}, {r, -r}};
  double worst = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      C acc = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) acc += h[a][i] * h[b][j] * in[2 * i + j];
      worst = std::max(worst, std::abs(acc - both.amp(a + 1, b + 1)));
    }
  const Distribution d = joint_distribution(s, Basis::Eraser, Basis::Eraser);
  double dev = 0.0;
  d.for_each([&](O u, O l, double p) {
    const bool diag = (u == O::E3 && l == O::E3) || (u == O::E4 && l == O::E4);
    dev = std::max(dev, std::abs(p - (diag ? 0.5 : 0.0)));
  });
  c.require(worst <= 1e-12, "rotated amplitudes");
  c.require(dev <= 1e-12, "eraser table");
  c.detail << "max deviation " << std::max(worst, dev);
}

// --- 2 -------------------------------------------------------------------

void no_signalling(Check& c) {
  double analytic = 0.0, worst_sigma = 0.0;
  const std::uint64_t n = 100000;
  std::uint64_t seed = 200;
  for (const auto& m : {ModelKind::qm(), ModelKind::superdeterministic()}) {
    for (auto ub : {Basis::WhichWay, Basis::Eraser}) {
      std::vector<MeasurementConfig> settings;
      for (auto lb : {Basis::WhichWay, Basis::Eraser, Basis::HybridD1}) {
        MeasurementConfig cfg;
        cfg.upper_basis = ub;
        cfg.lower_basis = lb;
        settings.push_back(cfg);
      }
      if (ub == Basis::Eraser) settings.push_back(catalog(ExperimentName::E5));
      const Distribution ref = declared_distribution(m, settings.front()).table;
      for (auto cfg : settings) {
        const Distribution t = declared_distribution(m, cfg).table;
        for (auto u : kAllOutcomes)
          analytic = std::max(analytic, std::abs(t.upper_marginal(u) - ref.upper_marginal(u)));
        cfg.pair_count = n;
        cfg.seed = ++seed;
        const JointTable got = build_table(run_experiment(cfg, m, DetectorModel{}).raw);
        for (auto u : kAllOutcomes) {
          const double p = ref.upper_marginal(u);
          worst_sigma = std::max(
              worst_sigma, within_sigma(static_cast<double>(got.counts.upper_marginal(u)),
                                        static_cast<double>(n), p));
        }
      }
    }
  }
  c.require(analytic <= 1e-12, "analytic marginals");
  c.require(worst_sigma <= 3.0, "sampled marginals within 3 sigma");
  c.detail << "analytic max diff " << analytic << ", worst sampled cell "
           << worst_sigma << " sigma";
}

// --- 3 -------------------------------------------------------------------

void local_realist_equivalence(Check& c) {
  double worst = 0.0;
  for (auto e : {ExperimentName::E1, ExperimentName::E2, ExperimentName::E3}) {
    const auto ball = declared_distribution(ModelKind::ball(), catalog(e)).table;
    const auto qm = declared_distribution(ModelKind::qm(), catalog(e)).table;
    ball.for_each([&](O u, O l, double p) { worst = std::max(worst, std::abs(p - qm(u, l))); });
  }
  c.require(worst <= 1e-12, "ball table equals QM table");
  c.detail << "max cell difference " << worst << " over E1-E3";
}

// --- 4 -------------------------------------------------------------------

void hybrid_discrimination(Check& c) {
  const auto qm_t = observed_table(ExperimentName::E4,
                                   ideal_run(ExperimentName::E4, ModelKind::qm(), 100000, 41))
                        .filtered(not_d1);
  const auto ball_t = observed_table(ExperimentName::E4,
                                     ideal_run(ExperimentName::E4, ModelKind::ball(), 100000, 42))
                          .filtered(not_d1);
  const double r_qm = binary_correlation(qm_t, default_grouping());
  const double r_ball = binary_correlation(ball_t, default_grouping());
  c.require(std::abs(r_ball - 1.0) <= 0.01, "ball correlation 1.00 +- 0.01");
  c.require(std::abs(r_qm) <= 0.02, "QM correlation 0.00 +- 0.02");

  // First 1000 conditioned pairs of a fresh QM run.
  const auto run = ideal_run(ExperimentName::E4, ModelKind::qm(), 4000, 43);
  JointTable small;
  for (const auto& o : run.raw) {
    if (small.total == 1000) break;
    if (o.lower != O::D1Click) small.add(o.upper, o.lower);
  }
  const auto ball_pred =
      declared_distribution(ModelKind::ball(), catalog(ExperimentName::E4)).conditioned(not_d1);
  const TestReport r = chi_square_test(small, ball_pred);
  c.require(small.total == 1000, "1000 conditioned pairs");
  c.require(r.p_value < 1e-10, "chi-square rejects the ball model");
  c.detail << "r(QM) " << r_qm << ", r(ball) " << r_ball << ", chi-square p "
           << r.p_value << " at " << small.total << " pairs";
}

// --- 5 -------------------------------------------------------------------

// Sequential Born rule with the wire, written out by hand: measure the upper
// eraser port, collapse, switch D1 on for E4, measure the lower arm.
Distribution feedback_oracle() {
  const double r = 1.0 / std::sqrt(2.0);
  Distribution d;
  for (int port : {3, 4}) {
    const double sign = port == 3 ? 1.0 : -1.0;
    // <port| on the upper arm of (|11> + |22>)/sqrt2 leaves
    // (|1> + sign |2>) / 2 on the lower arm.
    const C l1 = 0.5, l2 = 0.5 * sign;
    const O u = port == 3 ? O::E3 : O::E4;
    if (port == 3) {
      d(u, O::E3) = std::norm(r * (l1 + l2));
      d(u, O::E4) = std::norm(r * (l1 - l2));
    } else {
      d(u, O::D1Click) = std::norm(l1);
      d(u, O::E3) = std::norm(r * l2);
      d(u, O::E4) = std::norm(r * l2);
    }
  }
  return d;
}

void feedback_distribution(Check& c) {
  const Distribution oracle = feedback_oracle();
  const Distribution expected = [] {
    Distribution d;
    d(O::E3, O::E3) = 0.5;
    d(O::E4, O::D1Click) = 0.25;
    d(O::E4, O::E3) = 0.125;
    d(O::E4, O::E4) = 0.125;
    return d;
  }();
  double oracle_dev = 0.0;
  oracle.for_each([&](O u, O l, double p) { oracle_dev = std::max(oracle_dev, std::abs(p - expected(u, l))); });
  const std::uint64_t n = 100000;
  const JointTable t = observed_table(ExperimentName::E5,
                                      ideal_run(ExperimentName::E5, ModelKind::qm(), n, 55));
  double worst = 0.0;
  oracle.for_each([&](O u, O l, double p) {
    worst = std::max(worst, within_sigma(static_cast<double>(t.counts(u, l)),
                                         static_cast<double>(t.total), p));
  });
  c.require(t.total == n, "every pair coincident");
  c.require(oracle_dev <= 1e-12, "oracle table");
  c.require(worst <= 3.0, "cells within 3 sigma");
  c.detail << "oracle deviation " << oracle_dev << ", worst cell " << worst << " sigma";
}

// --- 6 -------------------------------------------------------------------

void retro_strict(Check& c) {
  const auto strict = ModelKind::retro(RetroPolicy::Strict);
  const auto pred = declared_distribution(strict, catalog(ExperimentName::E5)).table;
  const JointTable t = observed_table(ExperimentName::E5,
                                      ideal_run(ExperimentName::E5, strict, 10000, 61));
  c.require(std::abs(pred(O::E3, O::E3) - 1.0) <= 1e-12, "declared P(E3,E3) = 1");
  c.require(t.counts(O::E3, O::E3) == t.total && t.total == 10000, "sampled only (E3,E3)");

  PowerSweepRequest qm_data;
  qm_data.trials = 2000;
  qm_data.seed = 62;
  const PowerSweepRow a = power_sweep(qm_data).front();
  c.require(a.unreachable == 0 && a.mean && a.mean_lo && a.mean_hi,
            "QM data always rejects");
  if (a.mean) {
    c.require(*a.mean_lo <= 2.0 && 2.0 <= *a.mean_hi, "mean pairs consistent with 2");
    c.require(*a.median_lo <= 2.0 && 2.0 <= *a.median_hi, "median CI contains 2");
  }

  PowerSweepRequest retro_data;
  retro_data.data_model = strict;
  retro_data.rival = ModelKind::qm();
  retro_data.trials = 100;
  const PowerSweepRow b = power_sweep(retro_data).front();
  c.require(b.median && *b.median == 20.0 && b.mean && *b.mean == 20.0,
            "retro data decides at exactly 20");
  c.require(pairs_to_significance(1e-6) == 20, "(1/2)^20 < 1e-6 <= (1/2)^19");
  c.detail << "QM data: mean " << (a.mean ? *a.mean : NAN) << " pairs (median "
           << (a.median ? *a.median : NAN) << ", CI [" << (a.median_lo ? *a.median_lo : NAN)
           << ", " << (a.median_hi ? *a.median_hi : NAN) << "]); retro data: "
           << (b.median ? *b.median : NAN) << " pairs";
}

// --- 7 -------------------------------------------------------------------

void fringes(Check& c) {
  const SlitGeometry g;
  const double window = g.first_envelope_zero();
  const double v3 = visibility(conditioned_pattern(g, ScreenCondition::OnD3), window);
  const double v4 = visibility(conditioned_pattern(g, ScreenCondition::OnD4), window);
  c.require(v3 >= 0.999 && v4 >= 0.999, "ideal visibility 1.0");

  double sum_dev = 0.0, peak = 0.0;
  const ScreenGrid grid = default_grid(g);
  for (std::size_t i = 0; i <= 4 * grid.bins; ++i) {
    const double x = grid.x_min + (grid.x_max - grid.x_min) * static_cast<double>(i) /
                                      static_cast<double>(4 * grid.bins);
    const double none = condition_intensity(g, ScreenCondition::NoCondition, x);
    peak = std::max(peak, none);
    sum_dev = std::max(sum_dev, std::abs(condition_intensity(g, ScreenCondition::OnD3, x) +
                                         condition_intensity(g, ScreenCondition::OnD4, x) - none));
  }
  c.require(sum_dev <= 1e-12, "OnD3 + OnD4 equals NoCondition");

  MeasurementConfig cfg = catalog(ExperimentName::E6);
  cfg.pair_count = 100000;
  cfg.seed = 71;
  const ScreenRunResult run = run_screen_experiment(cfg, ModelKind::qm(), g, DetectorModel{});
  std::vector<double> e3, e4, all;
  for (const auto& h : run.hits) {
    all.push_back(h.x);
    (h.lower == O::E3 ? e3 : e4).push_back(h.x);
  }
  const double period = g.fringe_period();
  const double s3 = visibility(histogram_pattern(e3, run.grid, period), window);
  const double s4 = visibility(histogram_pattern(e4, run.grid, period), window);
  const double pooled = visibility(histogram_pattern(all, run.grid, period), window);
  c.require(s3 >= 0.95 && s4 >= 0.95, "sampled conditioned visibility >= 0.95");
  c.require(pooled < 0.05, "pooled visibility < 0.05");
  c.detail << "ideal V " << v3 << " / " << v4 << ", sum deviation " << sum_dev
           << ", sampled V " << s3 << " / " << s4 << ", pooled V " << pooled;
}

// --- 8 -------------------------------------------------------------------

void bomb(Check& c) {
  const auto dud = bomb_probabilities(false);
  const auto live = bomb_probabilities(true);
  c.require(dud[2] == 0.0, "dud never reaches the dark port");
  const double want[3] = {0.5, 0.25, 0.25};
  double exact = 0.0;
  for (int i = 0; i < 3; ++i) exact = std::max(exact, std::abs(live[static_cast<std::size_t>(i)] - want[i]));
  c.require(exact <= 1e-12, "live probabilities 1/2, 1/4, 1/4");

  const int n = 100000;
  Rng rng(81);
  std::array<double, 3> counts{}, dud_counts{};
  for (int i = 0; i < n; ++i) {
    ++counts[static_cast<std::size_t>(bomb_test(true, rng))];
    ++dud_counts[static_cast<std::size_t>(bomb_test(false, rng))];
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, within_sigma(counts[i], n, want[i]));
  c.require(dud_counts[2] == 0.0, "sampled dud never dark");
  c.require(worst <= 3.0, "live counts within 3 sigma");
  c.detail << "live counts " << counts[0] << "/" << counts[1] << "/" << counts[2]
           << " (worst " << worst << " sigma), dud dark " << dud_counts[2];
}

// --- 9 -------------------------------------------------------------------

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dcqe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void reproducibility(Check& c) {
  const fs::path root = fs::temp_directory_path() / ("dcqe_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "run.ini";
  std::ofstream(cfg) << "[experiment]\nname = E5\npairs = 50000\nseed = 9\n"
                        "[detector]\npreset = spad\n"
                        "[sweep]\ntrials = 100\n"
                        "[fringe]\nsamples = 20000\n";
  std::size_t files = 0;
  bool identical = true, ran = true;
  for (const char* threads : {"1", "8"}) {
    const fs::path out = root / threads;
    const std::string t = std::string("experiment.threads=") + threads;
    ran = ran && cli({"run", "--config", cfg.string(), "--out", out.string(), "--quiet", "--set", t}) == 0;
    ran = ran && cli({"analyze", out.string(), "--quiet"}) == 0;
    ran = ran && cli({"fringe", "--config", cfg.string(), "--out", out.string(), "--quiet", "--set", t,
                      "--condition", "all"}) == 0;
    ran = ran && cli({"sweep", "--config", cfg.string(), "--out", out.string(), "--quiet", "--set", t}) == 0;
  }
  for (const auto& entry : fs::directory_iterator(root / "1")) {
    ++files;
    const auto other = root / "8" / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
      identical = false;
      c.detail << " differs: " << entry.path().filename().string();
    }
  }
  fs::remove_all(root);
  c.require(ran, "all commands succeed");
  c.require(identical && files >= 8, "outputs byte-identical across thread counts");

  const auto e5 = catalog(ExperimentName::E5);
  const auto pred = declared_distribution(ModelKind::qm(), e5);
  std::vector<double> ps;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    Rng rng(substream_seed(90, 0, s));
    JointTable t;
    for (int i = 0; i < 2000; ++i) {
      const PairOutcome o = simulate_pair(ModelKind::qm(), e5, rng);
      t.add(o.upper, o.lower);
    }
    ps.push_back(chi_square_test(t, pred).p_value);
  }
  const double ks_p = ks_p_value(ks_statistic_uniform(ps), ps.size());
  c.require(ks_p > 0.01, "null p-values uniform at the 1% level");
  c.detail << files << " files identical for 1 and 8 threads, calibration KS p " << ks_p;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 = none
  std::function<void(Check&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "basis-change identity", 1e-3, basis_change},
      {2, "no-signalling", 10.0, no_signalling},
      {3, "local-realist equivalence on E1-E3", 0.0, local_realist_equivalence},
      {4, "E4 discrimination", 30.0, hybrid_discrimination},
      {5, "E5 feedback distribution under QM", 0.0, feedback_distribution},
      {6, "strict retrocausal falsification", 1.0, retro_strict},
      {7, "fringe suite", 30.0, fringes},
      {8, "bomb-test table", 0.0, bomb},
      {9, "reproducibility and calibration", 0.0, reproducibility},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.budget_s > 0.0 && secs > cr.budget_s) {
      c.ok = false;
      c.detail << " [over time budget " << cr.budget_s << " s]";
    }
    if (!c.ok) ++failed;
    std::printf("%s %d %s (%.3f s): %s\n", c.ok ? "PASS" : "FAIL", cr.id, cr.name, secs,
                c.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
