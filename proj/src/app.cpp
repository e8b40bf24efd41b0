#include "dcqe/app.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "dcqe/io.hpp"

namespace dcqe {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kFringeStream = 0x6672696e6765ULL;  // "fringe"

json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json optional_number(const std::optional<double>& v) {
  return v ? number(*v) : json(nullptr);
}

std::string cell_key(SideOutcome u, SideOutcome l) {
  return std::string(to_string(u)) + "," + std::string(to_string(l));
}

json counts_json(const JointTable& t) {
  json j = json::object();
  t.counts.for_each([&](SideOutcome u, SideOutcome l, std::uint64_t n) {
    if (n > 0) j[cell_key(u, l)] = n;
  });
  return j;
}

json frequencies_json(const JointTable& t) {
  json j = json::object();
  t.counts.for_each([&](SideOutcome u, SideOutcome l, std::uint64_t n) {
    if (n > 0) j[cell_key(u, l)] = t.frequency(u, l);
  });
  return j;
}

json distribution_json(const Distribution& d) {
  json j = json::object();
  d.for_each([&](SideOutcome u, SideOutcome l, double p) {
    if (p > 0.0) j[cell_key(u, l)] = p;
  });
  return j;
}

json z_scores_json(const OutcomeTable<std::optional<double>>& z) {
  json j = json::object();
  z.for_each([&](SideOutcome u, SideOutcome l, const std::optional<double>& v) {
    if (v) j[cell_key(u, l)] = number(*v);
  });
  return j;
}

json report_json(const TestReport& r) {
  json j;
  j["test"] = r.test_name;
  j["statistic"] = number(r.statistic);
  j["p_value"] = number(r.p_value);
  j["log_likelihood_ratio"] = number(r.log_likelihood_ratio);
  j["n_pairs"] = r.n_pairs;
  j["verdict"] = std::string(to_string(r.verdict));
  j["decided_at"] = r.decided_at ? json(*r.decided_at) : json(nullptr);
  j["degrees_of_freedom"] =
      r.degrees_of_freedom ? json(*r.degrees_of_freedom) : json(nullptr);
  return j;
}

json analysis_json(const AnalysisResult& a, bool screen) {
  json j;
  j["clicks"] = a.clicks;
  j["coincidences"] = a.coincidences;
  j["unmatched_upper"] = a.unmatched_upper;
  j["unmatched_lower"] = a.unmatched_lower;
  if (screen) {
    json v = json::object();
    for (const auto& [k, val] : a.visibility) v[k] = optional_number(val);
    j["visibility"] = v;
    j["screen_hits"] = a.screen_hits;
  } else {
    j["empirical_table"] = counts_json(a.table);
    j["empirical_frequencies"] = frequencies_json(a.table);
    j["tested_table"] = counts_json(a.tested_table);
    j["correlation"] = optional_number(a.correlation);
  }
  json reports = json::array();
  for (const auto& r : a.reports) reports.push_back(report_json(r));
  j["reports"] = reports;
  j["notes"] = a.notes;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
  os.close();
  if (!os) throw Error("cannot write " + path.string());
}

template <typename F>
void write_stream(const fs::path& path, F&& fill) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  fill(os);
  os.close();
  if (!os) throw Error("cannot write " + path.string());
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

void print_reports(std::ostream& out, const AnalysisResult& a) {
  if (a.correlation) out << "correlation: " << fixed(*a.correlation) << '\n';
  for (const auto& [k, v] : a.visibility)
    out << "visibility[" << k << "]: " << (v ? fixed(*v) : "n/a") << '\n';
  if (!a.reports.empty()) {
    out << "test                                          statistic     p-value       verdict\n";
    for (const auto& r : a.reports) {
      char line[160];
      std::snprintf(line, sizeof line, "%-44s  %-12s  %-12s  %s\n",
                    r.test_name.c_str(), fixed(r.statistic).c_str(),
                    fixed(r.p_value).c_str(),
                    std::string(to_string(r.verdict)).c_str());
      out << line;
    }
  }
  for (const auto& n : a.notes) out << "note: " << n << '\n';
}

bool is_qm_like(const ModelKind& m) {
  return m.kind == ModelKind::Kind::QM ||
         m.kind == ModelKind::Kind::Superdeterministic;
}

void add_chi_square(AnalysisResult& res, const RunConfig& cfg,
                    const MeasurementConfig& m, const ModelKind& against,
                    bool exclude) {
  ModelPrediction pred = declared_distribution(against, m);
  if (exclude)
    pred = pred.conditioned([](SideOutcome u, SideOutcome l) {
      return u != SideOutcome::D1Click && l != SideOutcome::D1Click;
    });
  const std::string name = "chi_square_vs_" + describe(against);
  try {
    TestReport r = chi_square_test(res.tested_table, pred, cfg.analysis.alpha);
    r.test_name = name;
    res.reports.push_back(r);
  } catch (const InsufficientData& e) {
    res.notes.push_back(name + ": " + e.what());
  }
}

void analyze_screen(AnalysisResult& res, const RunConfig& cfg,
                    const std::vector<CoincidenceRecord>& coincidences) {
  std::map<std::string, std::vector<double>> xs;
  for (const auto& c : coincidences) {
    if (c.upper.detector != DetectorId::Screen || !c.upper.screen_x) continue;
    const auto lower = click_outcome(c.lower.detector, cfg.measurement().lower_basis);
    if (!lower) continue;
    xs[std::string(to_string(*lower))].push_back(*c.upper.screen_x);
    xs["all"].push_back(*c.upper.screen_x);
  }
  xs.try_emplace("all");
  const ScreenGrid grid = cfg.grid();
  const double period = cfg.geometry.fringe_period();
  for (const auto& [key, hits] : xs) {
    res.screen_hits[key] = hits.size();
    if (hits.empty()) {
      res.visibility[key] = std::nullopt;
      res.notes.push_back("visibility[" + key + "]: no hits");
      continue;
    }
    try {
      res.visibility[key] = visibility(histogram_pattern(hits, grid, period),
                                       cfg.visibility_window());
    } catch (const Error& e) {
      res.visibility[key] = std::nullopt;
      res.notes.push_back("visibility[" + key + "]: " + e.what());
    }
  }
}

}  // namespace

AnalysisResult analyze_clicks(const RunConfig& cfg,
                              std::vector<ClickRecord> clicks) {
  AnalysisResult res;
  const MeasurementConfig m = cfg.measurement();
  res.clicks = clicks.size();
  CoincidenceResult matched = match_coincidences(
      std::move(clicks), cfg.detector.coincidence_window, cfg.detector.lower_delay);
  res.unmatched_upper = matched.unmatched_upper;
  res.unmatched_lower = matched.unmatched_lower;
  auto& co = matched.coincidences;
  if (cfg.analysis.oracle_filter)
    std::erase_if(co, [](const CoincidenceRecord& c) {
      return !c.upper.pair_id || c.upper.pair_id != c.lower.pair_id;
    });
  res.coincidences = co.size();

  if (m.screen) {
    analyze_screen(res, cfg, co);
    return res;
  }

  const bool exclude = cfg.exclude_d1click();
  res.table = build_table(co, m);
  res.tested_table =
      exclude ? res.table.filtered([](SideOutcome u, SideOutcome l) {
        return u != SideOutcome::D1Click && l != SideOutcome::D1Click;
      })
              : res.table;

  for (const auto& test : cfg.tests()) {
    if (test == "correlation") {
      try {
        res.correlation = binary_correlation(res.tested_table, default_grouping());
      } catch (const DegenerateMarginal& e) {
        res.notes.push_back(std::string("correlation: ") + e.what());
      }
    } else if (test == "chi_square") {
      add_chi_square(res, cfg, m, ModelKind::qm(), exclude);
      const ModelKind rival = cfg.rival();
      if (!is_qm_like(rival)) add_chi_square(res, cfg, m, rival, exclude);
    } else if (test == "sequence") {
      std::vector<OutcomePair> seq = outcome_sequence(co, m);
      TestReport r = sequence_test(seq, cfg.analysis.sequence_alpha);
      r.test_name = "sequence";
      res.reports.push_back(r);
    }
  }
  return res;
}

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool quiet = false;
  std::vector<std::string> settings;
};

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) {
    cfg = load_config(o.config_path);
  } else {
    cfg.source = "<defaults>";
  }
  for (const auto& s : o.settings) apply_setting(cfg, s);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  return cfg;
}

int cmd_run(const RunConfig& cfg, bool quiet, std::ostream& out) {
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  const MeasurementConfig m = cfg.measurement();

  std::vector<ClickRecord> clicks;
  std::vector<PairOutcome> raw;
  if (m.screen) {
    ScreenRunResult r = run_screen_experiment(m, cfg.model, cfg.geometry,
                                              cfg.detector, cfg.threads);
    clicks = std::move(r.clicks);
    raw = std::move(r.raw);
  } else {
    RunResult r = run_experiment(m, cfg.model, cfg.detector, cfg.threads);
    clicks = std::move(r.clicks);
    raw = std::move(r.raw);
  }
  // Analyse exactly what the log will hold.
  quantize_timestamps(clicks);

  write_text(dir / "run.ini", to_config_text(cfg));
  write_stream(dir / "clicks.csv",
               [&](std::ostream& os) { write_clicks_csv(os, clicks); });
  write_stream(dir / "outcomes.csv",
               [&](std::ostream& os) { write_outcomes_csv(os, raw, m.screen); });

  const AnalysisResult res = analyze_clicks(cfg, clicks);

  json s;
  s["experiment"] = std::string(to_string(cfg.experiment));
  s["model"] = describe(cfg.model);
  s["pairs"] = cfg.pairs;
  s["seed"] = cfg.seed;
  s["detector"] = {{"preset", cfg.detector_preset},
                   {"efficiency", cfg.detector.efficiency},
                   {"dark_rate", cfg.detector.dark_rate},
                   {"jitter_sigma", cfg.detector.jitter_sigma},
                   {"coincidence_window", cfg.detector.coincidence_window},
                   {"pair_rate", cfg.detector.pair_rate},
                   {"lower_delay", cfg.detector.lower_delay}};
  s["source"] = {{"pump_wavelength_m", cfg.pump_wavelength},
                 {"pair_wavelength_m", 2.0 * cfg.pump_wavelength}};
  s["analysis"] = analysis_json(res, m.screen);
  if (!m.screen) {
    const ModelPrediction oracle = declared_distribution(cfg.model, m);
    s["oracle_table"] = distribution_json(oracle.table);
    s["z_scores"] = z_scores_json(cell_z_scores(res.table, oracle.table));
    s["raw_table"] = counts_json(build_table(raw));
    write_stream(dir / "table.csv",
                 [&](std::ostream& os) { write_table_csv(os, res.table); });
  }
  write_text(dir / "summary.json", dump(s));

  if (!quiet) {
    out << to_string(cfg.experiment) << " / " << describe(cfg.model) << ": "
        << cfg.pairs << " pairs, " << res.clicks << " clicks, "
        << res.coincidences << " coincidences\n";
    if (!m.screen) {
      res.table.counts.for_each([&](SideOutcome u, SideOutcome l, std::uint64_t n) {
        if (n > 0)
          out << "  (" << cell_key(u, l) << ")  " << n << "  "
              << fixed(res.table.frequency(u, l)) << '\n';
      });
    }
    print_reports(out, res);
    out << "wrote " << dir.string() << '\n';
  }
  return kExitOk;
}

struct AnalyzeOptions {
  std::string log_dir;
  std::vector<std::string> tests;
  std::string rival;
  std::optional<double> alpha;
};

int cmd_analyze(const CommonOptions& common, const AnalyzeOptions& opt,
                std::ostream& out) {
  fs::path dir = opt.log_dir;
  if (dir.empty()) dir = common.out_dir.empty() ? "out" : common.out_dir;
  const fs::path report_dir =
      !opt.log_dir.empty() && !common.out_dir.empty() ? fs::path(common.out_dir) : dir;
  for (const char* f : {"run.ini", "clicks.csv", "outcomes.csv"})
    if (!fs::is_regular_file(dir / f))
      throw LogError("missing log " + (dir / f).string());

  RunConfig cfg;
  try {
    cfg = load_config((dir / "run.ini").string());
  } catch (const ConfigError& e) {
    throw LogError(std::string("corrupt run.ini: ") + e.what());
  }
  // Analysis choices from the command line and an explicit config file win
  // over the ones recorded with the run.
  if (!common.config_path.empty()) cfg.analysis = load_config(common.config_path).analysis;
  for (const auto& s : common.settings) apply_setting(cfg, s);
  if (!opt.tests.empty()) apply_setting(cfg, "analysis.tests=" + [&] {
    std::string joined;
    for (const auto& t : opt.tests) joined += (joined.empty() ? "" : ",") + t;
    return joined;
  }());
  if (!opt.rival.empty()) apply_setting(cfg, "analysis.rival=" + opt.rival);
  if (opt.alpha) {
    cfg.analysis.alpha = *opt.alpha;
    cfg.analysis.sequence_alpha = *opt.alpha;
    cfg.validate();
  }

  std::vector<ClickRecord> clicks;
  std::vector<OutcomeRow> rows;
  {
    std::ifstream in(dir / "clicks.csv", std::ios::binary);
    try {
      clicks = read_clicks_csv(in);
    } catch (const LogError& e) {
      throw LogError("clicks.csv " + std::string(e.what()));
    }
  }
  {
    std::ifstream in(dir / "outcomes.csv", std::ios::binary);
    try {
      rows = read_outcomes_csv(in);
    } catch (const LogError& e) {
      throw LogError("outcomes.csv " + std::string(e.what()));
    }
  }
  if (rows.size() != cfg.pairs)
    throw LogError("outcomes.csv holds " + std::to_string(rows.size()) +
                   " rows, run.ini declares " + std::to_string(cfg.pairs));

  const MeasurementConfig m = cfg.measurement();
  const AnalysisResult res = analyze_clicks(cfg, std::move(clicks));
  json r;
  r["experiment"] = std::string(to_string(cfg.experiment));
  r["model"] = describe(cfg.model);
  r["rival"] = describe(cfg.rival());
  r["analysis"] = analysis_json(res, m.screen);
  if (!m.screen) {
    JointTable truth;
    for (const auto& row : rows)
      if (row.upper) truth.add(*row.upper, row.lower);
    r["raw_table"] = counts_json(truth);
  }
  fs::create_directories(report_dir);
  write_text(report_dir / "report.json", dump(r));
  if (!common.quiet) {
    out << to_string(cfg.experiment) << " / " << describe(cfg.model) << " vs "
        << describe(cfg.rival()) << ": " << res.coincidences << " coincidences\n";
    print_reports(out, res);
    out << "wrote " << (report_dir / "report.json").string() << '\n';
  }
  return kExitOk;
}

int cmd_fringe(const RunConfig& cfg, std::vector<std::string> conditions,
               bool quiet, std::ostream& out) {
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  std::vector<ScreenCondition> conds;
  if (conditions.empty()) conds.push_back(cfg.fringe.condition);
  for (const auto& c : conditions) {
    if (c == "all") {
      conds = {ScreenCondition::OnD1, ScreenCondition::OnD2, ScreenCondition::OnD3,
               ScreenCondition::OnD4, ScreenCondition::NoCondition};
      break;
    }
    try {
      conds.push_back(parse_condition(c));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("command line", 0, "fringe.condition", e.what());
    }
  }
  const SlitGeometry& g = cfg.geometry;
  const ScreenGrid grid = cfg.grid();
  json j;
  j["geometry"] = {{"slit_width", g.slit_width},
                   {"slit_separation", g.slit_separation},
                   {"wavelength", g.wavelength},
                   {"screen_distance", g.screen_distance},
                   {"envelope_shift", g.envelope_shift}};
  j["grid"] = {{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"bins", grid.bins}};
  j["fringe_period_m"] = g.fringe_period();
  j["first_envelope_zero_m"] = g.first_envelope_zero();
  j["far_field"] = g.far_field();
  j["scale"] = cfg.fringe.unit_mass ? "unit_mass" : "joint";
  json per = json::object();
  for (ScreenCondition c : conds) {
    const std::string name(to_string(c));
    const ScreenPattern unit = conditioned_pattern(g, c, grid);
    const ScreenPattern written = cfg.fringe.unit_mass ? unit : joint_pattern(g, c, grid);
    write_stream(dir / ("pattern_" + name + ".csv"),
                 [&](std::ostream& os) { write_pattern_csv(os, written); });
    json e;
    e["mass"] = written.mass;
    try {
      e["visibility"] = visibility(unit, cfg.visibility_window());
    } catch (const DegenerateWindow& ex) {
      e["visibility"] = nullptr;
      e["note"] = ex.what();
    }
    if (cfg.fringe.samples > 0) {
      Rng rng = make_substream(cfg.seed, kFringeStream, static_cast<std::uint64_t>(c));
      const ScreenSampler sampler(unit);
      std::vector<double> hits(cfg.fringe.samples);
      for (auto& x : hits) x = sampler(rng);
      const ScreenPattern hist = histogram_pattern(hits, grid, g.fringe_period());
      write_stream(dir / ("histogram_" + name + ".csv"),
                   [&](std::ostream& os) { write_pattern_csv(os, hist); });
      try {
        e["sampled_visibility"] = visibility(hist, cfg.visibility_window());
      } catch (const DegenerateWindow&) {
        e["sampled_visibility"] = nullptr;
      }
    }
    if (!quiet) {
      out << name << ": visibility "
          << (e["visibility"].is_number() ? fixed(e["visibility"].get<double>()) : "n/a");
      if (e.contains("sampled_visibility") && e["sampled_visibility"].is_number())
        out << ", sampled " << fixed(e["sampled_visibility"].get<double>());
      out << '\n';
    }
    per[name] = e;
  }
  j["conditions"] = per;
  write_text(dir / "fringe.json", dump(j));
  if (!quiet) out << "wrote " << dir.string() << '\n';
  return kExitOk;
}

std::string cell_or_sentinel(const std::optional<double>& v) {
  if (!v) return "unreachable";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", *v);
  return buf;
}

int cmd_sweep(const RunConfig& cfg, bool quiet, std::ostream& out) {
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  PowerSweepRequest req;
  req.data_model = cfg.model;
  req.rival = cfg.sweep.rival;
  req.config = cfg.measurement();
  req.base_detector = cfg.detector;
  req.efficiencies = cfg.sweep.efficiencies;
  req.dark_rates = cfg.sweep.dark_rates;
  req.alpha = cfg.sweep.alpha;
  req.trials = cfg.sweep.trials;
  req.max_pairs = cfg.sweep.max_pairs;
  req.seed = cfg.seed;
  req.threads = cfg.threads;
  const auto rows = power_sweep(req);

  write_stream(dir / "sweep.csv", [&](std::ostream& os) {
    os << "efficiency,dark_rate,trials,unreachable,median_pairs,median_lo,"
          "median_hi,mean_pairs,mean_lo,mean_hi\n";
    for (const auto& r : rows)
      os << cell_or_sentinel(r.efficiency) << ',' << cell_or_sentinel(r.dark_rate)
         << ',' << r.trials << ',' << r.unreachable << ','
         << cell_or_sentinel(r.median) << ',' << cell_or_sentinel(r.median_lo)
         << ',' << cell_or_sentinel(r.median_hi) << ',' << cell_or_sentinel(r.mean)
         << ',' << cell_or_sentinel(r.mean_lo) << ','
         << cell_or_sentinel(r.mean_hi) << '\n';
  });
  json j;
  j["experiment"] = std::string(to_string(cfg.experiment));
  j["data_model"] = describe(cfg.model);
  j["rival"] = describe(cfg.sweep.rival);
  j["alpha"] = cfg.sweep.alpha;
  j["seed"] = cfg.seed;
  auto opt = [](const std::optional<double>& v) {
    return v ? json(*v) : json("unreachable");
  };
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"efficiency", r.efficiency},
                   {"dark_rate", r.dark_rate},
                   {"trials", r.trials},
                   {"unreachable", r.unreachable},
                   {"median_pairs", opt(r.median)},
                   {"median_ci", {opt(r.median_lo), opt(r.median_hi)}},
                   {"mean_pairs", opt(r.mean)},
                   {"mean_ci", {opt(r.mean_lo), opt(r.mean_hi)}}});
  j["rows"] = arr;
  write_text(dir / "sweep.json", dump(j));
  if (!quiet) {
    out << "efficiency  dark_rate  median_pairs  95% CI              unreachable\n";
    for (const auto& r : rows) {
      char line[200];
      std::snprintf(line, sizeof line, "%-10s  %-9s  %-12s  [%s, %s]  %u/%u\n",
                    fixed(r.efficiency).c_str(), fixed(r.dark_rate).c_str(),
                    cell_or_sentinel(r.median).c_str(),
                    cell_or_sentinel(r.median_lo).c_str(),
                    cell_or_sentinel(r.median_hi).c_str(), r.unreachable, r.trials);
      out << line;
    }
    out << "wrote " << dir.string() << '\n';
  }
  return kExitOk;
}

int cmd_presets(bool keys, bool tmpl, std::ostream& out) {
  if (keys) {
    out << config_reference_markdown();
    return kExitOk;
  }
  if (tmpl) {
    out << default_config_text();
    return kExitOk;
  }
  out << "detector presets:\n";
  for (auto name : detector_preset_names()) {
    const DetectorModel d = detector_preset(name);
    out << "  " << name << ": efficiency " << fixed(d.efficiency) << ", dark_rate "
        << fixed(d.dark_rate) << " /s, jitter " << fixed(d.jitter_sigma)
        << " s, window " << fixed(d.coincidence_window) << " s\n";
  }
  out << "experiments:\n";
  for (auto e : {ExperimentName::E1, ExperimentName::E2, ExperimentName::E3,
                 ExperimentName::E4, ExperimentName::E5, ExperimentName::E6}) {
    const MeasurementConfig m = catalog(e);
    out << "  " << to_string(e) << ": ";
    if (m.screen)
      out << "screen / " << to_string(m.lower_basis);
    else
      out << to_string(m.upper_basis) << " / " << to_string(m.lower_basis);
    if (m.feedback) out << ", " << to_string(m.feedback->trigger) << " turns D1 on";
    out << '\n';
  }
  out << "models: QM, LocalRealistBall, RetrocausalConsistent/Strict, "
         "RetrocausalConsistent/NovikovUniform, Superdeterministic\n";
  return kExitOk;
}

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config_path, "Config file");
  sub->add_option("--seed", o.seed, "Seed (overrides the config)");
  sub->add_option("--out", o.out_dir, "Output directory (overrides the config)");
  sub->add_flag("--quiet", o.quiet, "Suppress console output");
  sub->add_option("--set", o.settings, "Override one key: section.key=value")
      ->take_all();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Delayed-choice quantum eraser simulator"};
  app.require_subcommand(1);
  CommonOptions common;
  AnalyzeOptions analyze_opt;
  std::vector<std::string> conditions;
  bool keys = false, tmpl = false;

  auto* run = app.add_subcommand("run", "Simulate an experiment and write logs");
  add_common(run, common);
  auto* analyze = app.add_subcommand("analyze", "Re-analyse the logs of a run");
  add_common(analyze, common);
  analyze->add_option("logdir", analyze_opt.log_dir, "Directory written by run");
  analyze->add_option("--test", analyze_opt.tests,
                      "correlation, chi_square or sequence (repeatable)")
      ->take_all();
  analyze->add_option("--rival", analyze_opt.rival, "Rival model");
  analyze->add_option("--alpha", analyze_opt.alpha, "Significance level");
  auto* fringe = app.add_subcommand("fringe", "Write screen patterns");
  add_common(fringe, common);
  fringe->add_option("--condition", conditions,
                     "OnD1, OnD2, OnD3, OnD4, NoCondition or all (repeatable)")
      ->take_all();
  auto* sweep = app.add_subcommand("sweep", "Pairs needed to reject a rival model");
  add_common(sweep, common);
  auto* presets = app.add_subcommand("presets", "List presets and config keys");
  presets->add_flag("--keys", keys, "Print the config key reference (Markdown)");
  presets->add_flag("--template", tmpl, "Print a config file with every default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*presets) return cmd_presets(keys, tmpl, out);
    if (*analyze) return cmd_analyze(common, analyze_opt, out);
    const RunConfig cfg = resolve_config(common);
    if (*run) return cmd_run(cfg, common.quiet, out);
    if (*fringe) return cmd_fringe(cfg, conditions, common.quiet, out);
    if (*sweep) return cmd_sweep(cfg, common.quiet, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NoConsistentHistory& e) {
    err << "no consistent history: " << e.what() << '\n';
    return kExitNoHistory;
  } catch (const LogError& e) {
    err << "log error: " << e.what() << '\n';
    return kExitLogs;
  } catch (const UnsupportedModel& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace dcqe
