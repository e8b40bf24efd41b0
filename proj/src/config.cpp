#include "dcqe/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace dcqe {
namespace {

std::string where(const std::string& source, std::size_t line) {
  return line > 0 ? source + ":" + std::to_string(line) : source;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size() ||
      !std::isfinite(v))
    throw std::invalid_argument("expected a number, got '" + std::string(s) + "'");
  return v;
}

std::uint64_t to_u64(std::string_view s) {
  std::uint64_t v = 0;
  // Accept integral values written in floating notation, e.g. 1e5.
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (!s.empty() && ec == std::errc() && p == s.data() + s.size()) return v;
  const double d = to_double(s);
  if (d < 0.0 || d != std::floor(d) || d > 1.8e19)
    throw std::invalid_argument("expected a non-negative integer, got '" +
                                std::string(s) + "'");
  return static_cast<std::uint64_t>(d);
}

bool to_bool(std::string_view s) {
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

std::vector<std::string_view> to_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma - start));
    if (item.empty()) throw std::invalid_argument("empty list item");
    out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<double> to_double_list(std::string_view s) {
  std::vector<double> out;
  for (auto item : to_list(s)) out.push_back(to_double(item));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

struct KeyDef {
  ConfigKey doc;
  Setter set;
};

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = [] {
    const RunConfig d;
    std::vector<KeyDef> v;
    auto add = [&](std::string section, std::string key, std::string def,
                   std::string desc, Setter set) {
      v.push_back({{std::move(section), std::move(key), std::move(def),
                    std::move(desc)},
                   std::move(set)});
    };
    add("experiment", "name", "E2",
        "Catalog entry: E1 which-way/which-way, E2 eraser/eraser, E3 "
        "eraser/which-way, E4 eraser/hybrid D1, E5 eraser with U4 switching "
        "D1 on, E6 upper photon on a screen.",
        [](RunConfig& c, std::string_view s) { c.experiment = parse_experiment(s); });
    add("experiment", "pairs", std::to_string(d.pairs), "Number of emitted pairs (>= 1).",
        [](RunConfig& c, std::string_view s) { c.pairs = to_u64(s); });
    add("experiment", "seed", std::to_string(d.seed),
        "64-bit seed. Overridden by --seed.",
        [](RunConfig& c, std::string_view s) { c.seed = to_u64(s); });
    add("experiment", "threads", "0", "Worker threads; 0 uses every core. "
        "Results do not depend on it.",
        [](RunConfig& c, std::string_view s) {
          c.threads = static_cast<unsigned>(to_u64(s));
        });
    add("experiment", "temporal_order", "UpperFirst",
        "UpperFirst or LowerFirst. Feedback experiments require UpperFirst.",
        [](RunConfig& c, std::string_view s) { c.temporal_order = parse_order(s); });

    add("model", "kind", "QM",
        "QM, LocalRealistBall, RetrocausalConsistent or Superdeterministic. "
        "RetrocausalConsistent/<policy> sets the policy as well.",
        [](RunConfig& c, std::string_view s) {
          const auto policy = c.model.retro_policy;
          c.model = parse_model_descriptor(s);
          if (s.find('/') == std::string_view::npos) c.model.retro_policy = policy;
        });
    add("model", "retro_policy", "Strict",
        "Strict keeps only loop-free histories once feedback is wired; "
        "NovikovUniform keeps every self-consistent history.",
        [](RunConfig& c, std::string_view s) {
          c.model.retro_policy = parse_retro_policy(s);
        });

    const DetectorModel det;
    auto fmt = [](double x) {
      std::ostringstream os;
      os << x;
      return os.str();
    };
    add("detector", "preset", "ideal",
        "ideal, spad or mkid. Applied before the other detector keys, which "
        "override it.",
        [](RunConfig& c, std::string_view s) {
          c.detector = detector_preset(s);
          c.detector_preset = std::string(s);
        });
    add("detector", "efficiency", fmt(det.efficiency),
        "Registration probability per photon, in [0, 1].",
        [](RunConfig& c, std::string_view s) { c.detector.efficiency = to_double(s); });
    add("detector", "dark_rate", fmt(det.dark_rate), "Dark counts per second per detector.",
        [](RunConfig& c, std::string_view s) { c.detector.dark_rate = to_double(s); });
    add("detector", "jitter_sigma", fmt(det.jitter_sigma),
        "Gaussian timing jitter in seconds.",
        [](RunConfig& c, std::string_view s) { c.detector.jitter_sigma = to_double(s); });
    add("detector", "coincidence_window", fmt(det.coincidence_window),
        "Half-width of the coincidence window in seconds.",
        [](RunConfig& c, std::string_view s) {
          c.detector.coincidence_window = to_double(s);
        });
    add("detector", "pair_rate", fmt(det.pair_rate), "Emitted pairs per second.",
        [](RunConfig& c, std::string_view s) { c.detector.pair_rate = to_double(s); });
    add("detector", "lower_delay", fmt(det.lower_delay),
        "Extra flight time of the lower photon in seconds.",
        [](RunConfig& c, std::string_view s) { c.detector.lower_delay = to_double(s); });

    const SlitGeometry g;
    add("geometry", "slit_width", fmt(g.slit_width), "Slit width a in meters (E6, fringe).",
        [](RunConfig& c, std::string_view s) { c.geometry.slit_width = to_double(s); });
    add("geometry", "slit_separation", fmt(g.slit_separation),
        "Center-to-center slit separation d in meters.",
        [](RunConfig& c, std::string_view s) {
          c.geometry.slit_separation = to_double(s);
        });
    add("geometry", "wavelength", fmt(g.wavelength), "Photon wavelength in meters.",
        [](RunConfig& c, std::string_view s) { c.geometry.wavelength = to_double(s); });
    add("geometry", "screen_distance", fmt(g.screen_distance),
        "Slit-to-screen distance L in meters.",
        [](RunConfig& c, std::string_view s) {
          c.geometry.screen_distance = to_double(s);
        });
    add("geometry", "envelope_shift", fmt(g.envelope_shift),
        "Lateral offset of the slit-1 envelope in meters.",
        [](RunConfig& c, std::string_view s) {
          c.geometry.envelope_shift = to_double(s);
        });
    add("geometry", "x_min", "-3 lambda L / a", "Left edge of the screen grid in meters.",
        [](RunConfig& c, std::string_view s) { c.grid_min = to_double(s); });
    add("geometry", "x_max", "3 lambda L / a", "Right edge of the screen grid in meters.",
        [](RunConfig& c, std::string_view s) { c.grid_max = to_double(s); });
    add("geometry", "bins", "2048", "Number of screen bins.",
        [](RunConfig& c, std::string_view s) {
          c.grid_bins = static_cast<std::size_t>(to_u64(s));
        });

    add("source", "pump_wavelength", fmt(d.pump_wavelength),
        "Pump wavelength in meters. Metadata only; the pair photons are "
        "reported at twice this value.",
        [](RunConfig& c, std::string_view s) { c.pump_wavelength = to_double(s); });

    add("output", "dir", d.output_dir, "Output directory. Overridden by --out.",
        [](RunConfig& c, std::string_view s) { c.output_dir = std::string(s); });

    add("analysis", "tests", "experiment default",
        "Comma list of correlation, chi_square, sequence. Default: "
        "correlation and chi_square, plus sequence for E5.",
        [](RunConfig& c, std::string_view s) {
          c.analysis.tests.clear();
          for (auto t : to_list(s)) {
            if (t != "correlation" && t != "chi_square" && t != "sequence")
              throw std::invalid_argument("unknown test '" + std::string(t) + "'");
            c.analysis.tests.emplace_back(t);
          }
        });
    add("analysis", "rival", "experiment default",
        "Model tested against QM. Default: RetrocausalConsistent/Strict for "
        "E5, LocalRealistBall otherwise.",
        [](RunConfig& c, std::string_view s) {
          c.analysis.rival = parse_model_descriptor(s);
        });
    add("analysis", "alpha", fmt(d.analysis.alpha), "Significance level of chi-square tests.",
        [](RunConfig& c, std::string_view s) { c.analysis.alpha = to_double(s); });
    add("analysis", "sequence_alpha", fmt(d.analysis.sequence_alpha),
        "Significance level of the sequence test.",
        [](RunConfig& c, std::string_view s) {
          c.analysis.sequence_alpha = to_double(s);
        });
    add("analysis", "exclude_d1click", "true for E4, else false",
        "Drop rows with a D1 click before testing.",
        [](RunConfig& c, std::string_view s) { c.analysis.exclude_d1click = to_bool(s); });
    add("analysis", "oracle_filter", "false",
        "Keep only coincidences whose clicks share a pair id (validation runs).",
        [](RunConfig& c, std::string_view s) { c.analysis.oracle_filter = to_bool(s); });
    add("analysis", "visibility_window", "lambda L / a",
        "Full width in meters of the window used for fringe visibility.",
        [](RunConfig& c, std::string_view s) {
          c.analysis.visibility_window = to_double(s);
        });

    add("sweep", "efficiencies", join(d.sweep.efficiencies),
        "Comma list of detector efficiencies.",
        [](RunConfig& c, std::string_view s) { c.sweep.efficiencies = to_double_list(s); });
    add("sweep", "dark_rates", join(d.sweep.dark_rates),
        "Comma list of dark-count rates per second.",
        [](RunConfig& c, std::string_view s) { c.sweep.dark_rates = to_double_list(s); });
    add("sweep", "trials", std::to_string(d.sweep.trials),
        "Monte Carlo trials per grid point.",
        [](RunConfig& c, std::string_view s) {
          c.sweep.trials = static_cast<std::uint32_t>(to_u64(s));
        });
    add("sweep", "max_pairs", std::to_string(d.sweep.max_pairs),
        "Pair budget per trial; trials that never reject count as unreachable.",
        [](RunConfig& c, std::string_view s) { c.sweep.max_pairs = to_u64(s); });
    add("sweep", "rival", "RetrocausalConsistent/Strict", "Model the sweep tries to reject.",
        [](RunConfig& c, std::string_view s) { c.sweep.rival = parse_model_descriptor(s); });
    add("sweep", "alpha", fmt(d.sweep.alpha), "Rejection level.",
        [](RunConfig& c, std::string_view s) { c.sweep.alpha = to_double(s); });

    add("fringe", "condition", "OnD3", "OnD1, OnD2, OnD3, OnD4 or NoCondition.",
        [](RunConfig& c, std::string_view s) {
          c.fringe.condition = parse_condition(s);
        });
    add("fringe", "samples", "0",
        "Monte Carlo hits for an extra histogram CSV; 0 writes none.",
        [](RunConfig& c, std::string_view s) { c.fringe.samples = to_u64(s); });
    add("fringe", "unit_mass", "false",
        "Normalize each pattern to unit mass instead of the joint scale on "
        "which conditioned patterns add up to NoCondition.",
        [](RunConfig& c, std::string_view s) { c.fringe.unit_mass = to_bool(s); });
    return v;
  }();
  return defs;
}

const KeyDef* find_key(std::string_view section, std::string_view key) {
  for (const auto& d : key_defs())
    if (d.doc.section == section && d.doc.key == key) return &d;
  return nullptr;
}

}  // namespace

ConfigError::ConfigError(std::string source, std::size_t line, std::string key,
                         const std::string& message)
    : Error(where(source, line) + (key.empty() ? "" : ": key '" + key + "'") +
            ": " + message),
      source_(std::move(source)),
      line_(line),
      key_(std::move(key)) {}

ModelKind parse_model_descriptor(std::string_view text) {
  const auto slash = text.find('/');
  ModelKind m;
  m.kind = parse_model_kind(trim(text.substr(0, slash)));
  if (slash != std::string_view::npos) {
    if (m.kind != ModelKind::Kind::RetrocausalConsistent)
      throw std::invalid_argument("only RetrocausalConsistent takes a policy");
    m.retro_policy = parse_retro_policy(trim(text.substr(slash + 1)));
  }
  return m;
}

MeasurementConfig RunConfig::measurement() const {
  MeasurementConfig m = catalog(experiment);
  m.pair_count = pairs;
  m.seed = seed;
  m.temporal_order = temporal_order;
  return m;
}

ScreenGrid RunConfig::grid() const {
  ScreenGrid g = default_grid(geometry);
  if (grid_min) g.x_min = *grid_min;
  if (grid_max) g.x_max = *grid_max;
  g.bins = grid_bins;
  return g;
}

ModelKind RunConfig::rival() const {
  if (analysis.rival) return *analysis.rival;
  return experiment == ExperimentName::E5 ? ModelKind::retro() : ModelKind::ball();
}

bool RunConfig::exclude_d1click() const {
  return analysis.exclude_d1click.value_or(experiment == ExperimentName::E4);
}

std::vector<std::string> RunConfig::tests() const {
  if (!analysis.tests.empty()) return analysis.tests;
  std::vector<std::string> t = {"correlation", "chi_square"};
  if (experiment == ExperimentName::E5) t.emplace_back("sequence");
  return t;
}

double RunConfig::visibility_window() const {
  return analysis.visibility_window > 0.0 ? analysis.visibility_window
                                          : geometry.first_envelope_zero();
}

void RunConfig::validate() const {
  auto fail = [&](const std::string& key, const std::string& msg) {
    const auto it = key_lines.find(key);
    throw ConfigError(source, it == key_lines.end() ? 0 : it->second, key, msg);
  };
  auto check = [&](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      fail(key, e.what());
    }
  };
  if (pairs == 0) fail("experiment.pairs", "must be >= 1");
  check("experiment.temporal_order", [&] { measurement().validate(); });
  check("detector", [&] { detector.validate(); });
  check("geometry", [&] { geometry.validate(); });
  const ScreenGrid g = grid();
  if (!(g.x_max > g.x_min)) fail("geometry.x_max", "must exceed x_min");
  if (g.bins < 2) fail("geometry.bins", "must be >= 2");
  if (!(pump_wavelength > 0.0)) fail("source.pump_wavelength", "must be > 0");
  if (experiment == ExperimentName::E6 && model.kind != ModelKind::Kind::QM &&
      model.kind != ModelKind::Kind::LocalRealistBall)
    fail("model.kind", describe(model) + " has no screen mode");
  for (const auto& [key, a] : {std::pair{"analysis.alpha", analysis.alpha},
                               {"analysis.sequence_alpha", analysis.sequence_alpha},
                               {"sweep.alpha", sweep.alpha}})
    if (!(a > 0.0 && a < 1.0)) fail(key, "must be in (0, 1)");
  if (analysis.visibility_window < 0.0)
    fail("analysis.visibility_window", "must be >= 0");
  if (sweep.efficiencies.empty()) fail("sweep.efficiencies", "must not be empty");
  for (double e : sweep.efficiencies)
    if (!(e >= 0.0 && e <= 1.0)) fail("sweep.efficiencies", "values must be in [0, 1]");
  if (sweep.dark_rates.empty()) fail("sweep.dark_rates", "must not be empty");
  for (double r : sweep.dark_rates)
    if (!(r >= 0.0)) fail("sweep.dark_rates", "values must be >= 0");
  if (sweep.trials == 0) fail("sweep.trials", "must be >= 1");
  if (sweep.max_pairs == 0) fail("sweep.max_pairs", "must be >= 1");
}

RunConfig parse_config(std::istream& is, const std::string& source) {
  struct Entry {
    const KeyDef* def;
    std::string name;
    std::string value;
    std::size_t line;
  };
  std::vector<Entry> entries;
  RunConfig cfg;
  cfg.source = source;
  std::string section;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string_view line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(source, line_no, "", "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      const bool known = std::any_of(
          key_defs().begin(), key_defs().end(),
          [&](const KeyDef& d) { return d.doc.section == section; });
      if (!known)
        throw ConfigError(source, line_no, "", "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(source, line_no, std::string(line), "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (section.empty())
      throw ConfigError(source, line_no, key, "key outside of any section");
    const std::string name = section + "." + key;
    const KeyDef* def = find_key(section, key);
    if (!def) throw ConfigError(source, line_no, name, "unknown key");
    if (value.empty()) throw ConfigError(source, line_no, name, "missing value");
    if (cfg.key_lines.count(name))
      throw ConfigError(source, line_no, name,
                        "duplicate key (first set on line " +
                            std::to_string(cfg.key_lines[name]) + ")");
    cfg.key_lines[name] = line_no;
    entries.push_back({def, name, value, line_no});
  }
  // The preset goes first so that individual detector keys override it.
  std::stable_partition(entries.begin(), entries.end(), [](const Entry& e) {
    return e.name == "detector.preset";
  });
  for (const auto& e : entries) {
    try {
      e.def->set(cfg, e.value);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(source, e.line, e.name, ex.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "", "cannot open config file");
  return parse_config(in, path);
}

void apply_setting(RunConfig& cfg, std::string_view assignment,
                   const std::string& source) {
  const auto eq = assignment.find('=');
  const std::string name(trim(assignment.substr(0, eq)));
  if (eq == std::string_view::npos)
    throw ConfigError(source, 0, name, "expected section.key=value");
  const auto dot = name.find('.');
  const KeyDef* def = dot == std::string::npos
                          ? nullptr
                          : find_key(name.substr(0, dot), name.substr(dot + 1));
  if (!def) throw ConfigError(source, 0, name, "unknown key");
  const std::string_view value = trim(assignment.substr(eq + 1));
  if (value.empty()) throw ConfigError(source, 0, name, "missing value");
  try {
    def->set(cfg, value);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(source, 0, name, ex.what());
  }
  cfg.key_lines.erase(name);
  const std::string previous = cfg.source;
  cfg.source = source;
  try {
    cfg.validate();
  } catch (...) {
    cfg.source = previous;
    throw;
  }
  cfg.source = previous;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& d : key_defs()) out.push_back(d.doc);
    return out;
  }();
  return keys;
}

std::string config_reference_markdown() {
  std::ostringstream os;
  os << "# Configuration reference\n\n"
        "Config files are plain text with `[section]` headers and one\n"
        "`key = value` per line. `#` and `;` start comments. Every key is\n"
        "optional. Unknown sections or keys, duplicate keys and malformed\n"
        "values are rejected with the file name, line number and key.\n\n"
        "This page is generated by `dcqe presets --keys`.\n";
  std::string section;
  for (const auto& k : config_keys()) {
    if (k.section != section) {
      section = k.section;
      os << "\n## [" << section << "]\n\n| key | default | description |\n"
         << "|---|---|---|\n";
    }
    os << "| `" << k.key << "` | `" << k.default_value << "` | " << k.description
       << " |\n";
  }
  return os.str();
}

std::string to_config_text(const RunConfig& c) {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "[experiment]\nname = " << to_string(c.experiment)
     << "\npairs = " << c.pairs << "\nseed = " << c.seed
     << "\ntemporal_order = " << to_string(c.temporal_order) << "\n\n";
  os << "[model]\nkind = " << to_string(c.model.kind)
     << "\nretro_policy = " << to_string(c.model.retro_policy) << "\n\n";
  const DetectorModel& d = c.detector;
  os << "[detector]\npreset = " << c.detector_preset
     << "\nefficiency = " << num(d.efficiency)
     << "\ndark_rate = " << num(d.dark_rate)
     << "\njitter_sigma = " << num(d.jitter_sigma)
     << "\ncoincidence_window = " << num(d.coincidence_window)
     << "\npair_rate = " << num(d.pair_rate)
     << "\nlower_delay = " << num(d.lower_delay) << "\n\n";
  const SlitGeometry& g = c.geometry;
  os << "[geometry]\nslit_width = " << num(g.slit_width)
     << "\nslit_separation = " << num(g.slit_separation)
     << "\nwavelength = " << num(g.wavelength)
     << "\nscreen_distance = " << num(g.screen_distance)
     << "\nenvelope_shift = " << num(g.envelope_shift) << '\n';
  if (c.grid_min) os << "x_min = " << num(*c.grid_min) << '\n';
  if (c.grid_max) os << "x_max = " << num(*c.grid_max) << '\n';
  os << "bins = " << c.grid_bins << "\n\n";
  os << "[source]\npump_wavelength = " << num(c.pump_wavelength) << "\n\n";
  const AnalysisSpec& a = c.analysis;
  os << "[analysis]\n";
  if (!a.tests.empty()) os << "tests = " << join(a.tests) << '\n';
  if (a.rival) os << "rival = " << describe(*a.rival) << '\n';
  os << "alpha = " << num(a.alpha) << "\nsequence_alpha = " << num(a.sequence_alpha)
     << '\n';
  if (a.exclude_d1click)
    os << "exclude_d1click = " << (*a.exclude_d1click ? "true" : "false") << '\n';
  os << "oracle_filter = " << (a.oracle_filter ? "true" : "false")
     << "\nvisibility_window = " << num(a.visibility_window) << "\n\n";
  const SweepSpec& s = c.sweep;
  std::vector<std::string> eff, dark;
  for (double e : s.efficiencies) eff.push_back(num(e));
  for (double r : s.dark_rates) dark.push_back(num(r));
  os << "[sweep]\nefficiencies = " << join(eff) << "\ndark_rates = " << join(dark)
     << "\ntrials = " << s.trials << "\nmax_pairs = " << s.max_pairs
     << "\nrival = " << describe(s.rival) << "\nalpha = " << num(s.alpha)
     << "\n\n";
  os << "[fringe]\ncondition = " << to_string(c.fringe.condition)
     << "\nsamples = " << c.fringe.samples
     << "\nunit_mass = " << (c.fringe.unit_mass ? "true" : "false") << '\n';
  return os.str();
}

std::string default_config_text() {
  std::ostringstream os;
  std::string section;
  for (const auto& k : config_keys()) {
    if (k.section != section) {
      if (!section.empty()) os << '\n';
      section = k.section;
      os << '[' << section << "]\n";
    }
    const bool literal = k.default_value.find(' ') == std::string::npos;
    os << (literal ? "" : "# ") << k.key << " = " << k.default_value << '\n';
  }
  return os.str();
}

}  // namespace dcqe
