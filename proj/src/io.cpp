#include "dcqe/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

namespace dcqe {
namespace {

constexpr std::string_view kClicksHeader = "pairId,detectorId,timestamp_s,screenX_m";
constexpr std::string_view kOutcomesHeader =
    "pairId,upper,lower,resolvedLowerBasis,hiddenPath,hiddenTag";

std::string format(const char* fmt, double v) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, fmt, v);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void corrupt(std::size_t line_no, const std::string& what) {
  throw LogError("line " + std::to_string(line_no) + ": " + what);
}

std::uint64_t parse_u64(std::string_view s, std::size_t line_no,
                        const char* field) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    corrupt(line_no, std::string("bad ") + field + " '" + std::string(s) + "'");
  return v;
}

double parse_double(std::string_view s, std::size_t line_no, const char* field) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    corrupt(line_no, std::string("bad ") + field + " '" + std::string(s) + "'");
  return v;
}

template <typename F>
auto parse_enum(F parse, std::string_view s, std::size_t line_no,
                const char* field) {
  try {
    return parse(s);
  } catch (const std::invalid_argument&) {
    corrupt(line_no, std::string("bad ") + field + " '" + std::string(s) + "'");
  }
}

bool getline_trimmed(std::istream& is, std::string& line) {
  if (!std::getline(is, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

void expect_header(std::istream& is, std::string_view header) {
  std::string line;
  if (!getline_trimmed(is, line)) throw LogError("empty log file");
  if (line != header)
    throw LogError("line 1: expected header '" + std::string(header) + "'");
}

}  // namespace

double quantize_timestamp(double t) {
  return std::strtod(format("%.12g", t).c_str(), nullptr);
}

void quantize_timestamps(std::vector<ClickRecord>& clicks) {
  for (auto& c : clicks) c.timestamp = quantize_timestamp(c.timestamp);
}

void write_clicks_csv(std::ostream& os, std::span<const ClickRecord> clicks) {
  os << kClicksHeader << '\n';
  for (const auto& c : clicks) {
    if (c.pair_id) os << *c.pair_id;
    os << ',' << to_string(c.detector) << ',' << format("%.12g", c.timestamp)
       << ',';
    if (c.screen_x) os << format("%.17g", *c.screen_x);
    os << '\n';
  }
}

std::vector<ClickRecord> read_clicks_csv(std::istream& is) {
  expect_header(is, kClicksHeader);
  std::vector<ClickRecord> out;
  std::string line;
  std::size_t line_no = 1;
  while (getline_trimmed(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 4) corrupt(line_no, "expected 4 fields");
    ClickRecord c;
    if (!f[0].empty()) c.pair_id = parse_u64(f[0], line_no, "pairId");
    c.detector = parse_enum(parse_detector, f[1], line_no, "detectorId");
    c.timestamp = parse_double(f[2], line_no, "timestamp_s");
    if (c.timestamp < 0.0) corrupt(line_no, "negative timestamp");
    if (!f[3].empty()) c.screen_x = parse_double(f[3], line_no, "screenX_m");
    out.push_back(c);
  }
  if (!is.eof()) throw LogError("read error after line " + std::to_string(line_no));
  return out;
}

void write_outcomes_csv(std::ostream& os, std::span<const PairOutcome> raw,
                        bool screen) {
  os << kOutcomesHeader << '\n';
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& o = raw[i];
    os << i << ',' << (screen ? std::string_view("Screen") : to_string(o.upper))
       << ',' << to_string(o.lower) << ',' << to_string(o.resolved_lower_basis)
       << ',';
    if (o.hidden) os << o.hidden->path;
    os << ',';
    if (o.hidden) os << o.hidden->splitter_tag;
    os << '\n';
  }
}

std::vector<OutcomeRow> read_outcomes_csv(std::istream& is) {
  expect_header(is, kOutcomesHeader);
  std::vector<OutcomeRow> out;
  std::string line;
  std::size_t line_no = 1;
  while (getline_trimmed(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 6) corrupt(line_no, "expected 6 fields");
    OutcomeRow r;
    r.pair_id = parse_u64(f[0], line_no, "pairId");
    if (f[1] != "Screen") r.upper = parse_enum(parse_outcome, f[1], line_no, "upper");
    r.lower = parse_enum(parse_outcome, f[2], line_no, "lower");
    r.resolved_lower_basis =
        parse_enum(parse_basis, f[3], line_no, "resolvedLowerBasis");
    if (f[4].empty() != f[5].empty())
      corrupt(line_no, "hiddenPath and hiddenTag must both be set or empty");
    if (!f[4].empty()) {
      HiddenVariable h;
      h.path = static_cast<int>(parse_u64(f[4], line_no, "hiddenPath"));
      h.splitter_tag = static_cast<int>(parse_u64(f[5], line_no, "hiddenTag"));
      if ((h.path != 1 && h.path != 2) || (h.splitter_tag != 3 && h.splitter_tag != 4))
        corrupt(line_no, "hidden variable out of range");
      r.hidden = h;
    }
    out.push_back(r);
  }
  if (!is.eof()) throw LogError("read error after line " + std::to_string(line_no));
  return out;
}

void write_table_csv(std::ostream& os, const JointTable& table) {
  os << "upper,lower,count\n";
  table.counts.for_each([&](SideOutcome u, SideOutcome l, std::uint64_t n) {
    if (n > 0) os << to_string(u) << ',' << to_string(l) << ',' << n << '\n';
  });
}

}  // namespace dcqe
