#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace dcqe {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IllegalBasis : public Error {
 public:
  using Error::Error;
};

class NoConsistentHistory : public Error {
 public:
  using Error::Error;
};

class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

class DegenerateWindow : public Error {
 public:
  using Error::Error;
};

class DegenerateMarginal : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

enum class Side : std::uint8_t { Upper, Lower };

/// Measurement basis on one arm. HybridD1 is the eraser with detector D1
/// inserted on path 1 in front of the splitter; it exists on the lower arm only.
enum class Basis : std::uint8_t { WhichWay, Eraser, HybridD1 };

/// Outcome on one arm: which-way paths 1/2, eraser ports 3/4, or absorption
/// at D1 in the hybrid setting.
enum class SideOutcome : std::uint8_t { P1, P2, E3, E4, D1Click };

inline constexpr std::size_t kOutcomeCount = 5;
inline constexpr std::array<SideOutcome, kOutcomeCount> kAllOutcomes = {
    SideOutcome::P1, SideOutcome::P2, SideOutcome::E3, SideOutcome::E4,
    SideOutcome::D1Click};

enum class TemporalOrder : std::uint8_t { UpperFirst, LowerFirst };

std::string_view to_string(Side s);
std::string_view to_string(Basis b);
std::string_view to_string(SideOutcome o);
std::string_view to_string(TemporalOrder o);

// Parsers throw std::invalid_argument on unknown names.
Basis parse_basis(std::string_view name);
SideOutcome parse_outcome(std::string_view name);
TemporalOrder parse_order(std::string_view name);

/// True when `o` is a legal outcome of a measurement in basis `b`.
bool outcome_legal(Basis b, SideOutcome o);

inline constexpr std::size_t index_of(SideOutcome o) {
  return static_cast<std::size_t>(o);
}

using OutcomePair = std::pair<SideOutcome, SideOutcome>;

/// Dense table over (upper outcome, lower outcome).
template <typename T>
class OutcomeTable {
 public:
  T& operator()(SideOutcome upper, SideOutcome lower) {
    return cells_[index_of(upper)][index_of(lower)];
  }
  const T& operator()(SideOutcome upper, SideOutcome lower) const {
    return cells_[index_of(upper)][index_of(lower)];
  }
  T& operator[](OutcomePair p) { return (*this)(p.first, p.second); }
  const T& operator[](OutcomePair p) const { return (*this)(p.first, p.second); }

  T sum() const {
    T acc{};
    for (const auto& row : cells_)
      for (const auto& c : row) acc += c;
    return acc;
  }

  T upper_marginal(SideOutcome upper) const {
    T acc{};
    for (const auto& c : cells_[index_of(upper)]) acc += c;
    return acc;
  }

  T lower_marginal(SideOutcome lower) const {
    T acc{};
    for (const auto& row : cells_) acc += row[index_of(lower)];
    return acc;
  }

  template <typename F>
  void for_each(F&& f) const {
    for (auto u : kAllOutcomes)
      for (auto l : kAllOutcomes) f(u, l, (*this)(u, l));
  }

  bool operator==(const OutcomeTable&) const = default;

 private:
  std::array<std::array<T, kOutcomeCount>, kOutcomeCount> cells_{};
};

using Distribution = OutcomeTable<double>;

}  // namespace dcqe
