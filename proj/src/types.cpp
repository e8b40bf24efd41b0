#include "dcqe/types.hpp"

#include <stdexcept>

namespace dcqe {

std::string_view to_string(Side s) {
  return s == Side::Upper ? "upper" : "lower";
}

std::string_view to_string(Basis b) {
  switch (b) {
    case Basis::WhichWay: return "WhichWay";
    case Basis::Eraser: return "Eraser";
    case Basis::HybridD1: return "HybridD1";
  }
  return "?";
}

std::string_view to_string(SideOutcome o) {
  switch (o) {
    case SideOutcome::P1: return "P1";
    case SideOutcome::P2: return "P2";
    case SideOutcome::E3: return "E3";
    case SideOutcome::E4: return "E4";
    case SideOutcome::D1Click: return "D1Click";
  }
  return "?";
}

std::string_view to_string(TemporalOrder o) {
  return o == TemporalOrder::UpperFirst ? "UpperFirst" : "LowerFirst";
}

Basis parse_basis(std::string_view name) {
  for (auto b : {Basis::WhichWay, Basis::Eraser, Basis::HybridD1})
    if (to_string(b) == name) return b;
  throw std::invalid_argument("unknown basis '" + std::string(name) + "'");
}

SideOutcome parse_outcome(std::string_view name) {
  for (auto o : kAllOutcomes)
    if (to_string(o) == name) return o;
  throw std::invalid_argument("unknown outcome '" + std::string(name) + "'");
}

TemporalOrder parse_order(std::string_view name) {
  for (auto o : {TemporalOrder::UpperFirst, TemporalOrder::LowerFirst})
    if (to_string(o) == name) return o;
  throw std::invalid_argument("unknown temporal order '" + std::string(name) +
                              "'");
}

bool outcome_legal(Basis b, SideOutcome o) {
  switch (b) {
    case Basis::WhichWay:
      return o == SideOutcome::P1 || o == SideOutcome::P2;
    case Basis::Eraser:
      return o == SideOutcome::E3 || o == SideOutcome::E4;
    case Basis::HybridD1:
      return o == SideOutcome::D1Click || o == SideOutcome::E3 ||
             o == SideOutcome::E4;
  }
  return false;
}

}  // namespace dcqe
