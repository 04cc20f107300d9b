#pragma once

#include <map>
#include <memory>
#include <string>

#include "fcav/degree.hpp"
#include "fcav/weights.hpp"

namespace fcav {

/// A complete random factor graph model: alphabet, degree laws and weights.
struct ModelSpec {
  std::string name = "custom";
  DegreeSpec dspec;
  DegreeSpec kspec;
  FamilyPtr family;
  /// Named parameters (eta, beta, d, r, ...) for reporting and round trips.
  std::map<std::string, double> params;
  /// "planted" for teacher-student targets, "null" for the Potts reading.
  std::string focus = "planted";

  int q() const { return family->q(); }

  void validate() const {
    require(family != nullptr, "model: missing weight family");
    family->validate();
    for (int k : kspec.support())
      require(family->supports(k), "model: family lacks arity " + std::to_string(k) + " from kspec");
  }
};

}  // namespace fcav
