#pragma once

// Bounded integer degree laws.

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fcav/common.hpp"

namespace fcav {

class DegreeSpec {
 public:
  static constexpr int kDefaultMaxDegree = 64;

  DegreeSpec() : DegreeSpec({1}, {1.0}) {}

  /// Entries with zero mass are dropped and duplicates merged. Masses must be
  /// nonnegative and sum to one within 1e-12. A zero mean is representable so
  /// that the DEG checker can report it; operations that need a positive mean
  /// raise ZeroMean.
  DegreeSpec(const std::vector<int>& support, const std::vector<double>& mass,
             int max_degree = kDefaultMaxDegree)
      : max_degree_(max_degree) {
    require(support.size() == mass.size(), "degree spec: support and mass differ in length");
    require(!support.empty(), "degree spec: empty support");
    std::map<int, double> merged;
    double total = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      require(support[i] >= 0, "degree spec: negative degree");
      require(support[i] <= max_degree, "degree spec: degree " + std::to_string(support[i]) +
                                            " above cap " + std::to_string(max_degree));
      require(mass[i] >= 0.0 && std::isfinite(mass[i]), "degree spec: invalid mass");
      total += mass[i];
      if (mass[i] > 0.0) merged[support[i]] += mass[i];
    }
    require(std::abs(total - 1.0) <= 1e-12, "degree spec: masses sum to " + std::to_string(total));
    for (const auto& [value, p] : merged) {
      support_.push_back(value);
      mass_.push_back(p);
    }
    finish();
  }

  static DegreeSpec constant(int value) { return DegreeSpec({value}, {1.0}); }

  /// Truncates a pmf given on 0..pmf.size()-1 at max_degree and renormalises;
  /// the discarded mass is kept in truncated_mass().
  static DegreeSpec truncate_and_renormalize(const std::vector<double>& pmf,
                                             int max_degree = kDefaultMaxDegree) {
    double kept = 0.0, total = 0.0;
    for (std::size_t v = 0; v < pmf.size(); ++v) {
      total += pmf[v];
      if (static_cast<int>(v) <= max_degree) kept += pmf[v];
    }
    require(kept > 0.0, "degree spec: no mass below the cap");
    std::vector<int> support;
    std::vector<double> mass;
    for (std::size_t v = 0; v < pmf.size() && static_cast<int>(v) <= max_degree; ++v) {
      if (pmf[v] <= 0.0) continue;
      support.push_back(static_cast<int>(v));
      mass.push_back(pmf[v] / kept);
    }
    renormalize_exactly(mass);
    DegreeSpec spec(support, mass, max_degree);
    spec.truncated_mass_ = std::max(0.0, total - kept);
    return spec;
  }

  /// Poisson(mean) truncated at max_degree.
  static DegreeSpec poisson(double mean, int max_degree = kDefaultMaxDegree) {
    require(mean >= 0.0, "poisson degree spec: negative mean");
    std::vector<double> pmf(static_cast<std::size_t>(max_degree) + 1);
    double log_p = -mean;
    for (int v = 0; v <= max_degree; ++v) {
      if (v > 0) log_p += std::log(mean) - std::log(static_cast<double>(v));
      pmf[static_cast<std::size_t>(v)] = mean > 0.0 ? std::exp(log_p) : (v == 0 ? 1.0 : 0.0);
    }
    double kept = 0.0;
    for (double p : pmf) kept += p;
    auto spec = truncate_and_renormalize(pmf, max_degree);
    spec.truncated_mass_ = std::max(0.0, 1.0 - kept);
    return spec;
  }

  const std::vector<int>& support() const { return support_; }
  const std::vector<double>& mass() const { return mass_; }
  double mean() const { return mean_; }
  double second_moment() const { return second_; }
  double truncated_mass() const { return truncated_mass_; }
  int max_degree() const { return max_degree_; }
  int min_value() const { return support_.front(); }
  int max_value() const { return support_.back(); }
  bool is_constant() const { return support_.size() == 1; }

  double probability(int value) const {
    for (std::size_t i = 0; i < support_.size(); ++i)
      if (support_[i] == value) return mass_[i];
    return 0.0;
  }

  int sample(Rng& rng) const { return support_[sample_cumulative(cumulative_, rng)]; }

  /// "2:0.5,3:0.5"
  std::string describe() const {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < support_.size(); ++i) {
      if (i) out << ',';
      out << support_[i] << ':' << mass_[i];
    }
    return out.str();
  }

  bool operator==(const DegreeSpec& other) const {
    return support_ == other.support_ && mass_ == other.mass_;
  }

 private:
  static void renormalize_exactly(std::vector<double>& mass) {
    double s = 0.0;
    for (double p : mass) s += p;
    for (double& p : mass) p /= s;
  }

  void finish() {
    mean_ = second_ = 0.0;
    cumulative_.clear();
    double c = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) {
      mean_ += support_[i] * mass_[i];
      second_ += static_cast<double>(support_[i]) * support_[i] * mass_[i];
      c += mass_[i];
      cumulative_.push_back(c);
    }
  }

  std::vector<int> support_;
  std::vector<double> mass_;
  std::vector<double> cumulative_;
  double mean_ = 0.0;
  double second_ = 0.0;
  double truncated_mass_ = 0.0;
  int max_degree_ = kDefaultMaxDegree;
};

/// Parses "2:0.5,3:0.5", a bare constant "3", or "po:2.5" (truncated Poisson).
inline DegreeSpec parse_degree_spec(const std::string& text) {
  try {
    if (text.rfind("po:", 0) == 0) return DegreeSpec::poisson(std::stod(text.substr(3)));
    if (text.find(':') == std::string::npos) return DegreeSpec::constant(std::stoi(text));
    std::vector<int> support;
    std::vector<double> mass;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw Error(ErrorCode::Parse, "degree spec item '" + item + "'");
      support.push_back(std::stoi(item.substr(0, colon)));
      mass.push_back(std::stod(item.substr(colon + 1)));
    }
    return DegreeSpec(support, mass);
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::Parse, "degree spec '" + text + "'");
  }
}

}  // namespace fcav
