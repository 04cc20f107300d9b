#pragma once

// Degree sequences, assignments and factor graphs.

#include <numeric>
#include <vector>

#include "fcav/weights.hpp"

namespace fcav {

struct DegreeSequence {
  int n = 0;
  std::vector<int> var_degrees;
  std::vector<int> fac_arities;
  /// Draws rejected before this one was accepted.
  long rejections = 0;
  /// Pruned sequences may leave variable clones unmatched (cavities).
  bool pruned = false;

  int m() const { return static_cast<int>(fac_arities.size()); }
  long total_var_degree() const { return std::accumulate(var_degrees.begin(), var_degrees.end(), 0L); }
  long total_fac_degree() const { return std::accumulate(fac_arities.begin(), fac_arities.end(), 0L); }
  long cavities() const { return total_var_degree() - total_fac_degree(); }

  void validate() const {
    require(n >= 0 && static_cast<int>(var_degrees.size()) == n, "degree sequence: n mismatch");
    for (int d : var_degrees) require(d >= 0, "degree sequence: negative degree");
    for (int k : fac_arities) require(k >= 1, "degree sequence: arity must be >= 1");
    if (pruned)
      require(cavities() >= 0, "degree sequence: factor degree exceeds variable degree");
    else
      require(cavities() == 0, "degree sequence: unbalanced");
  }
};

struct Assignment {
  std::vector<int> spins;
  int q = 2;

  Assignment() = default;
  Assignment(std::vector<int> s, int alphabet) : spins(std::move(s)), q(alphabet) { validate(); }

  int n() const { return static_cast<int>(spins.size()); }
  int operator[](std::size_t i) const { return spins[i]; }
  void validate() const {
    for (int s : spins) require(s >= 0 && s < q, "assignment: spin out of range");
  }
  bool operator==(const Assignment& other) const { return spins == other.spins && q == other.q; }
  bool operator<(const Assignment& other) const { return spins < other.spins; }
};

struct Factor {
  /// Index into the family's tables of this arity; -1 for topology only.
  int weight_id = -1;
  /// Neighbour tuple in factor-clone order.
  std::vector<int> vars;
  int arity() const { return static_cast<int>(vars.size()); }
};

/// Unary indicator factor 1{sigma_var = spin}.
struct Pin {
  int var = 0;
  int spin = 0;
  bool operator==(const Pin&) const = default;
};

struct Clone {
  int var = 0;
  int slot = 0;
  bool operator==(const Clone&) const = default;
};

/// Flat identity of a factor graph used to compare laws: per factor
/// (weight id, neighbours...), then (-1, var, spin) per pin.
using GraphKey = std::vector<int>;

class FactorGraph {
 public:
  FactorGraph() = default;

  FactorGraph(int n, int q, std::vector<Factor> factors, FamilyPtr family = nullptr,
              std::vector<Pin> pins = {}, std::vector<Clone> cavities = {})
      : n_(n), q_(q), family_(std::move(family)), factors_(std::move(factors)), pins_(std::move(pins)),
        cavities_(std::move(cavities)) {
    require(n >= 0 && q >= 1, "factor graph: invalid n or q");
    if (family_) require(family_->q() == q, "factor graph: alphabet mismatch with family");
    for (const Factor& f : factors_) {
      require(f.arity() >= 1, "factor graph: empty factor");
      for (int v : f.vars) require(v >= 0 && v < n, "factor graph: variable out of range");
      if (family_ && f.weight_id >= 0)
        require(f.weight_id < static_cast<int>(family_->tables(f.arity()).size()), "factor graph: weight id out of range");
    }
    for (const Pin& p : pins_) require(p.var >= 0 && p.var < n && p.spin >= 0 && p.spin < q, "factor graph: bad pin");
  }

  int n() const { return n_; }
  int q() const { return q_; }
  int m() const { return static_cast<int>(factors_.size()); }
  const std::vector<Factor>& factors() const { return factors_; }
  const std::vector<Pin>& pins() const { return pins_; }
  const std::vector<Clone>& cavities() const { return cavities_; }
  const FamilyPtr& family() const { return family_; }
  bool has_weights() const {
    if (!family_) return false;
    for (const Factor& f : factors_)
      if (f.weight_id < 0) return false;
    return true;
  }

  const WeightTable& table(int factor) const {
    const Factor& f = factors_[static_cast<std::size_t>(factor)];
    require(family_ != nullptr && f.weight_id >= 0, "factor graph: topology only");
    return family_->table(f.arity(), f.weight_id);
  }

  /// psi_G(sigma), including pin indicators.
  double weight(std::span<const int> sigma) const {
    for (const Pin& p : pins_)
      if (sigma[static_cast<std::size_t>(p.var)] != p.spin) return 0.0;
    double w = 1.0;
    std::vector<int> local;
    for (int a = 0; a < m(); ++a) {
      const Factor& f = factors_[static_cast<std::size_t>(a)];
      local.resize(f.vars.size());
      for (std::size_t i = 0; i < f.vars.size(); ++i) local[i] = sigma[static_cast<std::size_t>(f.vars[i])];
      w *= table(a)(local, q_);
    }
    return w;
  }

  double log_weight(std::span<const int> sigma) const {
    const double w = weight(sigma);
    return w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity();
  }

  /// Factor-clone incidences of each variable: (factor, position).
  std::vector<std::vector<std::pair<int, int>>> incidence() const {
    std::vector<std::vector<std::pair<int, int>>> out(static_cast<std::size_t>(n_));
    for (int a = 0; a < m(); ++a)
      for (int i = 0; i < factors_[static_cast<std::size_t>(a)].arity(); ++i)
        out[static_cast<std::size_t>(factors_[static_cast<std::size_t>(a)].vars[static_cast<std::size_t>(i)])].emplace_back(a, i);
    return out;
  }

  /// True when no factor repeats a variable.
  bool is_simple() const {
    for (const Factor& f : factors_) {
      std::vector<int> v = f.vars;
      std::sort(v.begin(), v.end());
      if (std::adjacent_find(v.begin(), v.end()) != v.end()) return false;
    }
    return true;
  }

  GraphKey key() const {
    GraphKey k;
    for (const Factor& f : factors_) {
      k.push_back(f.weight_id);
      k.insert(k.end(), f.vars.begin(), f.vars.end());
    }
    for (const Pin& p : pins_) {
      k.push_back(-1);
      k.push_back(p.var);
      k.push_back(p.spin);
    }
    return k;
  }

  FactorGraph with_factors(std::vector<Factor> factors) const {
    return FactorGraph(n_, q_, std::move(factors), family_, pins_, cavities_);
  }
  FactorGraph with_family(FamilyPtr family) const {
    return FactorGraph(n_, q_, factors_, std::move(family), pins_, cavities_);
  }
  FactorGraph with_pins(std::vector<Pin> pins) const {
    return FactorGraph(n_, q_, factors_, family_, std::move(pins), cavities_);
  }

 private:
  int n_ = 0;
  int q_ = 2;
  FamilyPtr family_;
  std::vector<Factor> factors_;
  std::vector<Pin> pins_;
  std::vector<Clone> cavities_;
};

/// Disjoint union; variables of `b` are shifted by a.n().
inline FactorGraph disjoint_union(const FactorGraph& a, const FactorGraph& b) {
  require(a.q() == b.q() && a.family() == b.family(), "disjoint union: incompatible graphs");
  std::vector<Factor> factors = a.factors();
  for (Factor f : b.factors()) {
    for (int& v : f.vars) v += a.n();
    factors.push_back(std::move(f));
  }
  std::vector<Pin> pins = a.pins();
  for (Pin p : b.pins()) {
    p.var += a.n();
    pins.push_back(p);
  }
  return FactorGraph(a.n() + b.n(), a.q(), std::move(factors), a.family(), std::move(pins));
}

}  // namespace fcav
