#pragma once

// Exact laws of the random graph ensemble at desk scale: topology
// enumeration over clone matchings, expected graph weights, and the planted
// law computed both from its defining reweighting and from the three-stage
// colour-first construction.

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "fcav/graph.hpp"

namespace fcav {

struct ExactLimits {
  /// Boltzmann states enumerated by partition_function and friends.
  std::uint64_t max_states = 1ULL << 24;
  /// Pairing / colouring / combination terms for ensemble enumerations.
  std::uint64_t max_terms = 10'000'000ULL;
};

using GraphLaw = std::map<GraphKey, double>;

namespace detail {

inline std::vector<int> clone_owners(const DegreeSequence& seq) {
  std::vector<int> owner;
  for (int i = 0; i < seq.n; ++i)
    for (int s = 0; s < seq.var_degrees[static_cast<std::size_t>(i)]; ++s) owner.push_back(i);
  return owner;
}

inline std::vector<int> clone_colours(const DegreeSequence& seq, const Assignment& sigma) {
  std::vector<int> colour;
  for (int i = 0; i < seq.n; ++i)
    for (int s = 0; s < seq.var_degrees[static_cast<std::size_t>(i)]; ++s) colour.push_back(sigma.spins[static_cast<std::size_t>(i)]);
  return colour;
}

inline std::vector<int> histogram(std::span<const int> colours, int q) {
  std::vector<int> h(static_cast<std::size_t>(q), 0);
  for (int c : colours) ++h[static_cast<std::size_t>(c)];
  return h;
}

inline double log_factorial(long n) { return std::lgamma(static_cast<double>(n) + 1.0); }

inline std::uint64_t falling_factorial(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    r *= (n - i);
    if (r > cap) return cap + 1;
  }
  return r;
}

/// Iterates all weight-id combinations for the given arities.
template <class Visit>
void for_each_weight_combo(const WeightFamily& family, const std::vector<int>& arities, Visit&& visit) {
  const std::size_t m = arities.size();
  std::vector<int> ids(m, 0);
  std::vector<int> sizes(m);
  for (std::size_t a = 0; a < m; ++a) sizes[a] = static_cast<int>(family.tables(arities[a]).size());
  for (;;) {
    visit(ids);
    std::size_t a = 0;
    while (a < m && ++ids[a] == sizes[a]) ids[a++] = 0;
    if (a == m) return;
  }
}

inline std::uint64_t weight_combo_count(const WeightFamily& family, const std::vector<int>& arities) {
  std::uint64_t c = 1;
  for (int k : arities) c *= family.tables(k).size();
  return c;
}

}  // namespace detail

/// One labelled topology: neighbour tuples per factor in clone order, with
/// its probability under the uniform maximal matching.
struct Topology {
  std::vector<std::vector<int>> factor_vars;
  double probability = 0.0;
};

/// Law of the contracted topology under a uniformly random maximal matching,
/// by enumerating every injective map from factor clones to variable clones.
inline std::vector<Topology> enumerate_topologies(const DegreeSequence& seq, const ExactLimits& limits = {}) {
  seq.validate();
  const std::vector<int> owner = detail::clone_owners(seq);
  const auto total_var = static_cast<std::uint64_t>(owner.size());
  const auto total_fac = static_cast<std::uint64_t>(seq.total_fac_degree());
  const std::uint64_t count = detail::falling_factorial(total_var, total_fac, limits.max_terms);
  if (count > limits.max_terms)
    throw Error(ErrorCode::CapExceeded, "topology enumeration needs more than " + std::to_string(limits.max_terms) + " matchings");

  std::map<std::vector<int>, std::uint64_t> counts;
  std::vector<int> flat(static_cast<std::size_t>(total_fac));
  std::vector<char> used(owner.size(), 0);
  // depth-first over factor clones
  auto recurse = [&](auto&& self, std::size_t pos) -> void {
    if (pos == flat.size()) {
      ++counts[flat];
      return;
    }
    for (std::size_t c = 0; c < owner.size(); ++c) {
      if (used[c]) continue;
      used[c] = 1;
      flat[pos] = owner[c];
      self(self, pos + 1);
      used[c] = 0;
    }
  };
  recurse(recurse, 0);

  std::vector<Topology> out;
  out.reserve(counts.size());
  for (const auto& [f, c] : counts) {
    Topology t;
    std::size_t pos = 0;
    for (int k : seq.fac_arities) {
      t.factor_vars.emplace_back(f.begin() + static_cast<long>(pos), f.begin() + static_cast<long>(pos + static_cast<std::size_t>(k)));
      pos += static_cast<std::size_t>(k);
    }
    t.probability = static_cast<double>(c) / static_cast<double>(count);
    out.push_back(std::move(t));
  }
  return out;
}

/// E[psi_G(sigma) | degree sequence] over the null ensemble.
///
/// A uniform bijection from variable clones onto factor and cavity clones
/// pushes sigma forward to a colouring y that is uniform among colourings
/// with the same histogram as the variable clones. Hence
///   E[psi_G(sigma)] = (prod_z n_z! / N!) * sum_{y : hist(y) = hist} prod_a Ebar_a(y_a),
/// with cavity clones contributing weight one. The sum is evaluated by a
/// histogram dynamic programme over factors.
inline double expected_weight(const DegreeSequence& seq, const WeightFamily& family, const Assignment& sigma,
                              const ExactLimits& limits = {}) {
  seq.validate();
  require(sigma.n() == seq.n, "expected_weight: assignment length");
  const int q = family.q();
  const std::vector<int> target = detail::histogram(detail::clone_colours(seq, sigma), q);

  // Histogram generating polynomial per arity.
  std::map<int, std::map<std::vector<int>, double>> poly_by_arity;
  for (int k : seq.fac_arities) {
    if (poly_by_arity.count(k)) continue;
    auto& poly = poly_by_arity[k];
    const auto ebar = family.expected_table(k);
    std::vector<int> config(static_cast<std::size_t>(k));
    for (std::size_t idx = 0; idx < ebar.size(); ++idx) {
      decode_config(idx, q, config);
      poly[detail::histogram(config, q)] += ebar[idx];
    }
  }
  std::map<std::vector<int>, double> cavity_poly;
  for (int z = 0; z < q; ++z) {
    std::vector<int> h(static_cast<std::size_t>(q), 0);
    h[static_cast<std::size_t>(z)] = 1;
    cavity_poly[h] = 1.0;
  }

  std::map<std::vector<int>, double> state{{std::vector<int>(static_cast<std::size_t>(q), 0), 1.0}};
  std::uint64_t work = 0;
  auto multiply = [&](const std::map<std::vector<int>, double>& poly) {
    std::map<std::vector<int>, double> next;
    for (const auto& [h, w] : state)
      for (const auto& [ph, pw] : poly) {
        std::vector<int> sum = h;
        bool ok = true;
        for (int z = 0; z < q; ++z) {
          sum[static_cast<std::size_t>(z)] += ph[static_cast<std::size_t>(z)];
          if (sum[static_cast<std::size_t>(z)] > target[static_cast<std::size_t>(z)]) ok = false;
        }
        if (++work > limits.max_terms)
          throw Error(ErrorCode::CapExceeded, "expected_weight: histogram programme exceeds term cap");
        if (ok) next[sum] += w * pw;
      }
    state.swap(next);
  };
  for (int k : seq.fac_arities) multiply(poly_by_arity[k]);
  for (long c = 0; c < seq.cavities(); ++c) multiply(cavity_poly);

  const auto it = state.find(target);
  if (it == state.end()) return 0.0;
  double log_norm = -detail::log_factorial(seq.total_var_degree());
  for (int nz : target) log_norm += detail::log_factorial(nz);
  return it->second * std::exp(log_norm);
}

inline FactorGraph graph_from_parts(const DegreeSequence& seq, int q, const FamilyPtr& family,
                                    const std::vector<std::vector<int>>& factor_vars, const std::vector<int>& weight_ids,
                                    std::vector<Pin> pins = {}) {
  std::vector<Factor> factors(factor_vars.size());
  for (std::size_t a = 0; a < factors.size(); ++a) {
    factors[a].vars = factor_vars[a];
    factors[a].weight_id = weight_ids.empty() ? -1 : weight_ids[a];
  }
  (void)seq;
  return FactorGraph(static_cast<int>(seq.n), q, std::move(factors), family, std::move(pins));
}

inline std::vector<Pin> planted_pins(const Assignment& sigma, int theta) {
  std::vector<Pin> pins;
  for (int i = 0; i < theta; ++i) pins.push_back({i, sigma.spins[static_cast<std::size_t>(i)]});
  return pins;
}

namespace detail {

inline GraphKey make_key(const std::vector<std::vector<int>>& factor_vars, const std::vector<int>& ids,
                         const std::vector<Pin>& pins) {
  GraphKey key;
  for (std::size_t a = 0; a < factor_vars.size(); ++a) {
    key.push_back(ids[a]);
    key.insert(key.end(), factor_vars[a].begin(), factor_vars[a].end());
  }
  for (const Pin& p : pins) {
    key.push_back(-1);
    key.push_back(p.var);
    key.push_back(p.spin);
  }
  return key;
}

}  // namespace detail

/// Planted law from its definition: P[G*=G] proportional to P[G=G|D] psi_G(sigma).
inline GraphLaw planted_law_definition(const DegreeSequence& seq, const Assignment& sigma, const WeightFamily& family,
                                       int theta = 0, const ExactLimits& limits = {}) {
  const auto topologies = enumerate_topologies(seq, limits);
  const int q = family.q();
  const std::vector<Pin> pins = planted_pins(sigma, theta);
  if (static_cast<double>(topologies.size()) * static_cast<double>(detail::weight_combo_count(family, seq.fac_arities)) >
      static_cast<double>(limits.max_terms))
    throw Error(ErrorCode::CapExceeded, "planted_law_definition: too many graphs");

  GraphLaw law;
  CompensatedSum total;
  std::vector<int> local;
  for (const Topology& t : topologies) {
    detail::for_each_weight_combo(family, seq.fac_arities, [&](const std::vector<int>& ids) {
      double w = t.probability;
      for (std::size_t a = 0; a < ids.size(); ++a) {
        const int k = seq.fac_arities[a];
        local.resize(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) local[static_cast<std::size_t>(i)] = sigma.spins[static_cast<std::size_t>(t.factor_vars[a][static_cast<std::size_t>(i)])];
        w *= family.masses(k)[static_cast<std::size_t>(ids[a])] * family.table(k, ids[a])(local, q);
      }
      law[detail::make_key(t.factor_vars, ids, pins)] += w;
      total.add(w);
    });
  }
  const double z = total.value();
  for (auto& [key, p] : law) p /= z;
  return law;
}

/// Planted law of the colour-first construction, by enumerating all of its
/// internal randomness: the factor-side colouring conditioned on the clone
/// histogram, the colour-dependent weight choice, and the colour-consistent
/// bijection. Cavity clones are coloured uniformly.
inline GraphLaw planted_law_sharp(const DegreeSequence& seq, const Assignment& sigma, const WeightFamily& family,
                                  int theta = 0, const ExactLimits& limits = {}) {
  seq.validate();
  const int q = family.q();
  const std::vector<int> chi = detail::clone_colours(seq, sigma);
  const std::vector<int> owner = detail::clone_owners(seq);
  const std::vector<int> target = detail::histogram(chi, q);
  const std::size_t slots_a = static_cast<std::size_t>(seq.total_fac_degree());
  const std::size_t slots = chi.size();  // factor clones followed by cavity clones
  const std::vector<Pin> pins = planted_pins(sigma, theta);

  const double colourings = std::pow(static_cast<double>(q), static_cast<double>(slots));
  if (colourings > static_cast<double>(limits.max_terms))
    throw Error(ErrorCode::CapExceeded, "planted_law_sharp: too many colourings");

  // factor offsets
  std::vector<std::size_t> offset;
  {
    std::size_t pos = 0;
    for (int k : seq.fac_arities) {
      offset.push_back(pos);
      pos += static_cast<std::size_t>(k);
    }
  }
  // per-arity normaliser of the factor colour law
  std::map<int, double> ebar_total;
  for (int k : family.arities()) {
    double s = 0.0;
    for (double e : family.expected_table(k)) s += e;
    ebar_total[k] = s;
  }

  // Stage one: y♭ restricted to the target histogram.
  struct Colouring {
    std::vector<int> y;
    double mass;
  };
  std::vector<Colouring> admissible;
  CompensatedSum match_mass;
  std::vector<int> y(slots);
  const auto n_colourings = static_cast<std::uint64_t>(colourings);
  for (std::uint64_t code = 0; code < n_colourings; ++code) {
    decode_config(code, q, y);
    if (detail::histogram(y, q) != target) continue;
    double mass = std::pow(static_cast<double>(q), -static_cast<double>(slots - slots_a));
    for (std::size_t a = 0; a < seq.fac_arities.size(); ++a) {
      const int k = seq.fac_arities[a];
      const std::span<const int> ya(y.data() + offset[a], static_cast<std::size_t>(k));
      mass *= family.expected_table(k)[encode_config(ya, q)] / ebar_total[k];
    }
    admissible.push_back({y, mass});
    match_mass.add(mass);
  }
  const double p_match = match_mass.value();

  // Clones of each colour, for the colour-consistent bijections.
  std::vector<std::vector<int>> clones_of(static_cast<std::size_t>(q));
  for (std::size_t c = 0; c < chi.size(); ++c) clones_of[static_cast<std::size_t>(chi[c])].push_back(static_cast<int>(c));
  double log_bijection = 0.0;
  for (int nz : target) log_bijection -= detail::log_factorial(nz);
  const double p_bijection = std::exp(log_bijection);

  GraphLaw law;
  std::vector<std::vector<int>> factor_vars(seq.fac_arities.size());
  for (std::size_t a = 0; a < factor_vars.size(); ++a) factor_vars[a].resize(static_cast<std::size_t>(seq.fac_arities[a]));
  std::uint64_t work = 0;

  for (const Colouring& col : admissible) {
    const double p_y = col.mass / p_match;
    // slots of each colour under y
    std::vector<std::vector<int>> slots_of(static_cast<std::size_t>(q));
    for (std::size_t s = 0; s < slots; ++s) slots_of[static_cast<std::size_t>(col.y[s])].push_back(static_cast<int>(s));
    // stage two: weight choice law given y (independent across factors)
    std::vector<std::vector<double>> choice(seq.fac_arities.size());
    for (std::size_t a = 0; a < choice.size(); ++a) {
      const int k = seq.fac_arities[a];
      const std::span<const int> ya(col.y.data() + offset[a], static_cast<std::size_t>(k));
      const std::size_t idx = encode_config(ya, q);
      const double ebar = family.expected_table(k)[idx];
      const auto& tables = family.tables(k);
      for (std::size_t t = 0; t < tables.size(); ++t)
        choice[a].push_back(family.masses(k)[t] * tables[t].values[idx] / ebar);
    }
    // stage three: all colour-consistent bijections, colour by colour
    std::vector<std::vector<int>> perm(static_cast<std::size_t>(q));
    for (int z = 0; z < q; ++z) perm[static_cast<std::size_t>(z)] = slots_of[static_cast<std::size_t>(z)];
    for (auto& p : perm) std::sort(p.begin(), p.end());
    for (;;) {
      // clone clones_of[z][i] -> slot perm[z][i]
      std::vector<int> slot_owner(slots, -1);
      for (int z = 0; z < q; ++z)
        for (std::size_t i = 0; i < perm[static_cast<std::size_t>(z)].size(); ++i)
          slot_owner[static_cast<std::size_t>(perm[static_cast<std::size_t>(z)][i])] = owner[static_cast<std::size_t>(clones_of[static_cast<std::size_t>(z)][i])];
      for (std::size_t a = 0; a < factor_vars.size(); ++a)
        for (std::size_t i = 0; i < factor_vars[a].size(); ++i) factor_vars[a][i] = slot_owner[offset[a] + i];
      detail::for_each_weight_combo(family, seq.fac_arities, [&](const std::vector<int>& ids) {
        if (++work > limits.max_terms) throw Error(ErrorCode::CapExceeded, "planted_law_sharp: term cap");
        double p = p_y * p_bijection;
        for (std::size_t a = 0; a < ids.size(); ++a) p *= choice[a][static_cast<std::size_t>(ids[a])];
        law[detail::make_key(factor_vars, ids, pins)] += p;
      });
      // next combination of per-colour permutations
      int z = 0;
      while (z < q && !std::next_permutation(perm[static_cast<std::size_t>(z)].begin(), perm[static_cast<std::size_t>(z)].end())) ++z;
      if (z == q) break;
    }
  }
  return law;
}

/// Largest termwise difference between two laws over the union of keys.
inline double max_law_difference(const GraphLaw& a, const GraphLaw& b) {
  double worst = 0.0;
  for (const auto& [key, p] : a) {
    const auto it = b.find(key);
    worst = std::max(worst, std::abs(p - (it == b.end() ? 0.0 : it->second)));
  }
  for (const auto& [key, p] : b)
    if (!a.count(key)) worst = std::max(worst, p);
  return worst;
}

}  // namespace fcav
