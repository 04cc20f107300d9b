#pragma once

// Sum-product belief propagation on a single factor graph instance. Pins act
// as unary priors.

#include <vector>

#include "fcav/graph.hpp"

namespace fcav {

struct BPState {
  FactorGraph graph;
  /// Per edge (factor clone, in factor order), q entries each.
  std::vector<double> var_to_fac;
  std::vector<double> fac_to_var;
  std::vector<std::size_t> edge_offset;
  int iterations = 0;
  /// Sup-norm change of the last sweep.
  double last_change = 0.0;
  bool converged = false;
};

namespace detail {

inline std::vector<double> pin_priors(const FactorGraph& g) {
  std::vector<double> prior(static_cast<std::size_t>(g.n() * g.q()), 1.0);
  for (const Pin& p : g.pins())
    for (int s = 0; s < g.q(); ++s)
      if (s != p.spin) prior[static_cast<std::size_t>(p.var * g.q() + s)] = 0.0;
  return prior;
}

inline void normalize(std::span<double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  if (s > 0.0)
    for (double& x : v) x /= s;
  else
    for (double& x : v) x = 1.0 / static_cast<double>(v.size());
}

/// Unnormalised product of incoming factor messages at variable i,
/// excluding edge `skip` (or none when skip == npos).
inline void variable_belief(const BPState& st, const std::vector<std::vector<std::pair<int, int>>>& inc,
                            const std::vector<double>& prior, int i, std::size_t skip, std::span<double> out) {
  const int q = st.graph.q();
  for (int s = 0; s < q; ++s) out[static_cast<std::size_t>(s)] = prior[static_cast<std::size_t>(i * q + s)];
  for (const auto& [a, pos] : inc[static_cast<std::size_t>(i)]) {
    const std::size_t e = st.edge_offset[static_cast<std::size_t>(a)] + static_cast<std::size_t>(pos);
    if (e == skip) continue;
    for (int s = 0; s < q; ++s) out[static_cast<std::size_t>(s)] *= st.fac_to_var[e * static_cast<std::size_t>(q) + static_cast<std::size_t>(s)];
  }
}

/// sum over tau with tau_pos = s of psi(tau) prod_{j != pos} nu_j(tau_j).
inline void factor_message(const BPState& st, int a, int pos, std::span<double> out) {
  const FactorGraph& g = st.graph;
  const int q = g.q();
  const Factor& f = g.factors()[static_cast<std::size_t>(a)];
  const WeightTable& table = g.table(a);
  const std::size_t base = st.edge_offset[static_cast<std::size_t>(a)];
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<int> tau(f.vars.size());
  for (std::size_t idx = 0; idx < table.values.size(); ++idx) {
    decode_config(idx, q, tau);
    double w = table.values[idx];
    for (std::size_t j = 0; j < tau.size(); ++j)
      if (static_cast<int>(j) != pos) w *= st.var_to_fac[(base + j) * static_cast<std::size_t>(q) + static_cast<std::size_t>(tau[j])];
    out[static_cast<std::size_t>(tau[static_cast<std::size_t>(pos)])] += w;
  }
}

}  // namespace detail

/// Synchronous damped sum-product sweeps until the sup-norm change drops
/// below tol or max_iters is reached. Non-convergence is reported in the
/// state, not thrown.
inline BPState bp_run(const FactorGraph& g, int max_iters = 1000, double damping = 0.5, double tol = 1e-10) {
  require(damping >= 0.0 && damping < 1.0, "bp_run: damping must lie in [0, 1)");
  require(g.has_weights() || g.m() == 0, "bp_run: graph has no weights");
  require(g.m() == 0 || g.family()->min_entry() > 0.0, "bp_run: weights must be strictly positive");
  BPState st;
  st.graph = g;
  const int q = g.q();
  std::size_t edges = 0;
  for (const Factor& f : g.factors()) {
    st.edge_offset.push_back(edges);
    edges += f.vars.size();
  }
  st.var_to_fac.assign(edges * static_cast<std::size_t>(q), 1.0 / q);
  st.fac_to_var.assign(edges * static_cast<std::size_t>(q), 1.0 / q);
  const auto inc = g.incidence();
  const auto prior = detail::pin_priors(g);
  std::vector<double> buf(static_cast<std::size_t>(q));
  std::vector<double> new_v2f(st.var_to_fac.size()), new_f2v(st.fac_to_var.size());

  // Pinned variables send their prior from the first sweep.
  for (int it = 0; it < max_iters; ++it) {
    for (int i = 0; i < g.n(); ++i)
      for (const auto& [a, pos] : inc[static_cast<std::size_t>(i)]) {
        const std::size_t e = st.edge_offset[static_cast<std::size_t>(a)] + static_cast<std::size_t>(pos);
        detail::variable_belief(st, inc, prior, i, e, buf);
        detail::normalize(buf);
        std::copy(buf.begin(), buf.end(), new_v2f.begin() + static_cast<long>(e * static_cast<std::size_t>(q)));
      }
    double change = 0.0;
    for (std::size_t k = 0; k < new_v2f.size(); ++k) {
      const double v = (1.0 - damping) * new_v2f[k] + damping * st.var_to_fac[k];
      change = std::max(change, std::abs(v - st.var_to_fac[k]));
      st.var_to_fac[k] = v;
    }
    for (int a = 0; a < g.m(); ++a)
      for (int pos = 0; pos < g.factors()[static_cast<std::size_t>(a)].arity(); ++pos) {
        detail::factor_message(st, a, pos, buf);
        detail::normalize(buf);
        const std::size_t e = st.edge_offset[static_cast<std::size_t>(a)] + static_cast<std::size_t>(pos);
        std::copy(buf.begin(), buf.end(), new_f2v.begin() + static_cast<long>(e * static_cast<std::size_t>(q)));
      }
    for (std::size_t k = 0; k < new_f2v.size(); ++k) {
      const double v = (1.0 - damping) * new_f2v[k] + damping * st.fac_to_var[k];
      change = std::max(change, std::abs(v - st.fac_to_var[k]));
      st.fac_to_var[k] = v;
    }
    st.iterations = it + 1;
    st.last_change = change;
    if (change < tol) {
      st.converged = true;
      break;
    }
  }
  if (g.m() == 0) st.converged = true;
  return st;
}

inline std::vector<std::vector<double>> bp_marginals(const BPState& st) {
  const FactorGraph& g = st.graph;
  const auto inc = g.incidence();
  const auto prior = detail::pin_priors(g);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(g.n()), std::vector<double>(static_cast<std::size_t>(g.q())));
  for (int i = 0; i < g.n(); ++i) {
    detail::variable_belief(st, inc, prior, i, static_cast<std::size_t>(-1), out[static_cast<std::size_t>(i)]);
    detail::normalize(out[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// Instance Bethe free entropy sum_a ln Z_a + sum_i ln Z_i - sum_edges ln Z_ia.
inline double bethe_instance(const BPState& st) {
  const FactorGraph& g = st.graph;
  const int q = g.q();
  const auto inc = g.incidence();
  const auto prior = detail::pin_priors(g);
  CompensatedSum total;
  std::vector<double> buf(static_cast<std::size_t>(q));
  for (int i = 0; i < g.n(); ++i) {
    detail::variable_belief(st, inc, prior, i, static_cast<std::size_t>(-1), buf);
    double z = 0.0;
    for (double x : buf) z += x;
    total.add(std::log(z));
  }
  for (int a = 0; a < g.m(); ++a) {
    const Factor& f = g.factors()[static_cast<std::size_t>(a)];
    const WeightTable& table = g.table(a);
    const std::size_t base = st.edge_offset[static_cast<std::size_t>(a)];
    std::vector<int> tau(f.vars.size());
    double z = 0.0;
    for (std::size_t idx = 0; idx < table.values.size(); ++idx) {
      decode_config(idx, q, tau);
      double w = table.values[idx];
      for (std::size_t j = 0; j < tau.size(); ++j) w *= st.var_to_fac[(base + j) * static_cast<std::size_t>(q) + static_cast<std::size_t>(tau[j])];
      z += w;
    }
    total.add(std::log(z));
    for (std::size_t j = 0; j < f.vars.size(); ++j) {
      double zia = 0.0;
      for (int s = 0; s < q; ++s)
        zia += st.var_to_fac[(base + j) * static_cast<std::size_t>(q) + static_cast<std::size_t>(s)] *
               st.fac_to_var[(base + j) * static_cast<std::size_t>(q) + static_cast<std::size_t>(s)];
      total.add(-std::log(zia));
    }
  }
  return total.value();
}

}  // namespace fcav
