#pragma once

// Brute-force oracles at desk scale: partition functions, Boltzmann marginals
// and samples, two-point correlations, the Nishimori identity, and Monte-Carlo
// estimators of the mutual information and the KL density.

#include <optional>
#include <vector>

#include "fcav/bethe.hpp"
#include "fcav/ensemble.hpp"
#include "fcav/graphmodel.hpp"
#include "fcav/parallel.hpp"

namespace fcav {

struct BoltzmannSummary {
  double log_z = 0.0;
  /// marginals[i][s] = mu(sigma_i = s)
  std::vector<std::vector<double>> marginals;
  /// Pair joints, flattened as [(x * n + y) * q * q + s * q + t]; filled on request.
  std::vector<double> pair_joint;
  /// Two-point correlation scalar; filled with pair_joint.
  std::optional<double> correlation;
};

namespace detail {

inline std::uint64_t checked_states(const FactorGraph& g, const ExactLimits& limits) {
  const double states = std::pow(static_cast<double>(g.q()), g.n());
  if (states > static_cast<double>(limits.max_states))
    throw Error(ErrorCode::CapExceeded, "enumeration of " + std::to_string(states) + " states exceeds cap");
  return static_cast<std::uint64_t>(states);
}

/// ln psi_G(sigma) for every state, in lexicographic order.
inline std::vector<double> log_weights(const FactorGraph& g, const ExactLimits& limits, unsigned workers) {
  const std::uint64_t states = checked_states(g, limits);
  std::vector<double> out(states);
  constexpr std::uint64_t block = 1 << 14;
  const std::size_t blocks = static_cast<std::size_t>((states + block - 1) / block);
  parallel_for(blocks, workers, [&](std::size_t b) {
    std::vector<int> sigma(static_cast<std::size_t>(g.n()));
    const std::uint64_t end = std::min<std::uint64_t>(states, (b + 1) * block);
    for (std::uint64_t s = b * block; s < end; ++s) {
      decode_config(s, g.q(), sigma);
      out[s] = g.log_weight(sigma);
    }
  });
  return out;
}

}  // namespace detail

/// Exact Z and marginals by enumeration of all q^n assignments.
inline BoltzmannSummary partition_function(const FactorGraph& g, bool with_pairs = false, const ExactLimits& limits = {},
                                           unsigned workers = 1) {
  require(g.has_weights() || g.m() == 0, "partition_function: graph has no weights");
  const std::vector<double> lw = detail::log_weights(g, limits, workers);
  const int n = g.n(), q = g.q();
  double shift = -std::numeric_limits<double>::infinity();
  for (double x : lw) shift = std::max(shift, x);
  if (!std::isfinite(shift)) throw Error(ErrorCode::NumericalUnderflow, "partition_function: every state has zero weight");

  BoltzmannSummary out;
  CompensatedSum z;
  std::vector<double> marg(static_cast<std::size_t>(n * q), 0.0);
  if (with_pairs) out.pair_joint.assign(static_cast<std::size_t>(n) * n * q * q, 0.0);
  std::vector<int> sigma(static_cast<std::size_t>(n));
  for (std::uint64_t s = 0; s < lw.size(); ++s) {
    const double w = std::exp(lw[s] - shift);
    if (w == 0.0) continue;
    z.add(w);
    decode_config(s, q, sigma);
    for (int i = 0; i < n; ++i) marg[static_cast<std::size_t>(i * q + sigma[static_cast<std::size_t>(i)])] += w;
    if (with_pairs)
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
          out.pair_joint[(static_cast<std::size_t>(x) * n + y) * q * q + static_cast<std::size_t>(sigma[static_cast<std::size_t>(x)] * q + sigma[static_cast<std::size_t>(y)])] += w;
  }
  const double total = z.value();
  out.log_z = shift + std::log(total);
  out.marginals.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(q)));
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < q; ++s) out.marginals[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)] = marg[static_cast<std::size_t>(i * q + s)] / total;
  if (with_pairs) {
    for (double& p : out.pair_joint) p /= total;
    double corr = 0.0;
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        if (x == y) continue;
        double worst = 0.0;
        for (int s = 0; s < q; ++s)
          for (int t = 0; t < q; ++t) {
            const double joint = out.pair_joint[(static_cast<std::size_t>(x) * n + y) * q * q + static_cast<std::size_t>(s * q + t)];
            worst = std::max(worst, std::abs(joint - out.marginals[static_cast<std::size_t>(x)][static_cast<std::size_t>(s)] *
                                                         out.marginals[static_cast<std::size_t>(y)][static_cast<std::size_t>(t)]));
          }
        corr += worst;
      }
    out.correlation = n > 0 ? corr / (static_cast<double>(n) * n) : 0.0;
  }
  return out;
}

/// (1/n^2) sum over ordered pairs x != y of the largest
/// |mu(s_x = s, s_y = t) - mu(s_x = s) mu(s_y = t)| over spin pairs.
inline double two_point(const FactorGraph& g, const ExactLimits& limits = {}) {
  return *partition_function(g, true, limits).correlation;
}

/// Exact samples from mu_G by one sweep of sorted uniforms through the CDF.
inline std::vector<Assignment> boltzmann_sample(const FactorGraph& g, std::size_t count, std::uint64_t seed,
                                                const ExactLimits& limits = {}) {
  const std::vector<double> lw = detail::log_weights(g, limits, 1);
  double shift = -std::numeric_limits<double>::infinity();
  for (double x : lw) shift = std::max(shift, x);
  if (!std::isfinite(shift)) throw Error(ErrorCode::NumericalUnderflow, "boltzmann_sample: zero total weight");
  std::vector<double> cumulative(lw.size());
  double c = 0.0;
  for (std::size_t s = 0; s < lw.size(); ++s) cumulative[s] = (c += std::exp(lw[s] - shift));
  Rng rng = substream(seed, 0xb017);
  std::vector<double> u(count);
  for (double& x : u) x = uniform01(rng) * c;
  std::sort(u.begin(), u.end());
  std::vector<Assignment> out;
  out.reserve(count);
  std::vector<int> sigma(static_cast<std::size_t>(g.n()));
  std::size_t s = 0;
  for (double x : u) {
    while (s + 1 < cumulative.size() && cumulative[s] <= x) ++s;
    decode_config(s, g.q(), sigma);
    out.emplace_back(sigma, g.q());
  }
  shuffle(out, rng);
  return out;
}

struct NishimoriReport {
  double max_discrepancy = 0.0;
  bool passed = false;
  DegreeSequence sequence;
  std::size_t terms = 0;
};

/// Both sides of the Nishimori identity for every (G, sigma):
///   left  = P[G_hat = G] mu_G(sigma), from direct enumeration of the null
///           ensemble and its partition functions;
///   right = P[sigma_hat = sigma] P[G* = G | sigma], from the expected-weight
///           programme and the exact law of the colour-first planted
///           construction.
inline NishimoriReport nishimori_check(const DegreeSequence& seq, const FamilyPtr& family, double tol = 1e-10,
                                       const ExactLimits& limits = {}) {
  const int q = family->q();
  const auto topologies = enumerate_topologies(seq, limits);
  const std::uint64_t states = ipow(static_cast<std::size_t>(q), seq.n);

  // left side
  std::map<std::pair<GraphKey, std::uint64_t>, double> left;
  CompensatedSum expected_z;
  std::vector<std::pair<GraphKey, std::vector<double>>> graph_terms;
  for (const Topology& t : topologies) {
    detail::for_each_weight_combo(*family, seq.fac_arities, [&](const std::vector<int>& ids) {
      double p = t.probability;
      for (std::size_t a = 0; a < ids.size(); ++a) p *= family->masses(seq.fac_arities[a])[static_cast<std::size_t>(ids[a])];
      const FactorGraph g = graph_from_parts(seq, q, family, t.factor_vars, ids);
      std::vector<double> w(states);
      std::vector<int> sigma(static_cast<std::size_t>(seq.n));
      for (std::uint64_t s = 0; s < states; ++s) {
        decode_config(s, q, sigma);
        w[s] = p * g.weight(sigma);
        expected_z.add(w[s]);
      }
      graph_terms.emplace_back(g.key(), std::move(w));
    });
  }
  const double ez = expected_z.value();
  for (const auto& [key, w] : graph_terms)
    for (std::uint64_t s = 0; s < states; ++s) left[{key, s}] += w[s] / ez;

  // right side
  std::map<std::pair<GraphKey, std::uint64_t>, double> right;
  std::vector<double> ew(states);
  CompensatedSum ew_total;
  std::vector<int> spins(static_cast<std::size_t>(seq.n));
  for (std::uint64_t s = 0; s < states; ++s) {
    decode_config(s, q, spins);
    ew[s] = expected_weight(seq, *family, Assignment(spins, q), limits);
    ew_total.add(ew[s]);
  }
  for (std::uint64_t s = 0; s < states; ++s) {
    decode_config(s, q, spins);
    const double p_sigma = ew[s] / ew_total.value();
    const GraphLaw law = planted_law_sharp(seq, Assignment(spins, q), *family, 0, limits);
    for (const auto& [key, p] : law) right[{key, s}] += p_sigma * p;
  }

  NishimoriReport r;
  r.sequence = seq;
  for (const auto& [k, v] : left) {
    const auto it = right.find(k);
    r.max_discrepancy = std::max(r.max_discrepancy, std::abs(v - (it == right.end() ? 0.0 : it->second)));
  }
  for (const auto& [k, v] : right)
    if (!left.count(k)) r.max_discrepancy = std::max(r.max_discrepancy, v);
  r.terms = std::max(left.size(), right.size());
  r.passed = r.max_discrepancy <= tol;
  return r;
}

inline NishimoriReport nishimori_check(int n, const DegreeSpec& dspec, const DegreeSpec& kspec, const FamilyPtr& family,
                                       double tol, std::uint64_t seed, const ExactLimits& limits = {}) {
  return nishimori_check(sample_degree_sequence(n, dspec, kspec, seed), family, tol, limits);
}

struct MonteCarloValue {
  double value = 0.0;
  double stderr = 0.0;
  /// Mean of the sequence-conditional information term.
  double information = 0.0;
  /// Mean of ln Z(G*) / n.
  double mean_log_z = 0.0;
  long graphs = 0;
};

namespace detail {

struct PlantedSample {
  DegreeSequence seq;
  double log_z_per_var = 0.0;
  double information = 0.0;
  double annealed = 0.0;
};

/// One planted graph with a uniform ground truth and its exact ln Z.
inline PlantedSample planted_sample(const ModelSpec& model, int n, std::uint64_t seed, double xi, const ExactLimits& limits) {
  PlantedSample out;
  out.seq = sample_degree_sequence(n, model.dspec, model.kspec, derive_seed(seed, 0));
  Rng rng = substream(seed, 1);
  const Assignment sigma = uniform_assignment(n, model.q(), rng);
  const FactorGraph g = sample_planted(out.seq, sigma, model.family, 0, derive_seed(seed, 2));
  out.log_z_per_var = partition_function(g, false, limits).log_z / n;
  const double log_q = std::log(static_cast<double>(model.q()));
  double info = 0.0, annealed = (1.0 - static_cast<double>(out.seq.total_var_degree()) / n) * log_q;
  for (int k : out.seq.fac_arities) {
    info += information_per_arity(*model.family, k);
    annealed += log_expected_total(*model.family, k) / n;
  }
  out.information = info / (xi * n);
  out.annealed = annealed;
  return out;
}

}  // namespace detail

/// ln q + information term - ln Z(G*(sigma*)) / n averaged over planted
/// graphs, each with its own degree sequence; the information term uses the
/// sampled arities.
inline MonteCarloValue mi_monte_carlo(const ModelSpec& model, int n, long graphs, std::uint64_t seed, unsigned workers = 1,
                                      const ExactLimits& limits = {}) {
  require(graphs >= 1, "mi_monte_carlo: need at least one graph");
  const double xi = require_xi(model);
  const double log_q = std::log(static_cast<double>(model.q()));
  std::vector<detail::PlantedSample> samples(static_cast<std::size_t>(graphs));
  parallel_for(samples.size(), workers,
               [&](std::size_t i) { samples[i] = detail::planted_sample(model, n, derive_seed(seed, i), xi, limits); });
  RunningStats mi, info, lz;
  for (const auto& s : samples) {
    mi.add(log_q + s.information - s.log_z_per_var);
    info.add(s.information);
    lz.add(s.log_z_per_var);
  }
  return {mi.mean(), mi.stderr_of_mean(), info.mean(), lz.mean(), mi.count()};
}

/// phi*_est - phi_a, where phi*_est averages ln Z(G*)/n over planted graphs
/// and phi_a is the first-moment value of each graph's degree sequence.
inline MonteCarloValue kl_density(const ModelSpec& model, int n, long graphs, std::uint64_t seed, unsigned workers = 1,
                                  const ExactLimits& limits = {}) {
  require(graphs >= 1, "kl_density: need at least one graph");
  const double xi = require_xi(model);
  std::vector<detail::PlantedSample> samples(static_cast<std::size_t>(graphs));
  parallel_for(samples.size(), workers,
               [&](std::size_t i) { samples[i] = detail::planted_sample(model, n, derive_seed(seed, i), xi, limits); });
  RunningStats kl, lz;
  for (const auto& s : samples) {
    kl.add(s.log_z_per_var - s.annealed);
    lz.add(s.log_z_per_var);
  }
  return {kl.mean(), kl.stderr_of_mean(), 0.0, lz.mean(), kl.count()};
}

}  // namespace fcav
