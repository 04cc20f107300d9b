#pragma once

// Executable checkers for the model hypotheses: degree moments (DEG), common
// coordinate marginals (SYM), balance of the expected weight (BAL), and the
// positivity inequality (POS).

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fcav/model.hpp"
#include "fcav/parallel.hpp"

namespace fcav {

struct CheckReport {
  std::string name;
  bool passed = false;
  /// Violating configuration; present iff the check failed.
  std::optional<std::string> witness;
  /// Largest violation magnitude observed (0 when none).
  double detail = 0.0;
  std::string note;
  std::map<std::string, double> values;
};

inline CheckReport check_deg(const DegreeSpec& dspec, const DegreeSpec& kspec) {
  CheckReport r;
  r.name = "DEG";
  r.values = {{"mean_d", dspec.mean()},
              {"mean_k", kspec.mean()},
              {"second_moment_d", dspec.second_moment()},
              {"second_moment_k", kspec.second_moment()}};
  if (dspec.mean() <= 0.0)
    r.witness = "E[d]=0";
  else if (kspec.mean() <= 0.0)
    r.witness = "E[k]=0";
  r.passed = !r.witness;
  r.note = "bounded support: all moments finite";
  return r;
}

struct SymResult {
  CheckReport report;
  std::optional<double> xi;
};

/// Exact loop over arities, tables, coordinates and spins.
inline SymResult check_sym(const WeightFamily& family, double tol = 1e-12) {
  SymResult out;
  CheckReport& r = out.report;
  r.name = "SYM";
  const int q = family.q();
  const double min_entry = family.min_entry();
  r.values["min_entry"] = min_entry;
  r.values["max_entry"] = family.max_entry();
  if (!(min_entry > 0.0)) {
    r.witness = "non-positive table entry " + std::to_string(min_entry);
    r.detail = -min_entry;
  }
  std::optional<double> ref;
  for (int k : family.arities()) {
    const auto& tables = family.tables(k);
    for (std::size_t t = 0; t < tables.size(); ++t)
      for (int j = 0; j < k; ++j)
        for (int w = 0; w < q; ++w) {
          const double v = coordinate_marginal(tables[t], q, j, w);
          if (!ref) {
            ref = v;
            continue;
          }
          const double dev = std::abs(v - *ref);
          if (dev > r.detail) r.detail = dev;
          if (dev > tol && !r.witness) {
            std::ostringstream s;
            s << "k=" << k << " table=" << t << " j=" << j + 1 << " omega=" << w << " marginal=" << v
              << " reference=" << *ref;
            r.witness = s.str();
          }
        }
  }
  r.passed = !r.witness;
  if (r.passed) {
    out.xi = ref;
    r.values["xi"] = *ref;
  }
  return out;
}

namespace detail {

/// mu -> sum_sigma Ebar_k(sigma) prod_i mu(sigma_i), expanded coordinate by
/// coordinate.
inline double balance_function(std::span<const double> ebar, int q, int k, std::span<const double> mu) {
  std::vector<double> cur(ebar.begin(), ebar.end());
  std::size_t size = cur.size();
  for (int i = 0; i < k; ++i) {
    const std::size_t next_size = size / static_cast<std::size_t>(q);
    for (std::size_t idx = 0; idx < next_size; ++idx) {
      double s = 0.0;
      for (int z = 0; z < q; ++z) s += cur[idx * static_cast<std::size_t>(q) + static_cast<std::size_t>(z)] * mu[static_cast<std::size_t>(z)];
      cur[idx] = s;
    }
    size = next_size;
  }
  return cur[0];
}

inline void simplex_grid(int q, int resolution, std::vector<double>& points) {
  std::vector<int> c(static_cast<std::size_t>(q), 0);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == q - 1) {
      c[static_cast<std::size_t>(pos)] = left;
      for (int v : c) points.push_back(static_cast<double>(v) / resolution);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      c[static_cast<std::size_t>(pos)] = v;
      self(self, pos + 1, left - v);
    }
  };
  rec(rec, 0, resolution);
}

}  // namespace detail

struct BalOptions {
  int resolution = 64;
  double tol = 1e-9;
  int concavity_pairs = 4000;
  std::uint64_t seed = 0xba1;
  /// Grid points per arity above which the resolution is reduced.
  std::size_t max_grid_points = 200'000;
};

/// Grid search: the uniform point must attain the grid maximum, and midpoint
/// concavity must hold on sampled grid pairs.
inline CheckReport check_bal(const WeightFamily& family, const BalOptions& options = {}) {
  CheckReport r;
  r.name = "BAL";
  const int q = family.q();
  int resolution = options.resolution;
  auto grid_size = [q](int res) {
    double c = 1.0;
    for (int i = 1; i < q; ++i) c = c * (res + i) / i;
    return c;
  };
  while (resolution > 1 && grid_size(resolution) > static_cast<double>(options.max_grid_points)) resolution /= 2;
  if (resolution != options.resolution) r.note = "GridTooCoarse: resolution reduced to 1/" + std::to_string(resolution);
  r.values["resolution"] = resolution;

  std::vector<double> grid;
  detail::simplex_grid(q, resolution, grid);
  const std::size_t points = grid.size() / static_cast<std::size_t>(q);
  const std::vector<double> uniform(static_cast<std::size_t>(q), 1.0 / q);
  Rng rng = substream(options.seed);

  for (int k : family.arities()) {
    const auto ebar = family.expected_table(k);
    std::vector<double> f(points);
    std::size_t arg = 0;
    for (std::size_t p = 0; p < points; ++p) {
      f[p] = detail::balance_function(ebar, q, k, std::span<const double>(grid.data() + p * static_cast<std::size_t>(q), static_cast<std::size_t>(q)));
      if (f[p] > f[arg]) arg = p;
    }
    const double fu = detail::balance_function(ebar, q, k, uniform);
    const double gap = f[arg] - fu;
    if (gap > r.detail) r.detail = gap;
    if (gap > options.tol && !r.witness) {
      std::ostringstream s;
      s << "k=" << k << " grid point (";
      for (int z = 0; z < q; ++z) s << (z ? "," : "") << grid[arg * static_cast<std::size_t>(q) + static_cast<std::size_t>(z)];
      s << ") value " << f[arg] << " exceeds uniform value " << fu;
      r.witness = s.str();
    }
    std::vector<double> mid(static_cast<std::size_t>(q));
    for (int t = 0; t < options.concavity_pairs && points > 1; ++t) {
      const std::size_t a = uniform_index(rng, points), b = uniform_index(rng, points);
      for (int z = 0; z < q; ++z)
        mid[static_cast<std::size_t>(z)] = 0.5 * (grid[a * static_cast<std::size_t>(q) + static_cast<std::size_t>(z)] + grid[b * static_cast<std::size_t>(q) + static_cast<std::size_t>(z)]);
      const double deficit = 0.5 * (f[a] + f[b]) - detail::balance_function(ebar, q, k, mid);
      if (deficit > r.detail) r.detail = deficit;
      if (deficit > options.tol && !r.witness)
        r.witness = "k=" + std::to_string(k) + " midpoint concavity fails between grid points " + std::to_string(a) +
                    " and " + std::to_string(b);
    }
  }
  r.passed = !r.witness;
  return r;
}

/// A finitely supported measure on the simplex.
struct SimplexMixture {
  int q = 2;
  std::vector<double> points;  // flat, q per atom
  std::vector<double> weights;
  std::size_t size() const { return weights.size(); }
  std::span<const double> point(std::size_t i) const {
    return {points.data() + i * static_cast<std::size_t>(q), static_cast<std::size_t>(q)};
  }
};

namespace detail {

/// E over independent atoms: E[Lambda(sum_tau psi(tau) prod_i mu_i(tau_i))]
/// with mu_i drawn from mixtures[i].
inline double pos_term(const WeightFamily& family, int k, const std::vector<const SimplexMixture*>& mixtures) {
  const int q = family.q();
  const auto& tables = family.tables(k);
  const auto& masses = family.masses(k);
  std::vector<std::size_t> choice(static_cast<std::size_t>(k), 0);
  std::vector<double> cur;
  CompensatedSum total;
  for (;;) {
    double w = 1.0;
    for (int i = 0; i < k; ++i) w *= mixtures[static_cast<std::size_t>(i)]->weights[choice[static_cast<std::size_t>(i)]];
    if (w > 0.0) {
      for (std::size_t t = 0; t < tables.size(); ++t) {
        // contract the table with mu_1..mu_k
        cur = tables[t].values;
        std::size_t size = cur.size();
        for (int i = k - 1; i >= 0; --i) {
          const auto mu = mixtures[static_cast<std::size_t>(i)]->point(choice[static_cast<std::size_t>(i)]);
          const std::size_t next = size / static_cast<std::size_t>(q);
          for (std::size_t idx = 0; idx < next; ++idx) {
            double s = 0.0;
            for (int z = 0; z < q; ++z) s += cur[idx * static_cast<std::size_t>(q) + static_cast<std::size_t>(z)] * mu[static_cast<std::size_t>(z)];
            cur[idx] = s;
          }
          size = next;
        }
        total.add(w * masses[t] * xlogx(cur[0]));
      }
    }
    int i = 0;
    while (i < k && ++choice[static_cast<std::size_t>(i)] == mixtures[static_cast<std::size_t>(i)]->size()) choice[static_cast<std::size_t>(i++)] = 0;
    if (i == k) break;
  }
  return total.value();
}

// Contraction above runs coordinates from last to first; with row-major
// tables the last coordinate is the fastest index, so mu_i multiplies the
// i-th coordinate as required.

inline void recentre(SimplexMixture& m, Rng& rng) {
  // Adds a compensating atom so that the mixture mean is uniform.
  const int q = m.q;
  std::vector<double> mean(static_cast<std::size_t>(q), 0.0);
  for (std::size_t a = 0; a < m.size(); ++a)
    for (int z = 0; z < q; ++z) mean[static_cast<std::size_t>(z)] += m.weights[a] * m.point(a)[static_cast<std::size_t>(z)];
  const double max_mean = *std::max_element(mean.begin(), mean.end());
  const double w_max = 1.0 / (q * max_mean);
  const double w = w_max * (0.5 + 0.5 * uniform01(rng));
  if (w >= 1.0 - 1e-15) return;
  for (double& x : m.weights) x *= w;
  double norm = 0.0;
  std::vector<double> c(static_cast<std::size_t>(q));
  for (int z = 0; z < q; ++z) {
    c[static_cast<std::size_t>(z)] = std::max(0.0, (1.0 / q - w * mean[static_cast<std::size_t>(z)]) / (1.0 - w));
    norm += c[static_cast<std::size_t>(z)];
  }
  for (double& x : c) x /= norm;
  m.points.insert(m.points.end(), c.begin(), c.end());
  m.weights.push_back(1.0 - w);
}

inline SimplexMixture random_mixture(int q, Rng& rng) {
  SimplexMixture m;
  m.q = q;
  const int kind = static_cast<int>(uniform_index(rng, 3));
  std::vector<double> p(static_cast<std::size_t>(q));
  if (kind == 0) {
    // vertex atoms, optionally blended towards the barycentre
    const double blend = uniform01(rng);
    for (int z = 0; z < q; ++z) {
      for (int y = 0; y < q; ++y) p[static_cast<std::size_t>(y)] = (1.0 - blend) * (y == z) + blend / q;
      m.points.insert(m.points.end(), p.begin(), p.end());
      m.weights.push_back(1.0 / q);
    }
  } else if (kind == 1) {
    // Dirichlet points symmetrised by cyclic shifts
    const int base = 1 + static_cast<int>(uniform_index(rng, 3));
    const double alpha = 0.2 + 2.0 * uniform01(rng);
    std::vector<double> raw(static_cast<std::size_t>(base));
    dirichlet(1.0, raw, rng);
    for (int b = 0; b < base; ++b) {
      dirichlet(alpha, p, rng);
      for (int s = 0; s < q; ++s) {
        std::vector<double> shifted(static_cast<std::size_t>(q));
        for (int z = 0; z < q; ++z) shifted[static_cast<std::size_t>((z + s) % q)] = p[static_cast<std::size_t>(z)];
        m.points.insert(m.points.end(), shifted.begin(), shifted.end());
        m.weights.push_back(raw[static_cast<std::size_t>(b)] / q);
      }
    }
  } else {
    // skewed mixture with a compensating atom
    const int base = 1 + static_cast<int>(uniform_index(rng, 3));
    const double alpha = 0.2 + 2.0 * uniform01(rng);
    std::vector<double> raw(static_cast<std::size_t>(base));
    dirichlet(1.0, raw, rng);
    for (int b = 0; b < base; ++b) {
      dirichlet(alpha, p, rng);
      m.points.insert(m.points.end(), p.begin(), p.end());
      m.weights.push_back(raw[static_cast<std::size_t>(b)]);
    }
    recentre(m, rng);
  }
  return m;
}

inline SimplexMixture permuted(const SimplexMixture& m, std::span<const int> perm) {
  SimplexMixture out = m;
  for (std::size_t a = 0; a < m.size(); ++a)
    for (int z = 0; z < m.q; ++z)
      out.points[a * static_cast<std::size_t>(m.q) + static_cast<std::size_t>(perm[static_cast<std::size_t>(z)])] = m.point(a)[static_cast<std::size_t>(z)];
  return out;
}

}  // namespace detail

/// Left side minus right side of the positivity inequality for arity k,
/// evaluated exactly over the finite supports of pi and pi'.
inline double pos_margin(const WeightFamily& family, int k, const SimplexMixture& pi, const SimplexMixture& pi2) {
  std::vector<const SimplexMixture*> all_pi(static_cast<std::size_t>(k), &pi), all_pi2(static_cast<std::size_t>(k), &pi2);
  double margin = detail::pos_term(family, k, all_pi) + (k - 1) * detail::pos_term(family, k, all_pi2);
  // The right side is symmetric in j for iid draws, so a single j suffices.
  std::vector<const SimplexMixture*> mixed(static_cast<std::size_t>(k), &pi2);
  mixed[0] = &pi;
  margin -= k * detail::pos_term(family, k, mixed);
  return margin;
}

struct PosOptions {
  long trials = 10'000;
  std::uint64_t seed = 0x905;
  double tol = 1e-10;
  unsigned workers = 1;
  /// Skip arities whose exact evaluation exceeds this many terms per trial.
  double max_terms = 5e7;
};

/// One-sided falsifier over a diverse generator of (pi, pi') pairs. Passing
/// means no violation was found.
inline CheckReport check_pos(const WeightFamily& family, const PosOptions& options = {}) {
  CheckReport r;
  r.name = "POS";
  const int q = family.q();
  struct TrialResult {
    double worst = std::numeric_limits<double>::infinity();
    int k = 0;
    std::string description;
  };
  std::vector<TrialResult> results(static_cast<std::size_t>(options.trials));
  parallel_for(results.size(), options.workers, [&](std::size_t t) {
    Rng rng = substream(options.seed, t);
    const SimplexMixture pi = detail::random_mixture(q, rng);
    SimplexMixture pi2;
    const int mode = static_cast<int>(uniform_index(rng, 3));
    std::string desc;
    if (mode == 0) {
      std::vector<int> perm(static_cast<std::size_t>(q));
      std::iota(perm.begin(), perm.end(), 0);
      shuffle(perm, rng);
      pi2 = detail::permuted(pi, perm);
      desc = "pi' = permuted pi";
    } else if (mode == 1) {
      pi2 = detail::random_mixture(q, rng);
      desc = "independent pi'";
    } else {
      pi2 = pi;
      desc = "pi' = pi";
    }
    for (int k : family.arities()) {
      const double terms = std::pow(static_cast<double>(std::max(pi.size(), pi2.size())), k) *
                           static_cast<double>(family.tables(k).size()) * std::pow(static_cast<double>(q), k);
      if (terms > options.max_terms) continue;
      const double m = pos_margin(family, k, pi, pi2);
      if (m < results[t].worst) {
        results[t].worst = m;
        results[t].k = k;
        results[t].description = desc + " (support sizes " + std::to_string(pi.size()) + ", " + std::to_string(pi2.size()) + ")";
      }
    }
  });
  double worst = std::numeric_limits<double>::infinity();
  long violations = 0;
  for (std::size_t t = 0; t < results.size(); ++t) {
    if (results[t].worst < -options.tol) {
      ++violations;
      if (!r.witness)
        r.witness = "trial " + std::to_string(t) + " k=" + std::to_string(results[t].k) + ": " + results[t].description +
                    ", margin " + std::to_string(results[t].worst);
    }
    worst = std::min(worst, results[t].worst);
  }
  r.passed = violations == 0;
  r.detail = std::max(0.0, -worst);
  r.values["min_margin"] = worst;
  r.values["trials"] = static_cast<double>(options.trials);
  r.values["violations"] = static_cast<double>(violations);
  r.note = r.passed ? "no violation found in " + std::to_string(options.trials) + " trials (one-sided check)"
                    : std::to_string(violations) + " violating trials";
  return r;
}

}  // namespace fcav
