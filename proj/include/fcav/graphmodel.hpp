#pragma once

// Samplers for degree sequences and for the null, planted and Nishimori
// random factor graphs, plus pinning.

#include <cmath>
#include <optional>
#include <vector>

#include "fcav/ensemble.hpp"
#include "fcav/model.hpp"

namespace fcav {

inline constexpr long kDefaultMaxAttempts = 1'000'000;

/// Balanced degree sequence: d_i iid, m ~ Po(n E[d]/E[k]), k_j iid, accepted
/// when the clone totals agree.
inline DegreeSequence sample_degree_sequence(int n, const DegreeSpec& dspec, const DegreeSpec& kspec, std::uint64_t seed,
                                             long max_attempts = kDefaultMaxAttempts) {
  require(n >= 1, "sample_degree_sequence: n must be >= 1");
  if (dspec.mean() <= 0.0 || kspec.mean() <= 0.0) throw Error(ErrorCode::ZeroMean, "degree specs need positive means");
  Rng rng = substream(seed, 0x5eed);
  const double mean_m = n * dspec.mean() / kspec.mean();
  DegreeSequence seq;
  seq.n = n;
  seq.var_degrees.resize(static_cast<std::size_t>(n));
  for (long attempt = 0; attempt < max_attempts; ++attempt) {
    long var_total = 0;
    for (int& d : seq.var_degrees) var_total += (d = dspec.sample(rng));
    const int m = poisson(mean_m, rng);
    seq.fac_arities.resize(static_cast<std::size_t>(m));
    long fac_total = 0;
    for (int& k : seq.fac_arities) fac_total += (k = kspec.sample(rng));
    if (var_total == fac_total) {
      seq.rejections = attempt;
      return seq;
    }
  }
  throw Error(ErrorCode::AttemptsExhausted, "no balanced degree sequence in " + std::to_string(max_attempts) + " draws");
}

/// Pruned sequence: m ~ Po((1-eps) n E[d]/E[k]), accepted when the variable
/// clones cover the factor clones. The surplus clones are cavities.
inline DegreeSequence sample_pruned_sequence(int n, double eps, const DegreeSpec& dspec, const DegreeSpec& kspec,
                                             std::uint64_t seed, long max_attempts = kDefaultMaxAttempts) {
  require(n >= 1, "sample_pruned_sequence: n must be >= 1");
  require(eps >= 0.0 && eps < 1.0, "sample_pruned_sequence: eps must lie in [0, 1)");
  if (dspec.mean() <= 0.0 || kspec.mean() <= 0.0) throw Error(ErrorCode::ZeroMean, "degree specs need positive means");
  Rng rng = substream(seed, 0x9a1e);
  const double mean_m = (1.0 - eps) * n * dspec.mean() / kspec.mean();
  DegreeSequence seq;
  seq.n = n;
  seq.pruned = true;
  seq.var_degrees.resize(static_cast<std::size_t>(n));
  for (long attempt = 0; attempt < max_attempts; ++attempt) {
    long var_total = 0;
    for (int& d : seq.var_degrees) var_total += (d = dspec.sample(rng));
    const int m = poisson(mean_m, rng);
    seq.fac_arities.resize(static_cast<std::size_t>(m));
    long fac_total = 0;
    for (int& k : seq.fac_arities) fac_total += (k = kspec.sample(rng));
    if (var_total >= fac_total) {
      seq.rejections = attempt;
      return seq;
    }
  }
  throw Error(ErrorCode::AttemptsExhausted, "no pruned degree sequence in " + std::to_string(max_attempts) + " draws");
}

struct PairingOptions {
  bool simple_only = false;
  long max_attempts = 100'000;
};

/// Uniformly random maximal matching of variable clones into factor clones.
/// Returns a topology-only graph; unmatched variable clones are recorded as
/// cavities.
inline FactorGraph pair_uniform(const DegreeSequence& seq, std::uint64_t seed, int q = 2, const PairingOptions& options = {}) {
  seq.validate();
  require(seq.cavities() >= 0, "pair_uniform: factor clones exceed variable clones");
  Rng rng = substream(seed, 0xfa17);
  std::vector<Clone> clones;
  for (int i = 0; i < seq.n; ++i)
    for (int s = 0; s < seq.var_degrees[static_cast<std::size_t>(i)]; ++s) clones.push_back({i, s});
  const long attempts = options.simple_only ? options.max_attempts : 1;
  for (long attempt = 0; attempt < attempts; ++attempt) {
    shuffle(clones, rng);
    std::vector<Factor> factors(seq.fac_arities.size());
    std::size_t pos = 0;
    for (std::size_t a = 0; a < factors.size(); ++a)
      for (int i = 0; i < seq.fac_arities[a]; ++i) factors[a].vars.push_back(clones[pos++].var);
    std::vector<Clone> cavities(clones.begin() + static_cast<long>(pos), clones.end());
    std::sort(cavities.begin(), cavities.end(), [](const Clone& x, const Clone& y) {
      return std::pair(x.var, x.slot) < std::pair(y.var, y.slot);
    });
    FactorGraph g(seq.n, q, std::move(factors), nullptr, {}, std::move(cavities));
    if (!options.simple_only || g.is_simple()) return g;
  }
  throw Error(ErrorCode::AttemptsExhausted, "pair_uniform: no simple pairing within attempt cap");
}

/// Attaches iid weight choices psi_a ~ P_{k_a} to a topology.
inline FactorGraph attach_weights(const FactorGraph& topology, const FamilyPtr& family, std::uint64_t seed) {
  require(family != nullptr, "attach_weights: missing family");
  Rng rng = substream(seed, 0x3e16);
  std::vector<Factor> factors = topology.factors();
  for (Factor& f : factors) f.weight_id = family->sample_index(f.arity(), rng);
  return FactorGraph(topology.n(), family->q(), std::move(factors), family, topology.pins(), topology.cavities());
}

inline FactorGraph sample_null(const DegreeSequence& seq, const FamilyPtr& family, std::uint64_t seed,
                               const PairingOptions& options = {}) {
  for (int k : seq.fac_arities) require(family->supports(k), "sample_null: family lacks arity " + std::to_string(k));
  return attach_weights(pair_uniform(seq, derive_seed(seed, 1), family->q(), options), family, derive_seed(seed, 2));
}

inline FactorGraph sample_null(int n, const DegreeSpec& dspec, const DegreeSpec& kspec, const FamilyPtr& family,
                               std::uint64_t seed, const PairingOptions& options = {}) {
  return sample_null(sample_degree_sequence(n, dspec, kspec, derive_seed(seed, 0)), family, seed, options);
}

struct PlantedOptions {
  /// Rejection attempts for the histogram condition; <= 0 means 10^4 sqrt(N).
  long rejection_cap = 0;
  bool mcmc_fallback = true;
  /// Colour-swap steps before the colouring is used; <= 0 means 50 N.
  long burn_in = 0;
};

struct PlantedDiagnostics {
  long rejections = 0;
  bool used_mcmc = false;
  long mcmc_accepted = 0;
};

/// Teacher-student graph G*(sigma) via the three-stage colour-first
/// construction: factor-side colouring conditioned on the clone histogram,
/// colour-dependent weight choice, colour-consistent clone bijection. Pins
/// x_1..x_theta to sigma.
inline FactorGraph sample_planted(const DegreeSequence& seq, const Assignment& sigma, const FamilyPtr& family, int theta,
                                  std::uint64_t seed, const PlantedOptions& options = {},
                                  PlantedDiagnostics* diagnostics = nullptr) {
  seq.validate();
  require(family != nullptr, "sample_planted: missing family");
  require(sigma.n() == seq.n && sigma.q == family->q(), "sample_planted: assignment does not match");
  require(theta >= 0 && theta <= seq.n, "sample_planted: theta out of range");
  const int q = family->q();
  Rng rng = substream(seed, 0x91a7);

  const std::vector<int> chi = detail::clone_colours(seq, sigma);
  const std::vector<int> owner = detail::clone_owners(seq);
  const std::vector<int> target = detail::histogram(chi, q);
  const std::size_t total = chi.size();
  const std::size_t fac_slots = static_cast<std::size_t>(seq.total_fac_degree());

  std::vector<std::size_t> offset;
  {
    std::size_t pos = 0;
    for (int k : seq.fac_arities) {
      require(family->supports(k), "sample_planted: family lacks arity " + std::to_string(k));
      offset.push_back(pos);
      pos += static_cast<std::size_t>(k);
    }
  }
  std::map<int, std::vector<double>> ebar_cumulative;
  for (int k : family->arities()) {
    std::vector<double> c;
    double s = 0.0;
    for (double e : family->expected_table(k)) c.push_back(s += e);
    ebar_cumulative[k] = std::move(c);
  }

  // Stage one.
  std::vector<int> y(total);
  std::vector<int> local;
  auto draw_unconditioned = [&] {
    for (std::size_t a = 0; a < seq.fac_arities.size(); ++a) {
      const int k = seq.fac_arities[a];
      const std::size_t idx = sample_cumulative(ebar_cumulative[k], rng);
      decode_config(idx, q, std::span<int>(y.data() + offset[a], static_cast<std::size_t>(k)));
    }
    for (std::size_t s = fac_slots; s < total; ++s) y[s] = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(q)));
  };
  const long cap = options.rejection_cap > 0
                       ? options.rejection_cap
                       : static_cast<long>(std::ceil(1e4 * std::sqrt(static_cast<double>(std::max<std::size_t>(total, 1)))));
  bool matched = false;
  long rejections = 0;
  for (; rejections < cap; ++rejections) {
    draw_unconditioned();
    if (detail::histogram(y, q) == target) {
      matched = true;
      break;
    }
  }
  PlantedDiagnostics diag;
  diag.rejections = rejections;
  if (!matched) {
    if (!options.mcmc_fallback)
      throw Error(ErrorCode::AttemptsExhausted, "sample_planted: histogram conditioning failed within cap");
    // Colour-swap Metropolis chain on colourings with the target histogram,
    // stationary for prod_a Ebar_a(y_a) (cavity slots carry weight one).
    diag.used_mcmc = true;
    y = chi;
    shuffle(y, rng);
    std::vector<int> slot_factor(total, -1);
    for (std::size_t a = 0; a < seq.fac_arities.size(); ++a)
      for (int i = 0; i < seq.fac_arities[a]; ++i) slot_factor[offset[a] + static_cast<std::size_t>(i)] = static_cast<int>(a);
    auto factor_weight = [&](int a) {
      if (a < 0) return 1.0;
      const int k = seq.fac_arities[static_cast<std::size_t>(a)];
      const std::span<const int> ya(y.data() + offset[static_cast<std::size_t>(a)], static_cast<std::size_t>(k));
      return family->expected_table(k)[encode_config(ya, q)];
    };
    const long burn = options.burn_in > 0 ? options.burn_in : 50L * static_cast<long>(total);
    for (long step = 0; step < burn; ++step) {
      const std::size_t s = uniform_index(rng, total);
      const std::size_t t = uniform_index(rng, total);
      if (y[s] == y[t]) continue;
      const int fs = slot_factor[s], ft = slot_factor[t];
      const double before = fs == ft ? factor_weight(fs) : factor_weight(fs) * factor_weight(ft);
      std::swap(y[s], y[t]);
      const double after = fs == ft ? factor_weight(fs) : factor_weight(fs) * factor_weight(ft);
      if (after >= before || uniform01(rng) * before < after)
        ++diag.mcmc_accepted;
      else
        std::swap(y[s], y[t]);
    }
  }

  // Stage two.
  std::vector<Factor> factors(seq.fac_arities.size());
  std::vector<double> w;
  for (std::size_t a = 0; a < factors.size(); ++a) {
    const int k = seq.fac_arities[a];
    const std::size_t idx = encode_config(std::span<const int>(y.data() + offset[a], static_cast<std::size_t>(k)), q);
    const auto& tables = family->tables(k);
    w.resize(tables.size());
    double s = 0.0;
    for (std::size_t t = 0; t < tables.size(); ++t) s += (w[t] = family->masses(k)[t] * tables[t].values[idx]);
    factors[a].weight_id = static_cast<int>(sample_weighted(w, s, rng));
    factors[a].vars.resize(static_cast<std::size_t>(k));
  }

  // Stage three.
  std::vector<std::vector<int>> clones_of(static_cast<std::size_t>(q)), slots_of(static_cast<std::size_t>(q));
  for (std::size_t c = 0; c < total; ++c) clones_of[static_cast<std::size_t>(chi[c])].push_back(static_cast<int>(c));
  for (std::size_t s = 0; s < total; ++s) slots_of[static_cast<std::size_t>(y[s])].push_back(static_cast<int>(s));
  std::vector<int> slot_clone(total, -1);
  for (int z = 0; z < q; ++z) {
    auto& cl = clones_of[static_cast<std::size_t>(z)];
    shuffle(cl, rng);
    const auto& sl = slots_of[static_cast<std::size_t>(z)];
    for (std::size_t i = 0; i < sl.size(); ++i) slot_clone[static_cast<std::size_t>(sl[i])] = cl[i];
  }
  for (std::size_t a = 0; a < factors.size(); ++a)
    for (std::size_t i = 0; i < factors[a].vars.size(); ++i)
      factors[a].vars[i] = owner[static_cast<std::size_t>(slot_clone[offset[a] + i])];

  // clone index -> (var, slot)
  std::vector<Clone> clone_id;
  for (int i = 0; i < seq.n; ++i)
    for (int s = 0; s < seq.var_degrees[static_cast<std::size_t>(i)]; ++s) clone_id.push_back({i, s});
  std::vector<Clone> cavities;
  for (std::size_t s = fac_slots; s < total; ++s) cavities.push_back(clone_id[static_cast<std::size_t>(slot_clone[s])]);
  std::sort(cavities.begin(), cavities.end(),
            [](const Clone& x, const Clone& y2) { return std::pair(x.var, x.slot) < std::pair(y2.var, y2.slot); });

  if (diagnostics) *diagnostics = diag;
  return FactorGraph(seq.n, q, std::move(factors), family, planted_pins(sigma, theta), std::move(cavities));
}

inline Assignment uniform_assignment(int n, int q, Rng& rng) {
  std::vector<int> s(static_cast<std::size_t>(n));
  for (int& v : s) v = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(q)));
  return Assignment(std::move(s), q);
}

/// Law of the Nishimori ground truth: P[sigma_hat = sigma] proportional to
/// E[psi_G(sigma) | degree sequence], over all q^n assignments.
inline std::vector<std::pair<Assignment, double>> nishimori_assignment_law(const DegreeSequence& seq, const WeightFamily& family,
                                                                           const ExactLimits& limits = {}) {
  const int q = family.q();
  const double states = std::pow(static_cast<double>(q), seq.n);
  if (states > static_cast<double>(limits.max_states))
    throw Error(ErrorCode::CapExceeded, "nishimori law: too many assignments");
  std::vector<std::pair<Assignment, double>> law;
  std::vector<int> spins(static_cast<std::size_t>(seq.n));
  CompensatedSum total;
  for (std::uint64_t code = 0; code < static_cast<std::uint64_t>(states); ++code) {
    decode_config(code, q, spins);
    Assignment sigma(spins, q);
    const double w = expected_weight(seq, family, sigma, limits);
    total.add(w);
    law.emplace_back(std::move(sigma), w);
  }
  for (auto& [sigma, p] : law) p /= total.value();
  return law;
}

struct NishimoriDraw {
  Assignment sigma;
  FactorGraph graph;
  DegreeSequence sequence;
  /// True when sigma is uniform rather than drawn from the reweighted law.
  bool contiguity_approximate = false;
};

/// (sigma_hat, G*(sigma_hat)). Exact mode enumerates the assignment law;
/// approximate mode uses a uniform ground truth and tags the result.
inline NishimoriDraw sample_nishimori(int n, const DegreeSpec& dspec, const DegreeSpec& kspec, const FamilyPtr& family,
                                      std::uint64_t seed, bool approximate = false, const ExactLimits& limits = {}) {
  NishimoriDraw draw;
  draw.sequence = sample_degree_sequence(n, dspec, kspec, derive_seed(seed, 0));
  Rng rng = substream(seed, 0x2151);
  if (approximate) {
    draw.sigma = uniform_assignment(n, family->q(), rng);
    draw.contiguity_approximate = true;
  } else {
    const auto law = nishimori_assignment_law(draw.sequence, *family, limits);
    std::vector<double> p;
    for (const auto& entry : law) p.push_back(entry.second);
    draw.sigma = law[sample_weighted(p, 1.0, rng)].first;
  }
  draw.graph = sample_planted(draw.sequence, draw.sigma, family, 0, derive_seed(seed, 3));
  return draw;
}

/// Pins each named variable to a uniformly random spin.
inline FactorGraph pin(const FactorGraph& g, const std::vector<int>& vars, std::uint64_t seed) {
  Rng rng = substream(seed, 0x7117);
  std::vector<Pin> pins = g.pins();
  for (int v : vars) {
    require(v >= 0 && v < g.n(), "pin: variable out of range");
    pins.push_back({v, static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(g.q())))});
  }
  return g.with_pins(std::move(pins));
}

/// Pins the named variables to the given pattern.
inline FactorGraph pin_to(const FactorGraph& g, const std::vector<int>& vars, const std::vector<int>& spins) {
  require(vars.size() == spins.size(), "pin_to: length mismatch");
  std::vector<Pin> pins = g.pins();
  for (std::size_t i = 0; i < vars.size(); ++i) pins.push_back({vars[i], spins[i]});
  return g.with_pins(std::move(pins));
}

/// Pins x_1..x_theta to uniformly random spins.
inline FactorGraph pin(const FactorGraph& g, int theta, std::uint64_t seed) {
  require(theta >= 0 && theta <= g.n(), "pin: theta out of range");
  std::vector<int> vars(static_cast<std::size_t>(theta));
  std::iota(vars.begin(), vars.end(), 0);
  return pin(g, vars, seed);
}

struct LemmaPinning {
  FactorGraph graph;
  double theta = 0.0;
  std::vector<int> pinned;
};

/// Randomised pinning: Theta uniform in (0, T), each variable included
/// independently with probability Theta/n, pinned to the matching entry of
/// `pattern` (a Boltzmann sample in the intended use).
inline LemmaPinning pin_lemma(const FactorGraph& g, double T, const Assignment& pattern, std::uint64_t seed) {
  require(T > 0.0, "pin_lemma: T must be positive");
  require(pattern.n() == g.n(), "pin_lemma: pattern length");
  Rng rng = substream(seed, 0x1e77);
  LemmaPinning out;
  out.theta = T * uniform01(rng);
  const double p = g.n() > 0 ? std::min(1.0, out.theta / g.n()) : 0.0;
  std::vector<int> spins;
  for (int i = 0; i < g.n(); ++i)
    if (uniform01(rng) < p) {
      out.pinned.push_back(i);
      spins.push_back(pattern.spins[static_cast<std::size_t>(i)]);
    }
  out.graph = pin_to(g, out.pinned, spins);
  return out;
}

}  // namespace fcav
