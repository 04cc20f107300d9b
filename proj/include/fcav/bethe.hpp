#pragma once

// The variational side: size-biased degree laws, Monte-Carlo evaluation of
// the Bethe functional B(pi), population dynamics, the annealed free
// entropy, the mutual-information formula and threshold scans.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fcav/assumptions.hpp"
#include "fcav/model.hpp"
#include "fcav/parallel.hpp"

namespace fcav {

/// mass(l) = l P[k=l] / E[k].
inline DegreeSpec size_biased(const DegreeSpec& spec) {
  if (spec.mean() <= 0.0) throw Error(ErrorCode::ZeroMean, "size_biased: zero mean");
  std::vector<int> support;
  std::vector<double> mass;
  for (std::size_t i = 0; i < spec.support().size(); ++i) {
    const int l = spec.support()[i];
    if (l == 0) continue;
    support.push_back(l);
    mass.push_back(l * spec.mass()[i] / spec.mean());
  }
  double s = 0.0;
  for (double p : mass) s += p;
  for (double& p : mass) p /= s;
  return DegreeSpec(support, mass, spec.max_degree());
}

/// Excess degree: mass(l) = (l+1) P[d=l+1] / E[d].
inline DegreeSpec excess_degree(const DegreeSpec& spec) {
  const DegreeSpec biased = size_biased(spec);
  std::vector<int> support;
  for (int l : biased.support()) support.push_back(l - 1);
  return DegreeSpec(support, biased.mass(), spec.max_degree());
}

inline double require_xi(const ModelSpec& model) {
  const auto sym = check_sym(*model.family, 1e-9);
  if (!sym.xi) throw Error(ErrorCode::SymViolation, "model fails SYM: " + sym.report.witness.value_or("?"));
  return *sym.xi;
}

/// E_psi[q^{-k} sum_tau Lambda(psi_k(tau))] for one arity.
inline double information_per_arity(const WeightFamily& family, int k) {
  const int q = family.q();
  CompensatedSum s;
  const auto& tables = family.tables(k);
  for (std::size_t t = 0; t < tables.size(); ++t) {
    CompensatedSum inner;
    for (double v : tables[t].values) inner.add(xlogx(v));
    s.add(family.masses(k)[t] * inner.value());
  }
  return s.value() / static_cast<double>(ipow(static_cast<std::size_t>(q), k));
}

/// (E[d] / (xi E[k])) E[q^{-k} sum_tau Lambda(psi(tau))].
inline double information_term(const ModelSpec& model) {
  const double xi = require_xi(model);
  double e = 0.0;
  for (std::size_t i = 0; i < model.kspec.support().size(); ++i)
    e += model.kspec.mass()[i] * information_per_arity(*model.family, model.kspec.support()[i]);
  return model.dspec.mean() / (xi * model.kspec.mean()) * e;
}

/// ln of sum_tau E[psi_k(tau)].
inline double log_expected_total(const WeightFamily& family, int k) {
  CompensatedSum s;
  for (double e : family.expected_table(k)) s.add(e);
  return std::log(s.value());
}

/// phi_a = (1 - E[d]) ln q + (E[d]/E[k]) E[ln Zbar_k].
inline double annealed_free_entropy(const ModelSpec& model) {
  require_xi(model);
  if (model.kspec.mean() <= 0.0) throw Error(ErrorCode::ZeroMean, "annealed_free_entropy: E[k]=0");
  double e = 0.0;
  for (std::size_t i = 0; i < model.kspec.support().size(); ++i)
    e += model.kspec.mass()[i] * log_expected_total(*model.family, model.kspec.support()[i]);
  return (1.0 - model.dspec.mean()) * std::log(static_cast<double>(model.q())) + model.dspec.mean() / model.kspec.mean() * e;
}

/// B at the atom on the uniform point. The variable term is
/// ln q + E[d] ln xi by SYM; the factor term is summed exactly over the
/// family.
inline double bethe_uniform_closed_form(const ModelSpec& model) {
  const double xi = require_xi(model);
  const int q = model.q();
  const double variable = std::log(static_cast<double>(q)) + model.dspec.mean() * std::log(xi);
  CompensatedSum factor;
  for (std::size_t i = 0; i < model.kspec.support().size(); ++i) {
    const int k = model.kspec.support()[i];
    const auto& tables = model.family->tables(k);
    CompensatedSum per_k;
    for (std::size_t t = 0; t < tables.size(); ++t) {
      CompensatedSum z;
      for (double v : tables[t].values) z.add(v);
      per_k.add(model.family->masses(k)[t] * xlogx(z.value() / static_cast<double>(ipow(static_cast<std::size_t>(q), k))));
    }
    factor.add(model.kspec.mass()[i] * (k - 1) * per_k.value());
  }
  return variable - model.dspec.mean() / (xi * model.kspec.mean()) * factor.value();
}

/// Empirical measure on the simplex over Omega.
class SimplexPopulation {
 public:
  SimplexPopulation() = default;
  SimplexPopulation(int q, std::vector<double> points, std::string init = "custom")
      : q_(q), points_(std::move(points)), init_(std::move(init)) {
    require(q >= 1 && !points_.empty() && points_.size() % static_cast<std::size_t>(q) == 0, "population: bad shape");
    for (std::size_t i = 0; i < size(); ++i) {
      double s = 0.0;
      for (double x : point(i)) {
        require(x >= 0.0, "population: negative entry");
        s += x;
      }
      require(std::abs(s - 1.0) <= 1e-10, "population: point off the simplex");
    }
  }

  static SimplexPopulation uniform_atom(int q) {
    return SimplexPopulation(q, std::vector<double>(static_cast<std::size_t>(q), 1.0 / q), "uniform-atom");
  }

  int q() const { return q_; }
  std::size_t size() const { return points_.size() / static_cast<std::size_t>(q_); }
  std::span<const double> point(std::size_t i) const {
    return {points_.data() + i * static_cast<std::size_t>(q_), static_cast<std::size_t>(q_)};
  }
  const std::vector<double>& points() const { return points_; }
  long generation = 0;
  /// Evaluate with a random spin permutation applied to every drawn point.
  bool symmetrize = false;
  const std::string& init() const { return init_; }

  std::vector<double> mean() const {
    std::vector<double> m(static_cast<std::size_t>(q_), 0.0);
    for (std::size_t i = 0; i < size(); ++i)
      for (int z = 0; z < q_; ++z) m[static_cast<std::size_t>(z)] += point(i)[static_cast<std::size_t>(z)];
    for (double& x : m) x /= static_cast<double>(size());
    return m;
  }
  double mean_deviation() const {
    double d = 0.0;
    for (double x : mean()) d = std::max(d, std::abs(x - 1.0 / q_));
    return d;
  }
  /// Average total-variation distance of the points to the barycentre.
  double mean_distance_to_barycenter() const {
    double total = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      double d = 0.0;
      for (double x : point(i)) d += std::abs(x - 1.0 / q_);
      total += 0.5 * d;
    }
    return total / static_cast<double>(size());
  }

 private:
  int q_ = 2;
  std::vector<double> points_;
  std::string init_ = "custom";
};

/// Spin permutations that map the family onto itself (tables compared as a
/// multiset with masses). Only alphabets with q <= 6 are searched.
inline std::vector<std::vector<int>> symmetry_group(const WeightFamily& family, double tol = 1e-12) {
  const int q = family.q();
  std::vector<int> perm(static_cast<std::size_t>(q));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> group;
  if (q > 6) return {perm};
  auto same_block = [&](const WeightFamily& other, int k) {
    const auto& a = family.tables(k);
    const auto& b = other.tables(k);
    // mass carried by each distinct table must agree
    for (std::size_t i = 0; i < a.size(); ++i) {
      double ma = 0.0, mb = 0.0;
      auto close = [&](const WeightTable& x, const WeightTable& y) {
        for (std::size_t idx = 0; idx < x.values.size(); ++idx)
          if (std::abs(x.values[idx] - y.values[idx]) > tol) return false;
        return true;
      };
      for (std::size_t j = 0; j < a.size(); ++j)
        if (close(a[i], a[j])) ma += family.masses(k)[j];
      for (std::size_t j = 0; j < b.size(); ++j)
        if (close(a[i], b[j])) mb += other.masses(k)[j];
      if (std::abs(ma - mb) > 1e-12) return false;
    }
    return true;
  };
  do {
    const WeightFamily image = family.relabeled(perm);
    bool ok = true;
    for (int k : family.arities()) ok = ok && same_block(image, k);
    if (ok) group.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return group;
}

/// True when the group moves every spin to every other spin.
inline bool is_transitive(const std::vector<std::vector<int>>& group, int q) {
  for (int z = 0; z < q; ++z) {
    bool hit = false;
    for (const auto& g : group) hit = hit || g[0] == z;
    if (!hit) return false;
  }
  return true;
}

struct BetheEstimate {
  double value = 0.0;
  double stderr = 0.0;
  long samples = 0;
};

namespace detail {

/// Precomputed sampling tables shared by the estimators.
struct BetheContext {
  const ModelSpec* model = nullptr;
  int q = 2;
  double xi = 1.0;
  double log_xi = 0.0;
  DegreeSpec khat;
  double factor_coefficient = 0.0;

  explicit BetheContext(const ModelSpec& m) : model(&m), q(m.q()) {
    xi = require_xi(m);
    log_xi = std::log(xi);
    khat = size_biased(m.kspec);
    factor_coefficient = m.dspec.mean() / (xi * m.kspec.mean());
  }
};

struct PointSource {
  const SimplexPopulation* pop;
  std::vector<double> buffer;
  std::vector<int> perm;

  explicit PointSource(const SimplexPopulation& p) : pop(&p), buffer(static_cast<std::size_t>(p.q())), perm(static_cast<std::size_t>(p.q())) {}

  std::span<const double> draw(Rng& rng) {
    const auto src = pop->point(uniform_index(rng, pop->size()));
    if (!pop->symmetrize) return src;
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm, rng);
    for (std::size_t z = 0; z < buffer.size(); ++z) buffer[static_cast<std::size_t>(perm[z])] = src[z];
    return buffer;
  }
};

/// log m(sigma) for one incoming factor: sum over tau with tau_h = sigma of
/// psi(tau) prod_{j != h} mu_j(tau_j).
inline void incoming_message(const WeightTable& table, int q, int h, const std::vector<std::vector<double>>& mus,
                             std::vector<double>& out) {
  const int k = table.arity;
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t size = table.values.size();
  std::vector<int> tau(static_cast<std::size_t>(k));
  for (std::size_t idx = 0; idx < size; ++idx) {
    decode_config(idx, q, tau);
    double w = table.values[idx];
    for (int j = 0; j < k; ++j)
      if (j != h) w *= mus[static_cast<std::size_t>(j)][static_cast<std::size_t>(tau[static_cast<std::size_t>(j)])];
    out[static_cast<std::size_t>(tau[static_cast<std::size_t>(h)])] += w;
  }
}

/// Draws the d incoming messages of a variable and returns log of
/// sum_sigma prod_i m_i(sigma); writes log prod_i m_i(.) into log_prod.
inline double variable_product(const BetheContext& ctx, int d, PointSource& source, Rng& rng,
                               std::vector<double>& log_prod) {
  const int q = ctx.q;
  std::fill(log_prod.begin(), log_prod.end(), 0.0);
  std::vector<double> m(static_cast<std::size_t>(q));
  std::vector<std::vector<double>> mus;
  for (int i = 0; i < d; ++i) {
    const int k = ctx.khat.sample(rng);
    const WeightTable& table = ctx.model->family->table(k, ctx.model->family->sample_index(k, rng));
    const int h = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(k)));
    mus.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
      if (j == h) continue;
      const auto p = source.draw(rng);
      mus[static_cast<std::size_t>(j)].assign(p.begin(), p.end());
    }
    incoming_message(table, q, h, mus, m);
    for (int z = 0; z < q; ++z) {
      if (!(m[static_cast<std::size_t>(z)] > 0.0)) {
        log_prod[static_cast<std::size_t>(z)] = -std::numeric_limits<double>::infinity();
        continue;
      }
      log_prod[static_cast<std::size_t>(z)] += std::log(m[static_cast<std::size_t>(z)]);
    }
  }
  LogSumExp lse;
  for (double l : log_prod) lse.add(l);
  return lse.value();
}

inline double factor_partition(const WeightTable& table, int q, const std::vector<std::vector<double>>& mus) {
  const int k = table.arity;
  std::vector<double> cur = table.values;
  std::size_t size = cur.size();
  for (int i = k - 1; i >= 0; --i) {
    const std::size_t next = size / static_cast<std::size_t>(q);
    for (std::size_t idx = 0; idx < next; ++idx) {
      double s = 0.0;
      for (int z = 0; z < q; ++z)
        s += cur[idx * static_cast<std::size_t>(q) + static_cast<std::size_t>(z)] * mus[static_cast<std::size_t>(i)][static_cast<std::size_t>(z)];
      cur[idx] = s;
    }
    size = next;
  }
  return cur[0];
}

}  // namespace detail

inline constexpr long kBetheBlock = 4096;

/// Monte-Carlo estimate of B(pi). Samples are split into fixed-size blocks
/// with their own substreams, so the result does not depend on the worker
/// count.
inline BetheEstimate bethe_estimate(const SimplexPopulation& pi, const ModelSpec& model, long samples, std::uint64_t seed,
                                    unsigned workers = 1) {
  require(samples >= 1, "bethe_estimate: samples must be positive");
  require(pi.q() == model.q(), "bethe_estimate: alphabet mismatch");
  const detail::BetheContext ctx(model);
  const int q = ctx.q;
  const double log_q = std::log(static_cast<double>(q));
  const std::size_t blocks = static_cast<std::size_t>((samples + kBetheBlock - 1) / kBetheBlock);
  std::vector<RunningStats> stats(blocks);
  parallel_for(blocks, workers, [&](std::size_t b) {
    Rng rng = substream(seed, b);
    detail::PointSource source(pi);
    std::vector<double> log_prod(static_cast<std::size_t>(q));
    std::vector<std::vector<double>> mus;
    const long begin = static_cast<long>(b) * kBetheBlock;
    const long end = std::min(samples, begin + kBetheBlock);
    for (long s = begin; s < end; ++s) {
      const int d = model.dspec.sample(rng);
      const double log_a = detail::variable_product(ctx, d, source, rng, log_prod);
      // (1/q) xi^{-d} Lambda(A) = exp(ln A - ln q - d ln xi) ln A
      const double variable = std::exp(log_a - log_q - d * ctx.log_xi) * log_a;
      const int k = model.kspec.sample(rng);
      const WeightTable& table = model.family->table(k, model.family->sample_index(k, rng));
      mus.resize(static_cast<std::size_t>(k));
      for (int j = 0; j < k; ++j) {
        const auto p = source.draw(rng);
        mus[static_cast<std::size_t>(j)].assign(p.begin(), p.end());
      }
      const double factor = ctx.factor_coefficient * (k - 1) * xlogx(detail::factor_partition(table, q, mus));
      stats[b].add(variable - factor);
    }
  });
  RunningStats total;
  for (const auto& s : stats) total.merge(s);
  return {total.mean(), total.stderr_of_mean(), total.count()};
}

enum class PDInit { UniformPerturbed, PlantedPolarized };

inline const char* to_string(PDInit init) {
  return init == PDInit::UniformPerturbed ? "uniform-perturbed" : "planted-polarized";
}

struct PDOptions {
  std::size_t pop_size = 10'000;
  int sweeps = 200;
  PDInit init = PDInit::UniformPerturbed;
  /// Weight of the Dirichlet perturbation in the uniform-perturbed init.
  double perturbation = 0.5;
  /// Mean deviation (sup-norm) that switches on symmetrised evaluation.
  double mean_band = 0.02;
  /// Apply a random symmetry of the family to every resampled point when
  /// the symmetry group is transitive on the alphabet.
  bool symmetrize_by_group = true;
};

struct PDResult {
  SimplexPopulation population;
  /// Mean distance to the barycentre after initialisation and each sweep.
  std::vector<double> trajectory;
};

/// Population dynamics for the distributional BP fixed point of B. Each
/// sweep builds pop_size candidates nu proportional to prod_{i<=d*} m_i with
/// d* from the excess-degree law, weights each by its normaliser
/// sum_sigma prod_i m_i(sigma) / (q xi^{d*}), and resamples systematically.
inline PDResult population_dynamics(const ModelSpec& model, const PDOptions& options, std::uint64_t seed) {
  require(options.pop_size >= 100, "population_dynamics: pop_size must be >= 100");
  require(options.sweeps >= 0, "population_dynamics: negative sweep count");
  const detail::BetheContext ctx(model);
  const int q = ctx.q;
  const DegreeSpec excess = excess_degree(model.dspec);
  Rng rng = substream(seed, 0x90d);
  const std::size_t n = options.pop_size;
  const auto group = symmetry_group(*model.family);
  const bool symmetric = options.symmetrize_by_group && is_transitive(group, q);

  std::vector<double> points(n * static_cast<std::size_t>(q));
  std::vector<double> p(static_cast<std::size_t>(q));
  for (std::size_t i = 0; i < n; ++i) {
    if (options.init == PDInit::UniformPerturbed) {
      dirichlet(1.0, p, rng);
      for (int z = 0; z < q; ++z)
        points[i * static_cast<std::size_t>(q) + static_cast<std::size_t>(z)] =
            (1.0 - options.perturbation) / q + options.perturbation * p[static_cast<std::size_t>(z)];
    } else {
      const auto w = uniform_index(rng, static_cast<std::uint64_t>(q));
      points[i * static_cast<std::size_t>(q) + w] = 1.0;
    }
  }
  PDResult result;
  result.population = SimplexPopulation(q, std::move(points), to_string(options.init));
  result.trajectory.push_back(result.population.mean_distance_to_barycenter());

  std::vector<double> next(n * static_cast<std::size_t>(q));
  std::vector<double> log_w(n);
  std::vector<double> log_prod(static_cast<std::size_t>(q));
  const double log_q = std::log(static_cast<double>(q));
  for (int sweep = 0; sweep < options.sweeps; ++sweep) {
    detail::PointSource source(result.population);
    for (std::size_t c = 0; c < n; ++c) {
      const int d = excess.sample(rng);
      const double log_a = detail::variable_product(ctx, d, source, rng, log_prod);
      if (!std::isfinite(log_a))
        throw Error(ErrorCode::NumericalUnderflow, "population_dynamics: candidate normaliser underflows");
      for (int z = 0; z < q; ++z)
        next[c * static_cast<std::size_t>(q) + static_cast<std::size_t>(z)] = std::exp(log_prod[static_cast<std::size_t>(z)] - log_a);
      log_w[c] = log_a - log_q - d * ctx.log_xi;
    }
    // systematic resampling proportional to the weights
    const double shift = *std::max_element(log_w.begin(), log_w.end());
    std::vector<double> cumulative(n);
    double c_sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) cumulative[c] = (c_sum += std::exp(log_w[c] - shift));
    std::vector<double> resampled(n * static_cast<std::size_t>(q));
    const double step = c_sum / static_cast<double>(n);
    double u = uniform01(rng) * step;
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i, u += step) {
      while (j + 1 < n && cumulative[j] <= u) ++j;
      std::copy_n(next.begin() + static_cast<long>(j * static_cast<std::size_t>(q)), q,
                  resampled.begin() + static_cast<long>(i * static_cast<std::size_t>(q)));
    }
    if (symmetric) {
      // random symmetry per point keeps the mean at the barycentre
      std::vector<double> tmp(static_cast<std::size_t>(q));
      for (std::size_t i = 0; i < n; ++i) {
        const auto& g = group[uniform_index(rng, group.size())];
        double* pt = resampled.data() + i * static_cast<std::size_t>(q);
        for (int z = 0; z < q; ++z) tmp[static_cast<std::size_t>(g[static_cast<std::size_t>(z)])] = pt[z];
        std::copy(tmp.begin(), tmp.end(), pt);
      }
    }
    const bool symmetrize = result.population.symmetrize;
    SimplexPopulation updated(q, std::move(resampled), to_string(options.init));
    updated.generation = result.population.generation + 1;
    updated.symmetrize = symmetrize;
    if (options.init == PDInit::UniformPerturbed && updated.mean_deviation() > options.mean_band) updated.symmetrize = true;
    result.population = std::move(updated);
    result.trajectory.push_back(result.population.mean_distance_to_barycenter());
  }
  return result;
}

struct SupCandidate {
  std::string tag;
  BetheEstimate estimate;
};

struct SupBethe {
  double value = 0.0;
  double stderr = 0.0;
  std::string tag;
  std::vector<SupCandidate> candidates;
  /// The supremum over an infinite-dimensional space is searched heuristically.
  bool heuristic = true;
};

struct SupOptions {
  int restarts = 1;
  PDOptions pd;
  long eval_samples = 100'000;
  unsigned workers = 1;
  /// A candidate replaces the incumbent only when better by more than this.
  double tie_tolerance = 1e-12;
};

/// Best Bethe value over the uniform atom and population-dynamics outputs
/// from both initialisations. A lower bound on the supremum.
inline SupBethe sup_bethe(const ModelSpec& model, const SupOptions& options, std::uint64_t seed) {
  SupBethe out;
  const std::uint64_t eval_seed = derive_seed(seed, 0xe7a1);
  out.candidates.push_back({"uniform-atom", bethe_estimate(SimplexPopulation::uniform_atom(model.q()), model,
                                                           options.eval_samples, eval_seed, options.workers)});
  struct Job {
    PDInit init;
    int restart;
  };
  std::vector<Job> jobs;
  for (int r = 0; r < options.restarts; ++r) {
    jobs.push_back({PDInit::UniformPerturbed, r});
    jobs.push_back({PDInit::PlantedPolarized, r});
  }
  std::vector<SupCandidate> found(jobs.size());
  parallel_for(jobs.size(), options.workers, [&](std::size_t i) {
    PDOptions pd = options.pd;
    pd.init = jobs[i].init;
    const auto run = population_dynamics(model, pd, derive_seed(seed, 2 * i + 1));
    found[i] = {std::string(to_string(jobs[i].init)) + "#" + std::to_string(jobs[i].restart),
                bethe_estimate(run.population, model, options.eval_samples, eval_seed, 1)};
  });
  out.candidates.insert(out.candidates.end(), found.begin(), found.end());
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.candidates.size(); ++i)
    if (out.candidates[i].estimate.value > out.candidates[best].estimate.value + options.tie_tolerance) best = i;
  out.value = out.candidates[best].estimate.value;
  out.stderr = out.candidates[best].estimate.stderr;
  out.tag = out.candidates[best].tag;
  return out;
}

struct MIOptions {
  SupOptions sup;
  bool waive_pos = false;
  PosOptions pos;
  BalOptions bal;
};

struct MIResult {
  double value = 0.0;
  double stderr = 0.0;
  double information = 0.0;
  SupBethe sup;
  std::vector<CheckReport> reports;
};

/// ln q + information term - sup B, after checking SYM, BAL and (unless
/// waived) POS.
inline MIResult mutual_information(const ModelSpec& model, const MIOptions& options, std::uint64_t seed) {
  MIResult out;
  out.reports.push_back(check_deg(model.dspec, model.kspec));
  out.reports.push_back(check_sym(*model.family).report);
  out.reports.push_back(check_bal(*model.family, options.bal));
  if (!options.waive_pos) out.reports.push_back(check_pos(*model.family, options.pos));
  for (const auto& r : out.reports)
    if (!r.passed)
      throw Error(ErrorCode::AssumptionViolation, r.name + " fails: " + r.witness.value_or(""));
  out.information = information_term(model);
  out.sup = sup_bethe(model, options.sup, seed);
  out.value = std::log(static_cast<double>(model.q())) + out.information - out.sup.value;
  out.stderr = out.sup.stderr;
  return out;
}

struct ScanRow {
  double param = 0.0;
  double b_uniform = 0.0;
  double b_pd_uniform_init = 0.0;
  double b_pd_planted_init = 0.0;
  double comparator = 0.0;
  double phi_a = 0.0;
  double stderr = 0.0;
  double sup = 0.0;
  std::string tag;
  bool crosses = false;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  /// First crossing and the grid point before it.
  std::optional<std::pair<double, double>> bracket;
  std::optional<double> threshold;
};

struct ScanOptions {
  SupOptions sup;
  /// Crossing requires sup - comparator > max(se_factor * SE, min_margin).
  double se_factor = 3.0;
  double min_margin = 1e-9;
};

/// Scans a parameter grid; comparator(model) returns the benchmark value
/// (phi_a when empty). Grid points run concurrently, rows are kept in grid
/// order.
inline ScanResult threshold_scan(const std::function<ModelSpec(double)>& model_at, const std::vector<double>& grid,
                                 const std::function<double(const ModelSpec&)>& comparator, const ScanOptions& options,
                                 std::uint64_t seed, unsigned workers = 1) {
  require(!grid.empty(), "threshold_scan: empty grid");
  require(std::is_sorted(grid.begin(), grid.end()), "threshold_scan: grid must be sorted");
  ScanResult out;
  out.rows.resize(grid.size());
  parallel_for(grid.size(), workers, [&](std::size_t i) {
    const ModelSpec model = model_at(grid[i]);
    ScanRow row;
    row.param = grid[i];
    row.phi_a = annealed_free_entropy(model);
    row.comparator = comparator ? comparator(model) : row.phi_a;
    SupOptions sup = options.sup;
    sup.workers = 1;
    const SupBethe s = sup_bethe(model, sup, derive_seed(seed, i));
    row.sup = s.value;
    row.stderr = s.stderr;
    row.tag = s.tag;
    row.b_uniform = s.candidates[0].estimate.value;
    row.b_pd_uniform_init = -std::numeric_limits<double>::infinity();
    row.b_pd_planted_init = -std::numeric_limits<double>::infinity();
    for (const auto& c : s.candidates) {
      if (c.tag.rfind("uniform-perturbed", 0) == 0) row.b_pd_uniform_init = std::max(row.b_pd_uniform_init, c.estimate.value);
      if (c.tag.rfind("planted-polarized", 0) == 0) row.b_pd_planted_init = std::max(row.b_pd_planted_init, c.estimate.value);
    }
    row.crosses = row.sup - row.comparator > std::max(options.se_factor * row.stderr, options.min_margin);
    out.rows[i] = row;
  });
  for (std::size_t i = 0; i < out.rows.size(); ++i)
    if (out.rows[i].crosses) {
      out.threshold = out.rows[i].param;
      out.bracket = std::pair(i == 0 ? out.rows[i].param : out.rows[i - 1].param, out.rows[i].param);
      break;
    }
  return out;
}

/// As threshold_scan but throws NoCrossing when the grid never crosses.
inline ScanResult find_threshold(const std::function<ModelSpec(double)>& model_at, const std::vector<double>& grid,
                                 const std::function<double(const ModelSpec&)>& comparator, const ScanOptions& options,
                                 std::uint64_t seed, unsigned workers = 1) {
  ScanResult r = threshold_scan(model_at, grid, comparator, options, seed, workers);
  if (!r.bracket) throw Error(ErrorCode::NoCrossing, "no grid point exceeds the comparator");
  return r;
}

}  // namespace fcav
