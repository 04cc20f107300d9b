#pragma once

// Concrete model constructors: LDGM codes over a binary symmetric channel,
// the stochastic block model / Potts antiferromagnet, and the diluted mixed
// k-spin model with discretised Gaussian couplings.
//
// Binary spins use index 0 for +1 and index 1 for -1.

#include <cmath>
#include <vector>

#include "fcav/bethe.hpp"
#include "fcav/graphmodel.hpp"

namespace fcav {

inline int spin_sign(int index) { return index == 0 ? 1 : -1; }

/// Product of the +-1 values of a binary configuration.
inline int parity_sign(std::span<const int> config) {
  int s = 1;
  for (int c : config) s *= spin_sign(c);
  return s;
}

/// Table entries f(prod sigma_i) for a binary alphabet.
inline WeightTable parity_table(int k, double value_even, double value_odd, std::string label) {
  WeightTable t;
  t.arity = k;
  t.label = std::move(label);
  t.values.resize(ipow(2, k));
  std::vector<int> config(static_cast<std::size_t>(k));
  for (std::size_t idx = 0; idx < t.values.size(); ++idx) {
    decode_config(idx, 2, config);
    t.values[idx] = parity_sign(config) > 0 ? value_even : value_odd;
  }
  return t;
}

/// psi_{eta,k,J}(sigma) = 1 - (1 - 2 eta) J prod sigma_i, with J = +-1 each
/// of mass 1/2. Table id 0 is J = +1, id 1 is J = -1.
inline ModelSpec ldgm(double eta, const DegreeSpec& dspec, const DegreeSpec& kspec) {
  require(eta > 0.0 && eta < 1.0, "ldgm: eta must lie in (0, 1)");
  auto family = std::make_shared<WeightFamily>(2);
  const double c = 1.0 - 2.0 * eta;
  for (int k : kspec.support()) {
    family->add(parity_table(k, 1.0 - c, 1.0 + c, "J=+1"), 0.5);
    family->add(parity_table(k, 1.0 + c, 1.0 - c, "J=-1"), 0.5);
  }
  ModelSpec m;
  m.name = "ldgm";
  m.dspec = dspec;
  m.kspec = kspec;
  m.family = family;
  m.params = {{"eta", eta}};
  return m;
}

inline constexpr int kLdgmPlus = 0;
inline constexpr int kLdgmMinus = 1;

struct ChannelOutput {
  /// Per-factor parity bit of the codeword A(G) x.
  std::vector<int> codeword;
  /// Codeword after independent flips with probability eta.
  std::vector<int> observed;
  /// Table id per factor induced by the observation.
  std::vector<int> labels;
  /// The input topology with the induced labels attached.
  FactorGraph graph;
};

/// Sends the parities of x through a binary symmetric channel. The label of
/// factor a is J = -(+-1 value of the observed bit), which makes the label
/// law coincide with the colour-dependent weight choice of the planted
/// construction for the ldgm family.
inline ChannelOutput ldgm_channel(const FactorGraph& topology, const Assignment& x, double eta, std::uint64_t seed,
                                  const FamilyPtr& family = nullptr) {
  require(x.q == 2 && x.n() == topology.n(), "ldgm_channel: binary assignment of matching length");
  require(eta >= 0.0 && eta <= 1.0, "ldgm_channel: eta must lie in [0, 1]");
  Rng rng = substream(seed, 0xb5c);
  ChannelOutput out;
  std::vector<Factor> factors = topology.factors();
  for (Factor& f : factors) {
    int bit = 0;
    for (int v : f.vars) bit ^= x.spins[static_cast<std::size_t>(v)];
    const int flipped = bit ^ (uniform01(rng) < eta ? 1 : 0);
    out.codeword.push_back(bit);
    out.observed.push_back(flipped);
    // observed bit 0 is +1, so J = -1; observed bit 1 gives J = +1
    const int label = flipped == 0 ? kLdgmMinus : kLdgmPlus;
    out.labels.push_back(label);
    f.weight_id = label;
  }
  out.graph = FactorGraph(topology.n(), 2, std::move(factors), family, topology.pins(), topology.cavities());
  return out;
}

inline WeightTable pair_table(int q, double equal, double different, std::string label) {
  WeightTable t;
  t.arity = 2;
  t.label = std::move(label);
  t.values.resize(static_cast<std::size_t>(q * q));
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b) t.values[static_cast<std::size_t>(a * q + b)] = a == b ? equal : different;
  return t;
}

/// psi(s1, s2) = exp(-beta 1{s1 = s2}) on [q], arity two.
inline ModelSpec sbm(int q, double beta, const DegreeSpec& dspec) {
  require(q >= 2, "sbm: q must be >= 2");
  require(beta >= 0.0, "sbm: beta must be >= 0");
  auto family = std::make_shared<WeightFamily>(q);
  family->add(pair_table(q, std::exp(-beta), 1.0, "exp(-beta 1{=})"), 1.0);
  ModelSpec m;
  m.name = "sbm";
  m.dspec = dspec;
  m.kspec = DegreeSpec::constant(2);
  m.family = family;
  m.params = {{"q", q}, {"beta", beta}, {"d", dspec.mean()}};
  return m;
}

inline ModelSpec sbm(int q, double beta, int d) {
  require(d >= 1, "sbm: d must be >= 1");
  return sbm(q, beta, DegreeSpec::constant(d));
}

/// Same tables as sbm; the quantity of interest is the null model's free
/// entropy against phi_a.
inline ModelSpec potts(int q, double beta, int d) {
  ModelSpec m = sbm(q, beta, d);
  m.name = "potts";
  m.focus = "null";
  return m;
}

/// psi(s1, s2) = exp(+beta 1{s1 = s2}).
inline ModelSpec assortative_sbm(int q, double beta, int d) {
  require(q >= 2 && beta >= 0.0 && d >= 1, "assortative_sbm: invalid parameters");
  auto family = std::make_shared<WeightFamily>(q);
  family->add(pair_table(q, std::exp(beta), 1.0, "exp(+beta 1{=})"), 1.0);
  ModelSpec m;
  m.name = "assortative-sbm";
  m.dspec = DegreeSpec::constant(d);
  m.kspec = DegreeSpec::constant(2);
  m.family = family;
  m.params = {{"q", q}, {"beta", beta}, {"d", d}};
  return m;
}

/// Uniform-atom value ln q + (d/2) ln(1 - (1 - e^{-beta})/q).
inline double sbm_comparator(int q, double d, double beta) {
  return std::log(static_cast<double>(q)) + 0.5 * d * std::log(1.0 - (1.0 - std::exp(-beta)) / q);
}

struct Discretization {
  std::vector<double> levels;
  std::vector<double> masses;
};

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// 2 r^2-level discretisation of a standard Gaussian: negative intervals of
/// width 1/r map to their left end, positive ones to their right end, and the
/// tails are clamped to +-r. Masses are mirrored so the law is exactly
/// symmetric.
inline Discretization discretize_gaussian(int r) {
  require(r >= 1, "discretize_gaussian: r must be >= 1");
  const int half = r * r;
  std::vector<double> positive_mass(static_cast<std::size_t>(half));
  for (int i = 0; i < half; ++i) {
    const double lo = static_cast<double>(i) / r;
    const double hi = static_cast<double>(i + 1) / r;
    // upper tail mass via erfc keeps precision far out
    const double upper_lo = 0.5 * std::erfc(lo / std::sqrt(2.0));
    const double upper_hi = i + 1 == half ? 0.0 : 0.5 * std::erfc(hi / std::sqrt(2.0));
    positive_mass[static_cast<std::size_t>(i)] = upper_lo - upper_hi;
  }
  Discretization out;
  for (int i = half - 1; i >= 0; --i) {
    out.levels.push_back(-static_cast<double>(i + 1) / r);
    out.masses.push_back(positive_mass[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < half; ++i) {
    out.levels.push_back(static_cast<double>(i + 1) / r);
    out.masses.push_back(positive_mass[static_cast<std::size_t>(i)]);
  }
  double s = 0.0;
  for (double p : out.masses) s += p;
  for (double& p : out.masses) p /= s;
  return out;
}

/// Mixed k-spin model with Po(d) variable degrees (truncated at 64) and
/// tables 1 + tanh(beta J) prod sigma_i; each table records ln cosh(beta J)
/// as its log-normaliser.
inline ModelSpec kspin(double beta, double d, const DegreeSpec& kspec, int r = 6) {
  require(beta >= 0.0, "kspin: beta must be >= 0");
  require(d >= 0.0, "kspin: d must be >= 0");
  require(kspec.probability(2) > 0.0, "kspin: kspec needs P[k=2] > 0");
  const Discretization J = discretize_gaussian(r);
  auto family = std::make_shared<WeightFamily>(2);
  for (int k : kspec.support()) {
    require(k >= 2, "kspin: arities must be >= 2");
    for (std::size_t i = 0; i < J.levels.size(); ++i) {
      const double t = std::tanh(beta * J.levels[i]);
      WeightTable table = parity_table(k, 1.0 + t, 1.0 - t, "J=" + std::to_string(J.levels[i]));
      table.log_normalizer = std::log(std::cosh(beta * J.levels[i]));
      family->add(std::move(table), J.masses[i]);
    }
  }
  ModelSpec m;
  m.name = "kspin";
  m.dspec = DegreeSpec::poisson(d);
  m.kspec = kspec;
  m.family = family;
  m.params = {{"beta", beta}, {"d", d}, {"r", r}};
  m.focus = "null";
  return m;
}

/// E[tanh(beta J)^2] under the discretised coupling law.
inline double kspin_tanh_second_moment(double beta, int r) {
  const Discretization J = discretize_gaussian(r);
  double s = 0.0;
  for (std::size_t i = 0; i < J.levels.size(); ++i) s += J.masses[i] * std::pow(std::tanh(beta * J.levels[i]), 2);
  return s;
}

/// Scan of the k-spin model over average degrees against ln 2.
inline ScanResult lrc_threshold(double beta, const DegreeSpec& kspec, const std::vector<double>& d_grid, std::uint64_t seed,
                                const ScanOptions& options, int r = 6, unsigned workers = 1) {
  return find_threshold([&](double d) { return kspin(beta, d, kspec, r); }, d_grid,
                        [](const ModelSpec&) { return std::log(2.0); }, options, seed, workers);
}

}  // namespace fcav
