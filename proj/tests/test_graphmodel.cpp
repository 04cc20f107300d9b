#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"

using namespace fcav;

namespace {

std::vector<std::vector<int>> factor_vars(const FactorGraph& g) {
  std::vector<std::vector<int>> out;
  for (const auto& f : g.factors()) out.push_back(f.vars);
  return out;
}

ModelSpec ldgm22(double eta) { return ldgm(eta, DegreeSpec::constant(2), DegreeSpec::constant(2)); }

}  // namespace

TEST(DegreeSequence, ConstantDegreesForceFactorCount) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = sample_degree_sequence(4, DegreeSpec::constant(2), DegreeSpec::constant(2), seed);
    EXPECT_EQ(a.m(), 4);
    for (int d : a.var_degrees) EXPECT_EQ(d, 2);
    const auto b = sample_degree_sequence(6, DegreeSpec::constant(3), DegreeSpec::constant(2), seed);
    EXPECT_EQ(b.m(), 9);
    EXPECT_EQ(b.total_var_degree(), b.total_fac_degree());
  }
}

TEST(DegreeSequence, AcceptanceRateMatchesConvolution) {
  const DegreeSpec d = parse_degree_spec("2:0.5,3:0.5");
  const DegreeSpec k = DegreeSpec::constant(3);
  const int n = 100;
  const double p = oracle::balanced_probability(n, {{2, 0.5}, {3, 0.5}}, {{3, 1.0}}, n * 2.5 / 3.0);
  const long trials = 10'000;
  double attempts = 0;
  for (long t = 0; t < trials; ++t) attempts += 1.0 + static_cast<double>(sample_degree_sequence(n, d, k, 1000 + t).rejections);
  const double rate = static_cast<double>(trials) / attempts;
  // attempts per acceptance are geometric; the rate estimate has sd p sqrt((1-p)/trials)
  const double sd = p * std::sqrt((1.0 - p) / static_cast<double>(trials));
  EXPECT_NEAR(rate, p, 3 * sd) << "exact probability " << p;
}

TEST(DegreeSequence, ExhaustedAttemptsThrow) {
  // odd total variable degree can never match even factor degree
  try {
    sample_degree_sequence(3, DegreeSpec::constant(1), DegreeSpec::constant(2), 1, 1000);
    FAIL() << "expected AttemptsExhausted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AttemptsExhausted);
  }
}

TEST(PrunedSequence, CavitiesAreNonnegative) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = sample_pruned_sequence(10, 0.5, DegreeSpec::constant(2), DegreeSpec::constant(2), seed);
    EXPECT_EQ(s.cavities(), 20 - 2 * s.m());
    EXPECT_GE(s.cavities(), 0);
  }
}

TEST(PrunedSequence, MeanCavityDensity) {
  const int n = 10'000;
  RunningStats stats;
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    stats.add(static_cast<double>(sample_pruned_sequence(n, 0.1, DegreeSpec::constant(3), DegreeSpec::constant(3), seed).cavities()) / n);
  EXPECT_NEAR(stats.mean(), 0.3, 3 * stats.stderr_of_mean());
}

TEST(PrunedSequence, ZeroEpsKeepsTheUnprunedPoissonMean) {
  // eps = 0: m ~ Po(n d / k) = Po(10), kept when 3m <= 30, so the law is the
  // Poisson law conditioned on m <= 10
  double mass = 0.0, first = 0.0, term = std::exp(-10.0);
  for (int m = 0; m <= 10; ++m) {
    if (m > 0) term *= 10.0 / m;
    mass += term;
    first += m * term;
  }
  RunningStats stats;
  for (std::uint64_t seed = 0; seed < 4000; ++seed)
    stats.add(sample_pruned_sequence(10, 0.0, DegreeSpec::constant(3), DegreeSpec::constant(3), seed).m());
  EXPECT_NEAR(stats.mean(), first / mass, 4 * stats.stderr_of_mean());
}

TEST(PairUniform, SingleFactorOnTwoVariables) {
  DegreeSequence seq;
  seq.n = 2;
  seq.var_degrees = {1, 1};
  seq.fac_arities = {2};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto vars = pair_uniform(seq, seed).factors()[0].vars;
    std::sort(vars.begin(), vars.end());
    EXPECT_EQ(vars, (std::vector<int>{0, 1}));
  }
}

TEST(PairUniform, LawMatchesEnumeration) {
  DegreeSequence seq;
  seq.n = 3;
  seq.var_degrees = {2, 2, 2};
  seq.fac_arities = {2, 2, 2};
  const auto law = oracle::pairing_law(seq.var_degrees, seq.fac_arities);
  std::map<std::vector<std::vector<int>>, double> counts;
  const int draws = 100'000;
  for (int t = 0; t < draws; ++t) counts[factor_vars(pair_uniform(seq, static_cast<std::uint64_t>(t)))] += 1.0;
  for (const auto& [key, c] : counts) EXPECT_TRUE(law.count(key)) << "graph outside the support";
  for (const auto& [key, p] : law) {
    const double freq = counts[key] / draws;
    EXPECT_NEAR(freq, p, 4 * std::sqrt(p * (1 - p) / draws));
  }
}

TEST(PairUniform, MaximalMatchingLeavesCavities) {
  const auto seq = sample_pruned_sequence(30, 0.3, DegreeSpec::constant(3), DegreeSpec::constant(3), 5);
  const FactorGraph g = pair_uniform(seq, 9);
  EXPECT_EQ(static_cast<long>(g.cavities().size()), seq.cavities());
  std::vector<int> used(30, 0);
  for (const auto& f : g.factors()) {
    EXPECT_EQ(f.arity(), 3);
    for (int v : f.vars) ++used[static_cast<std::size_t>(v)];
  }
  for (const auto& c : g.cavities()) ++used[static_cast<std::size_t>(c.var)];
  for (int i = 0; i < 30; ++i) EXPECT_EQ(used[static_cast<std::size_t>(i)], seq.var_degrees[static_cast<std::size_t>(i)]);
}

TEST(PairUniform, SimpleOnlyRejectsRepeatedVariables) {
  const auto seq = sample_degree_sequence(12, DegreeSpec::constant(3), DegreeSpec::constant(3), 2);
  PairingOptions opt;
  opt.simple_only = true;
  for (std::uint64_t seed = 0; seed < 50; ++seed) EXPECT_TRUE(pair_uniform(seq, seed, 2, opt).is_simple());
}

TEST(SampleNull, SingleTableIsDeterministic) {
  const ModelSpec m = sbm(2, 1.0, 3);
  const FactorGraph g = sample_null(10, m.dspec, m.kspec, m.family, 3);
  for (const auto& f : g.factors()) EXPECT_EQ(f.weight_id, 0);
}

TEST(SampleNull, LdgmLabelsAreFair) {
  const ModelSpec m = ldgm(0.1, DegreeSpec::constant(3), DegreeSpec::constant(3));
  double plus = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const FactorGraph g = sample_null(30, m.dspec, m.kspec, m.family, seed);
    for (const auto& f : g.factors()) {
      plus += f.weight_id == kLdgmPlus;
      total += 1;
    }
  }
  EXPECT_NEAR(plus / total, 0.5, 4 * std::sqrt(0.25 / total));
}

TEST(SampleNull, WeightsIndependentOfTopology) {
  const ModelSpec m = ldgm22(0.1);
  DegreeSequence seq;
  seq.n = 4;
  seq.var_degrees = {2, 2, 2, 2};
  seq.fac_arities = {2, 2, 2, 2};
  const int draws = 100'000;
  // edge indicator: factor 0 touches variable 0; label indicator: factor 0 has J = +1
  double e = 0, l = 0, el = 0;
  for (int t = 0; t < draws; ++t) {
    const FactorGraph g = sample_null(seq, m.family, static_cast<std::uint64_t>(t));
    const auto& f = g.factors()[0];
    const double a = std::count(f.vars.begin(), f.vars.end(), 0) > 0;
    const double b = f.weight_id == kLdgmPlus;
    e += a;
    l += b;
    el += a * b;
  }
  e /= draws;
  l /= draws;
  el /= draws;
  const double cov = el - e * l;
  const double sd = std::sqrt(e * (1 - e) * l * (1 - l) / draws);
  EXPECT_NEAR(cov, 0.0, 4 * sd);
}

TEST(SamplePlanted, ConstantWeightsGiveTheNullLaw) {
  const ModelSpec m = sbm(2, 0.0, 2);
  DegreeSequence seq;
  seq.n = 3;
  seq.var_degrees = {2, 1, 1};
  seq.fac_arities = {2, 2};
  const auto topo = oracle::pairing_law(seq.var_degrees, seq.fac_arities);
  for (int code = 0; code < 8; ++code) {
    const Assignment sigma({code >> 2 & 1, code >> 1 & 1, code & 1}, 2);
    const GraphLaw law = planted_law_sharp(seq, sigma, *m.family);
    double total = 0;
    for (const auto& [key, p] : law) {
      std::vector<std::vector<int>> fv = {{key[1], key[2]}, {key[4], key[5]}};
      EXPECT_NEAR(p, topo.at(fv), 1e-12);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(SamplePlanted, LdgmLabelAgreesWithParity) {
  // sigma = +1 everywhere (spin index 0), so prod sigma = +1 and the table
  // with psi = 1 - eta is J = -1: psi_{J}(+1...) = 1 - (1 - 2 eta) J
  const double eta = 0.2;
  const ModelSpec m = ldgm(eta, DegreeSpec::constant(3), DegreeSpec::constant(3));
  const auto seq = sample_degree_sequence(60, m.dspec, m.kspec, 4);
  const Assignment sigma(std::vector<int>(60, 0), 2);
  EXPECT_NEAR(m.family->table(3, kLdgmMinus).values[0], 2 * (1 - eta), 1e-15);
  // a monochromatic sigma forces the colouring, so skip the long rejection stage
  PlantedOptions opt;
  opt.rejection_cap = 1;
  double agree = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const FactorGraph g = sample_planted(seq, sigma, m.family, 0, seed, opt);
    for (const auto& f : g.factors()) {
      agree += f.weight_id == kLdgmMinus;
      total += 1;
    }
  }
  EXPECT_NEAR(agree / total, 1 - eta, 4 * std::sqrt(eta * (1 - eta) / total));
}

TEST(SamplePlanted, LawMatchesDefinitionEmpirically) {
  const ModelSpec m = sbm(2, 1.2, 2);
  DegreeSequence seq;
  seq.n = 3;
  seq.var_degrees = {2, 2, 2};
  seq.fac_arities = {2, 2, 2};
  const Assignment sigma({0, 0, 1}, 2);
  const GraphLaw law = planted_law_definition(seq, sigma, *m.family, 1);
  std::map<GraphKey, double> counts;
  const int draws = 50'000;
  for (int t = 0; t < draws; ++t) counts[sample_planted(seq, sigma, m.family, 1, static_cast<std::uint64_t>(t)).key()] += 1;
  for (const auto& [key, c] : counts) EXPECT_TRUE(law.count(key));
  for (const auto& [key, p] : law) EXPECT_NEAR(counts[key] / draws, p, 4 * std::sqrt(p * (1 - p) / draws) + 1e-12);
}

TEST(SamplePlanted, McmcFallbackTargetsTheSameLaw) {
  const ModelSpec m = sbm(2, 1.5, 2);
  DegreeSequence seq;
  seq.n = 3;
  seq.var_degrees = {2, 2, 2};
  seq.fac_arities = {2, 2, 2};
  const Assignment sigma({1, 1, 1}, 2);
  const GraphLaw law = planted_law_definition(seq, sigma, *m.family);
  PlantedOptions opt;
  opt.rejection_cap = 1;
  std::map<GraphKey, double> counts;
  const int draws = 20'000;
  bool used = false;
  for (int t = 0; t < draws; ++t) {
    PlantedDiagnostics diag;
    counts[sample_planted(seq, sigma, m.family, 0, static_cast<std::uint64_t>(t), opt, &diag).key()] += 1;
    used = used || diag.used_mcmc;
  }
  EXPECT_TRUE(used);
  for (const auto& [key, p] : law) EXPECT_NEAR(counts[key] / draws, p, 4 * std::sqrt(p * (1 - p) / draws) + 1e-12);
}

TEST(SamplePlanted, NoFallbackThrows) {
  const ModelSpec m = sbm(2, 4.0, 2);
  const auto seq = sample_degree_sequence(40, m.dspec, m.kspec, 1);
  PlantedOptions opt;
  opt.rejection_cap = 1;
  opt.mcmc_fallback = false;
  // all-equal sigma under strong disassortative weights is essentially never accepted at once
  EXPECT_THROW(sample_planted(seq, Assignment(std::vector<int>(40, 0), 2), m.family, 0, 1, opt), Error);
}

TEST(SamplePlanted, PinsFollowSigma) {
  const ModelSpec m = sbm(3, 1.0, 3);
  const auto seq = sample_degree_sequence(12, m.dspec, m.kspec, 1);
  Rng rng = substream(5);
  const Assignment sigma = uniform_assignment(12, 3, rng);
  const FactorGraph g = sample_planted(seq, sigma, m.family, 5, 11);
  ASSERT_EQ(g.pins().size(), 5u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(g.pins()[static_cast<std::size_t>(i)].var, i);
    EXPECT_EQ(g.pins()[static_cast<std::size_t>(i)].spin, sigma[static_cast<std::size_t>(i)]);
  }
  EXPECT_GT(g.weight(sigma.spins), 0.0);
}

TEST(SamplePlanted, SingleLetterAlphabet) {
  auto family = std::make_shared<WeightFamily>(1);
  WeightTable t;
  t.arity = 2;
  t.values = {1.0};
  family->add(t, 1.0);
  const auto seq = sample_degree_sequence(5, DegreeSpec::constant(2), DegreeSpec::constant(2), 1);
  const Assignment sigma(std::vector<int>(5, 0), 1);
  const FactorGraph g = sample_planted(seq, sigma, family, 5, 2);
  EXPECT_DOUBLE_EQ(g.weight(sigma.spins), 1.0);
  EXPECT_DOUBLE_EQ(std::exp(partition_function(g).log_z), 1.0);
}

TEST(SamplePlanted, FactorColourBalance) {
  // sigma with equal colour counts; each factor-clone colour count has mean |clones| / q
  const ModelSpec m = sbm(2, 1.0, 3);
  const auto seq = sample_degree_sequence(20, m.dspec, m.kspec, 3);
  std::vector<int> s(20);
  for (int i = 0; i < 20; ++i) s[static_cast<std::size_t>(i)] = i % 2;
  const Assignment sigma(s, 2);
  RunningStats first_clone;
  const int draws = 20'000;
  for (int t = 0; t < draws; ++t) {
    const FactorGraph g = sample_planted(seq, sigma, m.family, 0, static_cast<std::uint64_t>(t));
    first_clone.add(sigma[static_cast<std::size_t>(g.factors()[0].vars[0])]);
  }
  EXPECT_NEAR(first_clone.mean(), 0.5, 4 * first_clone.stderr_of_mean());
}

TEST(SamplePlanted, Reproducible) {
  const ModelSpec m = ldgm(0.1, DegreeSpec::constant(3), DegreeSpec::constant(3));
  const auto seq = sample_degree_sequence(30, m.dspec, m.kspec, 1);
  Rng rng = substream(1);
  const Assignment sigma = uniform_assignment(30, 2, rng);
  EXPECT_EQ(sample_planted(seq, sigma, m.family, 2, 77).key(), sample_planted(seq, sigma, m.family, 2, 77).key());
}

TEST(Nishimori, ZeroBetaIsUniform) {
  const ModelSpec m = sbm(2, 0.0, 2);
  DegreeSequence seq;
  seq.n = 3;
  seq.var_degrees = {2, 1, 1};
  seq.fac_arities = {2, 2};
  for (const auto& [sigma, p] : nishimori_assignment_law(seq, *m.family)) EXPECT_NEAR(p, 1.0 / 8, 1e-15);
}

TEST(Nishimori, LawIsNormalised) {
  const ModelSpec m = ldgm22(0.3);
  DegreeSequence seq;
  seq.n = 3;
  seq.var_degrees = {2, 1, 1};
  seq.fac_arities = {2, 2};
  double total = 0;
  for (const auto& [sigma, p] : nishimori_assignment_law(seq, *m.family)) total += p;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Nishimori, LdgmLawMatchesIndependentEnumeration) {
  const ModelSpec m = ldgm22(0.1);
  DegreeSequence seq;
  seq.n = 3;
  seq.var_degrees = {2, 1, 1};
  seq.fac_arities = {2, 2};
  const auto expected = oracle::nishimori_law(seq.var_degrees, seq.fac_arities, *m.family);
  const auto law = nishimori_assignment_law(seq, *m.family);
  ASSERT_EQ(law.size(), expected.size());
  for (const auto& [sigma, p] : law) {
    std::size_t code = 0;
    for (int s : sigma.spins) code = code * 2 + static_cast<std::size_t>(s);
    EXPECT_NEAR(p, expected[code], 1e-10);
  }
}

TEST(Nishimori, ApproximateModeIsTagged) {
  const ModelSpec m = sbm(2, 1.0, 3);
  const auto d = sample_nishimori(40, m.dspec, m.kspec, m.family, 3, true);
  EXPECT_TRUE(d.contiguity_approximate);
  EXPECT_EQ(d.graph.n(), 40);
}

TEST(Pin, ZeroThetaIsIdentity) {
  const ModelSpec m = sbm(2, 1.0, 3);
  const FactorGraph g = sample_null(8, m.dspec, m.kspec, m.family, 1);
  EXPECT_EQ(pin(g, 0, 3).key(), g.key());
}

TEST(Pin, PinningAllVariablesLeavesOneTerm) {
  const ModelSpec m = sbm(3, 0.8, 3);
  const FactorGraph g = sample_null(6, m.dspec, m.kspec, m.family, 2);
  const FactorGraph p = pin(g, 6, 4);
  std::vector<int> pattern(6);
  for (const auto& pn : p.pins()) pattern[static_cast<std::size_t>(pn.var)] = pn.spin;
  EXPECT_NEAR(std::exp(partition_function(p).log_z), g.weight(pattern), 1e-12);
}

TEST(Pin, PinnedZMatchesRestrictedEnumeration) {
  const ModelSpec m = ldgm22(0.2);
  const FactorGraph g = sample_null(4, m.dspec, m.kspec, m.family, 6);
  const FactorGraph p = pin_to(g, {1, 3}, {0, 1});
  EXPECT_NEAR(partition_function(p).log_z, std::log(oracle::partition_function(p)), 1e-12);
  EXPECT_LE(partition_function(p).log_z, partition_function(g).log_z);
}

TEST(Pin, LemmaModeDrawsThetaAndSubset) {
  const ModelSpec m = sbm(2, 1.0, 3);
  const FactorGraph g = sample_null(50, m.dspec, m.kspec, m.family, 1);
  const Assignment pattern(std::vector<int>(50, 1), 2);
  RunningStats sizes;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const LemmaPinning lp = pin_lemma(g, 10.0, pattern, seed);
    EXPECT_GT(lp.theta, 0.0);
    EXPECT_LT(lp.theta, 10.0);
    EXPECT_EQ(lp.graph.pins().size(), lp.pinned.size());
    for (const auto& p : lp.graph.pins()) EXPECT_EQ(p.spin, 1);
    sizes.add(static_cast<double>(lp.pinned.size()));
  }
  // E|U| = E[Theta] = T / 2
  EXPECT_NEAR(sizes.mean(), 5.0, 4 * sizes.stderr_of_mean());
}

TEST(GraphFormat, RoundTrip) {
  const ModelSpec m = ldgm(0.1, DegreeSpec::constant(3), parse_degree_spec("2:0.5,3:0.5"));
  const FactorGraph g = pin(sample_null(20, m.dspec, m.kspec, m.family, 3), 3, 1);
  const FactorGraph back = graph_from_string(graph_to_string(g), m.family);
  EXPECT_EQ(back.key(), g.key());
  EXPECT_EQ(back.n(), g.n());
  EXPECT_THROW(graph_from_string("3 1 2\n2 0 0\n", m.family), Error);
}
