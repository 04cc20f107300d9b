#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace fcav;

TEST(Ldgm, OneHalfGivesConstantTables) {
  const auto m = ldgm(0.5, DegreeSpec::constant(3), parse_degree_spec("2:0.5,3:0.5"));
  EXPECT_EQ(m.family->min_entry(), 1.0);
  EXPECT_EQ(m.family->max_entry(), 1.0);
}

TEST(Ldgm, TableEntries) {
  const auto m = ldgm(0.1, DegreeSpec::constant(3), DegreeSpec::constant(2));
  // J = +1 at sigma = (+1, +1): 1 - 0.8 = 0.2
  const std::vector<int> plus_plus = {0, 0}, plus_minus = {0, 1};
  EXPECT_NEAR(m.family->table(2, kLdgmPlus)(plus_plus, 2), 0.2, 1e-15);
  EXPECT_NEAR(m.family->table(2, kLdgmPlus)(plus_minus, 2), 1.8, 1e-15);
  EXPECT_NEAR(m.family->table(2, kLdgmMinus)(plus_plus, 2), 1.8, 1e-15);
  EXPECT_EQ(m.family->masses(2), (std::vector<double>{0.5, 0.5}));
}

TEST(Ldgm, RejectsEndpoints) {
  EXPECT_THROW(ldgm(0.0, DegreeSpec::constant(3), DegreeSpec::constant(3)), Error);
  EXPECT_THROW(ldgm(1.0, DegreeSpec::constant(3), DegreeSpec::constant(3)), Error);
}

TEST(LdgmChannel, NoiselessChannelOnZeroInput) {
  const auto seq = sample_degree_sequence(12, DegreeSpec::constant(3), DegreeSpec::constant(3), 1);
  const FactorGraph topo = pair_uniform(seq, 2);
  const Assignment zero(std::vector<int>(12, 0), 2);
  const auto out = ldgm_channel(topo, zero, 0.0, 3);
  for (std::size_t a = 0; a < out.codeword.size(); ++a) {
    EXPECT_EQ(out.codeword[a], 0);
    EXPECT_EQ(out.observed[a], 0);
    EXPECT_EQ(out.labels[a], kLdgmMinus);
  }
}

TEST(LdgmChannel, LabelsFollowThePlantedWeightLaw) {
  // with sigma = x the planted construction picks table J with probability
  // proportional to mass * psi_J(sigma_a); the channel must do the same
  const double eta = 0.2;
  const auto m = ldgm(eta, DegreeSpec::constant(3), DegreeSpec::constant(3));
  const auto seq = sample_degree_sequence(9, DegreeSpec::constant(3), DegreeSpec::constant(3), 4);
  const FactorGraph topo = pair_uniform(seq, 5);
  Rng rng = substream(6);
  const Assignment x = uniform_assignment(9, 2, rng);
  const int trials = 20'000;
  std::vector<double> minus(static_cast<std::size_t>(topo.m()), 0.0);
  for (int t = 0; t < trials; ++t) {
    const auto out = ldgm_channel(topo, x, eta, static_cast<std::uint64_t>(t));
    for (int a = 0; a < topo.m(); ++a) minus[static_cast<std::size_t>(a)] += out.labels[static_cast<std::size_t>(a)] == kLdgmMinus;
  }
  for (int a = 0; a < topo.m(); ++a) {
    std::vector<int> config;
    for (int v : topo.factors()[static_cast<std::size_t>(a)].vars) config.push_back(x.spins[static_cast<std::size_t>(v)]);
    const double wp = oracle::table_value(m.family->table(3, kLdgmPlus), 2, config);
    const double wm = oracle::table_value(m.family->table(3, kLdgmMinus), 2, config);
    const double p = wm / (wp + wm);
    const double freq = minus[static_cast<std::size_t>(a)] / trials;
    EXPECT_NEAR(freq, p, 4 * std::sqrt(p * (1 - p) / trials)) << "factor " << a;
  }
}

TEST(Sbm, ZeroBetaIsConstant) {
  const auto m = sbm(3, 0.0, 4);
  EXPECT_EQ(m.family->min_entry(), 1.0);
  EXPECT_EQ(m.family->max_entry(), 1.0);
}

TEST(Sbm, TableAndComparator) {
  const auto m = sbm(2, std::log(2.0), 3);
  const std::vector<int> same = {1, 1}, diff = {0, 1};
  EXPECT_NEAR(m.family->table(2, 0)(same, 2), 0.5, 1e-15);
  EXPECT_EQ(m.family->table(2, 0)(diff, 2), 1.0);
  for (int q : {2, 3, 6})
    for (double beta : {0.2, 1.0, 4.0})
      for (int d : {2, 5}) {
        const double phi = std::log(static_cast<double>(q)) + 0.5 * d * std::log(1.0 - (1.0 - std::exp(-beta)) / q);
        EXPECT_NEAR(sbm_comparator(q, d, beta), phi, 1e-14);
        EXPECT_NEAR(annealed_free_entropy(sbm(q, beta, d)), phi, 1e-12);
      }
}

TEST(Kspin, SymmetricCouplingLaw) {
  for (int r : {1, 3, 8}) {
    const auto J = discretize_gaussian(r);
    ASSERT_EQ(J.levels.size(), static_cast<std::size_t>(2 * r * r));
    double total = 0.0;
    for (std::size_t i = 0; i < J.levels.size(); ++i) {
      EXPECT_EQ(J.levels[i], -J.levels[J.levels.size() - 1 - i]);
      EXPECT_EQ(J.masses[i], J.masses[J.masses.size() - 1 - i]);
      total += J.masses[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-14);
  }
}

TEST(Kspin, LevelMassesMatchTheGaussian) {
  const auto J = discretize_gaussian(4);
  const std::size_t half = J.levels.size() / 2;
  // positive level (i+1)/r collects the interval (i/r, (i+1)/r]
  for (std::size_t i = 0; i + 1 < half; ++i) {
    const double lo = static_cast<double>(i) / 4, hi = static_cast<double>(i + 1) / 4;
    EXPECT_NEAR(J.masses[half + i], standard_normal_cdf(hi) - standard_normal_cdf(lo), 1e-14);
    EXPECT_DOUBLE_EQ(J.levels[half + i], hi);
  }
}

TEST(Kspin, MinimumEntry) {
  for (double beta : {0.5, 2.0}) {
    const int r = 3;
    const auto m = kspin(beta, 2.0, parse_degree_spec("2:0.5,3:0.5"), r);
    EXPECT_NEAR(m.family->min_entry(), 1.0 - std::tanh(beta * r), 1e-12);
    EXPECT_TRUE(check_sym(*m.family).report.passed);
  }
}

TEST(Kspin, PoissonDegreesTruncatedAtCap) {
  const auto m = kspin(1.0, 2.5, DegreeSpec::constant(2), 3);
  EXPECT_NEAR(m.dspec.mean(), 2.5, 1e-12);
  EXPECT_EQ(m.dspec.support().back(), DegreeSpec::kDefaultMaxDegree);
}

namespace {

double gaussian_tanh2(double beta) {
  return oracle::gaussian_expectation([beta](double x) { return std::pow(std::tanh(beta * x), 2); });
}

}  // namespace

TEST(Kspin, TanhSecondMomentConvergesAtRateOneOverR) {
  for (double beta : {0.5, 1.0, 2.0}) {
    const double exact = gaussian_tanh2(beta);
    const double e8 = std::abs(kspin_tanh_second_moment(beta, 8) - exact);
    const double e16 = std::abs(kspin_tanh_second_moment(beta, 16) - exact);
    const double e32 = std::abs(kspin_tanh_second_moment(beta, 32) - exact);
    EXPECT_NEAR(e16 / e8, 0.5, 0.1) << beta;
    EXPECT_NEAR(e32 / e16, 0.5, 0.1) << beta;
  }
}

TEST(LrcThreshold, VanishingBetaNeverCrosses) {
  ScanOptions so;
  so.sup.pd.pop_size = 500;
  so.sup.pd.sweeps = 20;
  so.sup.eval_samples = 20'000;
  try {
    lrc_threshold(1e-6, DegreeSpec::constant(2), {1.0, 2.0}, 1, so, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoCrossing);
  }
}

TEST(ModelJson, RoundTripKeepsTables) {
  for (const ModelSpec& m : {ldgm(0.15, DegreeSpec::constant(3), parse_degree_spec("2:0.5,3:0.5")), sbm(3, 1.2, 4),
                             kspin(0.7, 2.0, DegreeSpec::constant(2), 2)}) {
    const ModelSpec back = model_from_json(Json::parse(model_to_json(m).dump()));
    EXPECT_EQ(back.name, m.name);
    EXPECT_EQ(back.dspec.support(), m.dspec.support());
    for (int k : m.family->arities())
      for (std::size_t t = 0; t < m.family->tables(k).size(); ++t)
        EXPECT_EQ(back.family->tables(k)[t].values, m.family->tables(k)[t].values);
  }
}
