#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace fcav;

namespace {

FamilyPtr pair_family(int q, std::vector<double> values) {
  auto f = std::make_shared<WeightFamily>(q);
  WeightTable t;
  t.arity = 2;
  t.values = std::move(values);
  f->add(t, 1.0);
  return f;
}

}  // namespace

TEST(Deg, MassOnZeroMeanFails) {
  const auto r = check_deg(DegreeSpec::constant(0), DegreeSpec::constant(2));
  EXPECT_FALSE(r.passed);
  ASSERT_TRUE(r.witness.has_value());
}

TEST(Deg, SplitSupportPasses) {
  const auto r = check_deg(parse_degree_spec("0:0.5,4:0.5"), DegreeSpec::constant(2));
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.values.at("mean_d"), 2.0, 1e-15);
  EXPECT_NEAR(r.values.at("second_moment_d"), 8.0, 1e-15);
}

TEST(Sym, ReportsWitnessForBiasedTable) {
  // psi = 1{sigma_1 = 1} + 0.1 has coordinate-1 marginals 0.1 and 1.1 on q = 2
  const auto f = pair_family(2, {0.1, 0.1, 1.1, 1.1});
  const auto r = check_sym(*f);
  EXPECT_FALSE(r.report.passed);
  ASSERT_TRUE(r.report.witness.has_value());
  EXPECT_FALSE(r.xi.has_value());
  EXPECT_NEAR(r.report.detail, 1.0, 1e-14);
}

TEST(Sym, XiOfStandardFamilies) {
  for (double eta : {0.05, 0.3}) {
    const auto r = check_sym(*ldgm(eta, DegreeSpec::constant(3), parse_degree_spec("2:0.5,3:0.5")).family);
    ASSERT_TRUE(r.report.passed);
    EXPECT_NEAR(*r.xi, 1.0, 1e-15);
  }
  for (int q : {2, 5}) {
    const double beta = 1.1;
    const auto r = check_sym(*sbm(q, beta, 3).family);
    ASSERT_TRUE(r.report.passed);
    EXPECT_NEAR(*r.xi, (std::exp(-beta) + q - 1) / q, 1e-15);
  }
}

TEST(Sym, NonPositiveEntryFails) {
  const auto r = check_sym(*pair_family(2, {1.0, 0.0, 0.0, 1.0}));
  EXPECT_FALSE(r.report.passed);
}

TEST(Bal, StandardFamilies) {
  EXPECT_TRUE(check_bal(*sbm(3, 1.5, 3).family).passed);
  EXPECT_TRUE(check_bal(*pair_family(3, std::vector<double>(9, 2.0))).passed);
  EXPECT_TRUE(check_bal(*ldgm(0.2, DegreeSpec::constant(3), DegreeSpec::constant(4)).family).passed);
}

TEST(Bal, AssortativeFails) {
  const auto r = check_bal(*assortative_sbm(2, 2.0, 3).family);
  EXPECT_FALSE(r.passed);
  ASSERT_TRUE(r.witness.has_value());
}

TEST(Bal, BalanceFunctionMatchesDirectSum) {
  const auto f = sbm(3, 0.8, 3).family;
  const auto ebar = f->expected_table(2);
  const std::vector<double> mu = {0.2, 0.5, 0.3};
  double direct = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) direct += ebar[static_cast<std::size_t>(a * 3 + b)] * mu[static_cast<std::size_t>(a)] * mu[static_cast<std::size_t>(b)];
  EXPECT_NEAR(detail::balance_function(ebar, 3, 2, mu), direct, 1e-15);
}

TEST(Bal, CoarseGridIsReported) {
  BalOptions o;
  o.max_grid_points = 50;
  const auto r = check_bal(*sbm(3, 1.0, 3).family, o);
  EXPECT_TRUE(r.passed);
  EXPECT_NE(r.note.find("GridTooCoarse"), std::string::npos);
}

TEST(Pos, NoViolationForLdgmAndKspin) {
  PosOptions o;
  o.trials = 2000;
  EXPECT_TRUE(check_pos(*ldgm(0.1, DegreeSpec::constant(3), parse_degree_spec("2:0.5,3:0.5")).family, o).passed);
  EXPECT_TRUE(check_pos(*kspin(1.0, 2.0, DegreeSpec::constant(2), 3).family, o).passed);
  EXPECT_TRUE(check_pos(*sbm(3, 2.0, 3).family, o).passed);
}

TEST(Pos, AssortativeViolates) {
  PosOptions o;
  o.trials = 2000;
  const auto r = check_pos(*assortative_sbm(2, 1.0, 3).family, o);
  EXPECT_FALSE(r.passed);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_GT(r.detail, 0.0);
}

TEST(Pos, MarginVanishesAtEqualMeasures) {
  Rng rng = substream(11);
  const auto fam = ldgm(0.2, DegreeSpec::constant(3), DegreeSpec::constant(3)).family;
  for (int t = 0; t < 20; ++t) {
    const auto pi = detail::random_mixture(2, rng);
    EXPECT_NEAR(pos_margin(*fam, 3, pi, pi), 0.0, 1e-12);
  }
}

TEST(Pos, WorkerCountDoesNotChangeTheReport) {
  PosOptions a, b;
  a.trials = b.trials = 500;
  b.workers = 4;
  const auto fam = assortative_sbm(3, 0.5, 3).family;
  const auto ra = check_pos(*fam, a), rb = check_pos(*fam, b);
  EXPECT_EQ(ra.passed, rb.passed);
  EXPECT_EQ(ra.values.at("min_margin"), rb.values.at("min_margin"));
  EXPECT_EQ(ra.witness, rb.witness);
}
