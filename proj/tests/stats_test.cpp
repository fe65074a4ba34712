#include <gtest/gtest.h>

#include <cmath>

#include "biasrate/stats.hpp"
#include "test_support.hpp"

namespace biasrate {
namespace {

ValueCounts gc(std::vector<std::uint64_t> c) { return ValueCounts(gender_attribute(), std::move(c)); }

std::vector<double> as_double(const ValueCounts& c) {
  return {c.counts().begin(), c.counts().end()};
}

TEST(ChiSquare, HandDerivedReferenceValue) {
  auto r = chi_square_statistic(gc({20, 20, 0}), gc({4, 36, 0}));
  EXPECT_NEAR(r.statistic, 16.0 * 16.0 / 24.0 + 16.0 * 16.0 / 56.0, 1e-12);
  EXPECT_NEAR(r.statistic, 15.2381, 1e-4);
  EXPECT_EQ(r.degrees_of_freedom, 1);
  EXPECT_EQ(r.dropped, std::vector<std::string>{"Other"});
}

TEST(ChiSquare, AgreesWithContingencyTableOracle) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> count(0, 60);
  int checked = 0;
  while (checked < 500) {
    auto a = gc({std::uint64_t(count(rng)), std::uint64_t(count(rng)), std::uint64_t(count(rng) % 5)});
    auto b = gc({std::uint64_t(count(rng)), std::uint64_t(count(rng)), std::uint64_t(count(rng) % 3)});
    if (a.total() == 0 || b.total() == 0) continue;
    auto r = chi_square_statistic(a, b);
    EXPECT_NEAR(r.statistic, testing::contingency_chi_square(as_double(a), as_double(b)),
                1e-9 * std::max(1.0, r.statistic));
    ++checked;
  }
}

TEST(ChiSquare, SymmetricZeroOnIdentityAndScaleInvariant) {
  auto a = gc({13, 27, 0});
  auto b = gc({22, 16, 2});
  EXPECT_NEAR(chi_square_statistic(a, b).statistic, chi_square_statistic(b, a).statistic, 1e-12);
  EXPECT_EQ(chi_square_statistic(a, a).statistic, 0.0);
  // Proportional samples are identical distributions regardless of total.
  EXPECT_NEAR(chi_square_statistic(gc({10, 30, 0}), gc({20, 60, 0})).statistic, 0.0, 1e-12);
  EXPECT_NEAR(chi_square_statistic(gc({40, 0, 0}), gc({40, 0, 0})).statistic, 0.0, 1e-12);
}

TEST(ChiSquare, InputErrors) {
  EXPECT_THROW(chi_square_statistic(gc({0, 0, 0}), gc({1, 0, 0})), InputError);
  AttributeSpec other("Other attr", {"A", "Other"});
  EXPECT_THROW(chi_square_statistic(gc({1, 1, 0}), ValueCounts(other, {1, 1})), InputError);
}

TEST(IncompleteGamma, ReferenceValues) {
  EXPECT_NEAR(regularized_gamma_q(1.0, 1.0), std::exp(-1.0), 1e-10);
  EXPECT_NEAR(regularized_gamma_q(0.5, 1.92073), 0.0500, 5e-4);
  EXPECT_NEAR(regularized_gamma_q(0.5, 1.92073), 0.04999996483374756, 1e-9);
  // Q(n, x) for integer n has the closed form e^-x * sum_{k<n} x^k/k!.
  for (int n = 1; n <= 6; ++n) {
    for (double x : {0.2, 1.0, 3.5, 7.0, 15.0}) {
      double term = 1.0, sum = 0.0;
      for (int k = 0; k < n; ++k) {
        sum += term;
        term *= x / (k + 1);
      }
      EXPECT_NEAR(regularized_gamma_q(n, x), std::exp(-x) * sum, 1e-12) << n << " " << x;
    }
  }
  // Q(1/2, x) = erfc(sqrt(x)).
  for (double x = 0.05; x < 20.0; x += 0.35)
    EXPECT_NEAR(regularized_gamma_q(0.5, x), std::erfc(std::sqrt(x)), 1e-12) << x;
}

TEST(IncompleteGamma, ComplementAndBounds) {
  for (double a : {0.5, 1.0, 1.5, 2.5, 3.0}) {
    double last = 1.0;
    for (double x = 0.0; x < 40.0; x += 0.25) {
      const double q = regularized_gamma_q(a, x);
      EXPECT_GE(q, 0.0);
      EXPECT_LE(q, 1.0);
      EXPECT_LE(q, last + 1e-15);
      EXPECT_NEAR(q + regularized_gamma_p(a, x), 1.0, 1e-12);
      last = q;
    }
  }
  EXPECT_EQ(regularized_gamma_q(2.0, 0.0), 1.0);
  EXPECT_THROW(regularized_gamma_q(0.0, 1.0), InputError);
  EXPECT_THROW(regularized_gamma_q(1.0, -1.0), InputError);
}

TEST(PValue, MatchesQuadratureOracleOverGrid) {
  double worst = 0.0;
  for (int df = 1; df <= 6; ++df) {
    for (double s = 0.1; s <= 30.0 + 1e-9; s += 0.35) {
      const double oracle = testing::chi_square_tail_by_quadrature(s, df);
      const double got = p_value(s, df);
      worst = std::max(worst, std::abs(got - oracle));
      EXPECT_NEAR(got, oracle, 1e-6) << "s=" << s << " df=" << df;
    }
  }
  RecordProperty("max_abs_error", std::to_string(worst));
}

TEST(PValue, CriticalValuesAndReferencePoint) {
  EXPECT_NEAR(p_value(3.8415, 1), 0.05, 1e-3);
  EXPECT_NEAR(p_value(5.9915, 2), 0.05, 1e-4);
  EXPECT_NEAR(p_value(15.2381, 1), 9.5e-5, 2e-5);
  EXPECT_EQ(p_value(0.0, 2), 1.0);
  EXPECT_THROW(p_value(-1.0, 1), InputError);
  EXPECT_THROW(p_value(1.0, 0), InputError);
}

TEST(PValue, MonotoneDecreasingInStatistic) {
  for (int df = 1; df <= 6; ++df) {
    double last = 1.0;
    for (double s = 0.0; s < 50.0; s += 0.1) {
      const double p = p_value(s, df);
      EXPECT_LE(p, last + 1e-15);
      last = p;
    }
  }
}

TEST(Similar, ReferenceDecisions) {
  auto v = similar(gc({20, 20, 0}), gc({4, 36, 0}));
  EXPECT_FALSE(v.similar);
  EXPECT_NEAR(v.p_value, 9.4772e-5, 1e-8);
  EXPECT_EQ(v.alpha, 0.05);
  EXPECT_TRUE(similar(gc({20, 20, 0}), gc({20, 20, 0})).similar);
  EXPECT_TRUE(similar(gc({40, 0, 0}), gc({40, 0, 0})).similar);
  // (40,0) vs (36,4) sits just under alpha.
  auto edge = similar(gc({40, 0, 0}), gc({36, 4, 0}));
  EXPECT_NEAR(edge.p_value, 0.04017387, 1e-7);
  EXPECT_FALSE(edge.similar);
  EXPECT_TRUE(similar(gc({40, 0, 0}), gc({36, 4, 0}), 0.01).similar);
}

TEST(Similar, SingleRetainedCategoryIsSimilar) {
  auto v = similar(gc({0, 40, 0}), gc({0, 12, 0}));
  EXPECT_TRUE(v.similar);
  EXPECT_EQ(v.degrees_of_freedom, 0);
  EXPECT_EQ(v.p_value, 1.0);
}

TEST(Similar, AlphaMustBeInOpenUnitInterval) {
  EXPECT_THROW(similar(gc({1, 1, 0}), gc({1, 1, 0}), 0.0), InputError);
  EXPECT_THROW(similar(gc({1, 1, 0}), gc({1, 1, 0}), 1.0), InputError);
}

TEST(Similar, VerdictJsonRoundTrip) {
  auto v = similar(gc({20, 20, 0}), gc({4, 36, 0}));
  auto back = verdict_from_json(json::parse(json(v).dump()));
  EXPECT_EQ(back.similar, v.similar);
  EXPECT_EQ(back.statistic, v.statistic);
  EXPECT_EQ(back.p_value, v.p_value);
  EXPECT_EQ(back.degrees_of_freedom, v.degrees_of_freedom);
  EXPECT_EQ(back.dropped_categories, v.dropped_categories);
}

}  // namespace
}  // namespace biasrate
