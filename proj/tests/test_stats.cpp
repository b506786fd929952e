#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hmgw/rng.hpp"
#include "hmgw/stats.hpp"

using namespace hmgw;

TEST(Stats, SummarizeMeanAndVariance) {
  const std::vector<double> x{1, 2, 3, 4};
  const auto s = stats::summarize(x);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.variance, 5.0 / 3.0);
  EXPECT_NEAR(s.std_error(), std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
}

TEST(Stats, QuantileInterpolates) {
  const std::vector<double> x{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(stats::quantile(x, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(stats::quantile(x, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(stats::median(x), 2.5);
}

TEST(Stats, KolmogorovDistributionKnownValues) {
  // Classical critical values of the Kolmogorov distribution.
  EXPECT_NEAR(stats::kolmogorov_sf(1.3581), 0.05, 2e-4);
  EXPECT_NEAR(stats::kolmogorov_sf(1.6276), 0.01, 1e-4);
  EXPECT_NEAR(stats::kolmogorov_sf(0.8276), 0.5, 1e-3);
  EXPECT_DOUBLE_EQ(stats::kolmogorov_sf(0.0), 1.0);
}

TEST(Stats, OneSampleKsSmallForCorrectLaw) {
  auto g = rng::substream(5, 1);
  std::vector<double> x(20000);
  for (auto& v : x) v = rng::exponential(g);
  const double d = stats::ks_statistic(x, [](double t) { return 1.0 - std::exp(-t); });
  EXPECT_LT(d, 0.015);
  const double wrong = stats::ks_statistic(x, [](double t) { return 1.0 - std::exp(-2.0 * t); });
  EXPECT_GT(wrong, 0.2);
}

TEST(Stats, TwoSampleKsHandlesTies) {
  const std::vector<double> a{1, 1, 2, 2};
  const std::vector<double> b{1, 1, 2, 2};
  EXPECT_DOUBLE_EQ(stats::ks_two_sample(a, b), 0.0);
  const std::vector<double> c{3, 3, 3, 3};
  EXPECT_DOUBLE_EQ(stats::ks_two_sample(a, c), 1.0);
  EXPECT_GT(stats::ks_two_sample_pvalue(0.0, 100, 100), 0.99);
  EXPECT_LT(stats::ks_two_sample_pvalue(0.5, 100, 100), 1e-4);
}

TEST(Stats, WassersteinOfShiftIsTheShift) {
  auto g = rng::substream(5, 2);
  std::vector<double> a(5000), b(5000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng::uniform01(g);
    b[i] = a[i] + 0.3;
  }
  EXPECT_NEAR(stats::wasserstein1(a, b), 0.3, 1e-12);
  EXPECT_NEAR(stats::wasserstein1(a, a), 0.0, 1e-15);
}

TEST(Stats, TotalVariation) {
  const std::vector<double> p{0.5, 0.5, 0.0}, q{0.25, 0.25, 0.5};
  EXPECT_DOUBLE_EQ(stats::total_variation(p, q), 0.5);
}
