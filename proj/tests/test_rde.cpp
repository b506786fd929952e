#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "hmgw/rde.hpp"
#include "hmgw/stats.hpp"

using namespace hmgw;

namespace {

PopulationSettings settings(std::uint64_t seed, unsigned threads = 1) {
  PopulationSettings s;
  s.master_seed = seed;
  s.threads = threads;
  return s;
}

// Pools near the fixed point, shared by the statistical tests below.
const StationaryPools& stationary() {
  static const StationaryPools pools = run_population(1'000'000, 200, PoolSeed::one, settings(2024, 2));
  return pools;
}

}  // namespace

TEST(Pool, InitAndValidation) {
  EXPECT_THROW(init_pool(999, PoolSeed::one), std::invalid_argument);
  const auto one = init_pool(2000, PoolSeed::one);
  EXPECT_EQ(one.size(), 2000u);
  EXPECT_TRUE(one.all_valid());
  const auto inf = init_pool(2000, PoolSeed::infinity);
  EXPECT_EQ(inf.values.front(), kInfinityProxy);
  const auto uni = init_pool(50'000, PoolSeed::uniform, settings(3));
  for (double v : uni.values) {
    ASSERT_GE(v, 1.0);
    ASSERT_LT(v, 2.0);
  }
  EXPECT_NEAR(stats::summarize(uni.values).mean, 1.5, 0.005);
  EXPECT_EQ(pool_seed_from_tag("infinity"), PoolSeed::infinity);
  EXPECT_THROW(pool_seed_from_tag("zero"), std::invalid_argument);
}

TEST(Pool, OneStepFromPointMassAtOne) {
  // C = 1/(U + (1-U)/2) has mean 2 log 2.
  const auto p = step_gamma(init_pool(1'000'000, PoolSeed::one), settings(5));
  EXPECT_EQ(p.generation, 1u);
  EXPECT_TRUE(p.all_valid());
  EXPECT_NEAR(stats::summarize(p.values).mean, 2.0 * std::log(2.0), 0.003);
}

TEST(Pool, OneStepFromInfinity) {
  // Starting from infinity one step gives 1/U, so 1/C is uniform.
  const auto p = step_gamma(init_pool(1'000'000, PoolSeed::infinity), settings(6));
  std::vector<double> inv;
  for (double v : p.values) {
    ASSERT_GE(v, 1.0);
    inv.push_back(1.0 / v);
  }
  EXPECT_NEAR(stats::summarize(inv).mean, 0.5, 0.003);
  EXPECT_LT(stats::ks_statistic(inv, [](double x) { return x; }), 0.003);
}

TEST(Pool, StepsDoNotDependOnThreadCount) {
  const auto a = run_population(40'000, 5, PoolSeed::uniform, settings(7, 1));
  const auto b = run_population(40'000, 5, PoolSeed::uniform, settings(7, 4));
  EXPECT_EQ(a.gamma.values, b.gamma.values);
  EXPECT_EQ(a.hat.values, b.hat.values);
  const auto c = run_population(40'000, 5, PoolSeed::uniform, settings(7, 1), 1);
  EXPECT_NE(a.gamma.values, c.gamma.values);
}

TEST(Pool, AdvanceContinuesRun) {
  auto a = run_population(5000, 3, PoolSeed::one, settings(8));
  advance_population(a, 2, settings(8));
  const auto b = run_population(5000, 5, PoolSeed::one, settings(8));
  EXPECT_EQ(a.gamma.values, b.gamma.values);
  EXPECT_EQ(a.hat.values, b.hat.values);
  EXPECT_EQ(a.gamma.generation, 5u);
}

TEST(Pool, CsvAndBinaryRoundTrip) {
  const auto p = init_pool(3000, PoolSeed::uniform, settings(9));
  std::stringstream bin;
  write_pool_binary(bin, p);
  EXPECT_EQ(read_pool_binary(bin).values, p.values);
  std::stringstream csv;
  write_pool_csv(csv, p);
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "value");
  for (std::size_t i = 0; i < 10; ++i) {
    std::getline(csv, line);
    EXPECT_EQ(std::stod(line), p.values[i]);
  }
  std::stringstream broken("abc");
  EXPECT_THROW(read_pool_binary(broken), std::runtime_error);
}

TEST(Stationary, FixedPointIsStable) {
  const auto& s = stationary();
  EXPECT_TRUE(s.gamma.all_valid());
  EXPECT_TRUE(s.hat.all_valid());
  const auto next = step_gamma(s.gamma, settings(2024, 2));
  EXPECT_LT(std::abs(stats::summarize(next.values).mean - stats::summarize(s.gamma.values).mean), 0.003);
}

TEST(Stationary, SeedDoesNotMatter) {
  const auto a = run_population(200'000, 200, PoolSeed::one, settings(11));
  const auto b = run_population(200'000, 200, PoolSeed::infinity, settings(11), 1);
  EXPECT_NEAR(stats::summarize(a.gamma.values).mean, stats::summarize(b.gamma.values).mean, 0.005);
  EXPECT_NEAR(stats::summarize(a.hat.values).mean, stats::summarize(b.hat.values).mean, 0.02);
}

TEST(Stationary, LambdaEstimators) {
  const auto& s = stationary();
  const auto moment = estimate_lambda_moment(s.hat);
  const auto log = estimate_lambda_log(s.hat, s.gamma, 1);
  EXPECT_GE(moment.value, 1.15);
  EXPECT_LE(moment.value, 1.27);
  EXPECT_GE(log.value, 1.15);
  EXPECT_LE(log.value, 1.27);
  EXPECT_LT(std::abs(moment.value - log.value), 0.02);
  EXPECT_GT(moment.value - 2.326 * moment.std_error, 1.0);
  EXPECT_NEAR(moment.value + 1.0, 2.21, 0.05);
}

TEST(Stationary, Identities) {
  const auto& s = stationary();
  const auto x = check_identity_g(s.hat, s.gamma, [](double t) { return t; }, [](double) { return 1.0; }, 2);
  const auto lg = check_identity_g(s.hat, s.gamma, [](double t) { return std::log(t); },
                                   [](double t) { return 1.0 / t; }, 3);
  const auto sq = check_identity_g(s.hat, s.gamma, [](double t) { return t * t; },
                                   [](double t) { return 2.0 * t; }, 4);
  EXPECT_LT(std::abs(x.value), 3.0 * x.std_error);
  EXPECT_LT(std::abs(lg.value), 3.0 * lg.std_error);
  EXPECT_LT(std::abs(sq.value), 3.0 * sq.std_error);
  // constants cancel exactly
  const auto c = check_identity_g(s.hat, s.gamma, [](double) { return 5.0; }, [](double) { return 0.0; }, 5);
  EXPECT_EQ(c.value, 0.0);
  EXPECT_THROW(check_identity_g(s.hat, s.gamma, [](double t) { return std::exp(t * 1e3); },
                                [](double t) { return 1e3 * std::exp(t * 1e3); }, 6),
               std::domain_error);
}

TEST(Stationary, LaplaceEquation) {
  const auto& s = stationary();
  const std::vector<double> grid{1e-9, 0.5, 1.0, 2.0, 4.0};
  const auto res = laplace_ode_check(s.hat, s.gamma, grid, 7);
  EXPECT_NEAR(res[0].residual, 0.0, 1e-7);
  for (std::size_t i = 1; i < res.size(); ++i) {
    EXPECT_LT(std::abs(res[i].residual), 5.0 * res[i].std_error) << res[i].ell;
    EXPECT_LE(res[i].phi_hat, std::exp(-res[i].ell / 2.0));
    EXPECT_LE(res[i].phi, std::exp(-res[i].ell / 2.0));
  }
}

TEST(Stationary, DensityFits) {
  const auto& s = stationary();
  const auto f = fit_densities(s.gamma, s.hat);
  EXPECT_GE(f.A0, 0.95);
  EXPECT_LE(f.A0, 1.00);
  EXPECT_GE(f.K0, 1.45);
  EXPECT_LE(f.K0, 1.51);
  EXPECT_GE(f.argmax, 1.4);
  EXPECT_LE(f.argmax, 1.6);
  EXPECT_LT(f.first_bin_density, 0.1);
  std::vector<double> grid;
  for (double t = 1.0; t <= 2.0 + 1e-12; t += 0.05) grid.push_back(t);
  EXPECT_LT(tail_formula_gap(s.hat, f.A0, grid), 0.01);
  std::vector<double> ode_grid{2.2, 2.5, 2.8};
  for (const auto& p : density_ode_check(s.hat, s.gamma, ode_grid, 8)) EXPECT_LT(std::abs(p.residual), 0.03) << p.t;
}

TEST(DensityFit, RecoversScalesFromSyntheticSamples) {
  // f^ = 4 A (t-1)/t^3 and f = K/t^2 on [1,2]; the remaining mass sits on (2,4).
  const double A = 0.9, K = 1.4;
  auto g = rng::substream(50, 0);
  SamplePool hat, gamma;
  const std::size_t n = 2'000'000;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng::uniform01(g) < A / 2.0) {
      double t;
      do {
        t = 1.0 + rng::uniform01(g);
      } while (rng::uniform01(g) * 0.15 > (t - 1.0) / (t * t * t));
      hat.values.push_back(t);
    } else {
      hat.values.push_back(2.0 + 2.0 * rng::uniform01(g));
    }
    if (rng::uniform01(g) < K / 2.0) {
      gamma.values.push_back(1.0 / (1.0 - rng::uniform01(g) / 2.0));
    } else {
      gamma.values.push_back(2.0 + 2.0 * rng::uniform01(g));
    }
  }
  const auto f = fit_densities(gamma, hat);
  EXPECT_NEAR(f.A0, A, 4.0 * f.A0_se + 1e-3);
  EXPECT_NEAR(f.K0, K, 4.0 * f.K0_se + 1e-3);
  EXPECT_NEAR(f.argmax, 1.525, 0.051);
  std::vector<double> grid{1.0, 1.25, 1.5, 1.75, 2.0};
  EXPECT_LT(tail_formula_gap(hat, A, grid), 0.002);
  EXPECT_DOUBLE_EQ(Fhat_closed_form(1.0, A), 1.0);
  EXPECT_DOUBLE_EQ(Fhat_closed_form(2.0, A), 1.0 - A / 2.0);
}

TEST(QInfinity, RHasUnitMeanAndAssembliesAgree) {
  auto g = rng::substream(51, 0);
  const int n = 1'000'000;
  std::vector<double> r(n);
  for (auto& v : r) v = sample_R(g);
  EXPECT_NEAR(stats::summarize(r).mean, 1.0, 0.01);
  EXPECT_LT(stats::ks_statistic(r, [](double x) { return 1.0 - 1.0 / ((1.0 + x) * (1.0 + x)); }), 0.002);

  const auto& s = stationary();
  const auto q = estimate_Q_infinity(s.hat, s.gamma, 1'000'000, settings(52, 2));
  const double half_lambda = estimate_lambda_moment(s.hat).value / 2.0;
  EXPECT_NEAR(q.direct.value, half_lambda, 0.01);
  EXPECT_NEAR(q.via_v.value, half_lambda, 0.01);
  const double se = std::hypot(q.direct.std_error, q.via_v.std_error);
  EXPECT_LT(std::abs(q.direct.value - q.via_v.value), 3.0 * se);
}
