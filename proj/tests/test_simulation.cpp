#include <gtest/gtest.h>

#include "mvd/simulation.hpp"
#include "test_util.hpp"

using namespace mvd;

namespace {

std::vector<double> column0(const DataMatrix& x) {
  std::vector<double> v(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) v[static_cast<std::size_t>(i)] = x.values()(i, 0);
  return v;
}

}  // namespace

TEST(Samplers, UniformHasUnitMoments) {
  const auto v = column0(sample(DistributionSpec::uniform_unit(1), 1000000, 1));
  EXPECT_NEAR(oracle::sample_mean(v), 0.0, 0.004);
  EXPECT_NEAR(oracle::sample_variance(v), 1.0, 0.01);
  for (double x : v) ASSERT_LE(std::abs(x), std::sqrt(3.0));
}

TEST(Samplers, CenteredExponentialMoments) {
  const auto v = column0(sample(DistributionSpec::centered_exponential(1), 1000000, 2));
  const double m = oracle::sample_mean(v);
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    m2 += (x - m) * (x - m);
    m3 += (x - m) * (x - m) * (x - m);
  }
  m2 /= static_cast<double>(v.size());
  m3 /= static_cast<double>(v.size());
  EXPECT_NEAR(m, 0.0, 0.004);
  EXPECT_NEAR(m2, 1.0, 0.01);
  EXPECT_NEAR(m3 / std::pow(m2, 1.5), 2.0, 0.05);
}

TEST(Samplers, GaussianCovariance) {
  Matrix cov(2, 2);
  cov << 2.0, 0.6, 0.6, 1.0;
  Vector mean(2);
  mean << 1.0, -1.0;
  const auto x = sample(DistributionSpec::gaussian(mean, cov), 200000, 3).values();
  const Vector mu = x.colwise().mean();
  const Matrix c = (x.rowwise() - mu.transpose()).transpose() * (x.rowwise() - mu.transpose()) /
                   static_cast<double>(x.rows() - 1);
  EXPECT_NEAR(mu[0], 1.0, 0.02);
  EXPECT_NEAR(mu[1], -1.0, 0.02);
  EXPECT_NEAR(c(0, 0), 2.0, 0.03);
  EXPECT_NEAR(c(0, 1), 0.6, 0.02);
  EXPECT_NEAR(c(1, 1), 1.0, 0.02);
}

TEST(Samplers, LocalMixtureWeight) {
  // P = N(0,1), Q = point-like N(50, tiny): the share of rows near 50 is 1/sqrt(N).
  const auto q = DistributionSpec::gaussian(Vector::Constant(1, 50.0), Matrix::Constant(1, 1, 1e-6));
  const auto mix = DistributionSpec::local_mixture(DistributionSpec::std_normal(1), q, 100.0);
  EXPECT_DOUBLE_EQ(mix.alternative_weight(), 0.1);
  const auto v = column0(sample(mix, 200000, 4));
  double share = 0.0;
  for (double x : v) share += x > 25.0;
  share /= static_cast<double>(v.size());
  EXPECT_NEAR(share, 0.1, 4 * std::sqrt(0.09 / 200000.0));
}

TEST(Samplers, LocalMixtureOfIdenticalLawsIsThatLaw) {
  const auto p = DistributionSpec::std_normal(3);
  const auto mix = DistributionSpec::local_mixture(p, p, 400.0);
  const auto v = column0(sample(mix, 200000, 5));
  EXPECT_NEAR(oracle::sample_mean(v), 0.0, 0.01);
  EXPECT_NEAR(oracle::sample_variance(v), 1.0, 0.015);
  TestOptions o;
  o.seed = 6;
  o.subsample_iterations = 300;
  const auto r = run_test(sample(mix, 80, 7), sample(mix, 80, 8),
                          {KernelFamily::gaussian, sigma_for(SigmaRule::d_pow_neg_3_4, 3), 0.0},
                          StatisticKind::mvd, o);
  EXPECT_EQ(r.reject, r.statistic > r.critical_value);
}

TEST(Samplers, DeterministicAndValidated) {
  const auto d = DistributionSpec::centered_exponential(4);
  EXPECT_TRUE(sample(d, 50, 9) == sample(d, 50, 9));
  EXPECT_FALSE(sample(d, 50, 9) == sample(d, 50, 10));
  EXPECT_THROW(sample(d, 1, 1), std::invalid_argument);
  EXPECT_THROW(DistributionSpec::std_normal(0), std::invalid_argument);
  EXPECT_THROW(DistributionSpec::gaussian(Vector::Zero(2), -Matrix::Identity(2, 2)),
               std::invalid_argument);
  EXPECT_THROW(DistributionSpec::local_mixture(DistributionSpec::std_normal(2),
                                               DistributionSpec::std_normal(3), 10.0),
               std::invalid_argument);
}

TEST(SigmaRules, PresetsAndNames) {
  EXPECT_DOUBLE_EQ(sigma_for(SigmaRule::d_pow_neg_3_4, 5), std::pow(5.0, -0.75));
  EXPECT_DOUBLE_EQ(sigma_for(SigmaRule::d_pow_neg_7_8, 5), std::pow(5.0, -0.875));
  EXPECT_DOUBLE_EQ(sigma_for(SigmaRule::d_inv, 5), 0.2);
  EXPECT_DOUBLE_EQ(sigma_for(SigmaRule::d_inv_sq, 5), 0.04);
  for (SigmaRule r : {SigmaRule::d_pow_neg_3_4, SigmaRule::d_pow_neg_7_8, SigmaRule::d_inv,
                      SigmaRule::d_inv_sq})
    EXPECT_EQ(parse_sigma_rule(to_string(r)), r);
  EXPECT_EQ(parse_sigma_rule("auto"), SigmaRule::d_pow_neg_3_4);
  EXPECT_FALSE(parse_sigma_rule("0.3").has_value());
}

TEST(Moments, KnownValues) {
  const MomentEstimate e = moment_estimate({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  EXPECT_DOUBLE_EQ(e.variance, 5.0 / 3.0);
  EXPECT_EQ(e.count, 4u);
  EXPECT_GT(e.variance_se, 0.0);
}

TEST(SlopeRegression, Examples) {
  EXPECT_DOUBLE_EQ(slope_regression({{1, 2}, {2, 4}}), 2.0);
  EXPECT_DOUBLE_EQ(slope_regression({{1, 1}, {2, 3}}), 1.4);
  EXPECT_THROW(slope_regression({{0, 1}, {0, 3}}), std::invalid_argument);
  EXPECT_THROW(slope_regression({}), std::invalid_argument);
}

TEST(VarianceExperiment, ConstantDataGivesZeroVariance) {
  const Sampler constant = [](Index rows, std::uint64_t) {
    return DataMatrix(Matrix::Constant(rows, 2, 0.5));
  };
  const auto v = simulate_statistics(constant, constant, 10, 12, {KernelFamily::gaussian, 0.3, 0},
                                     {StatisticKind::mvd, StatisticKind::mmd}, 20, 1);
  for (const auto& col : v) EXPECT_EQ(moment_estimate(col).variance, 0.0);
}

TEST(VarianceExperiment, SmallTableShapeAndDeterminism) {
  VarianceTableOptions o;
  o.reps = 30;
  o.subsample_divisors = {4, 8};
  o.subsample_iterations = 50;
  o.seed = 12;
  const std::vector<Cell> cells{{SigmaRule::d_pow_neg_3_4, 2, 32, 32},
                                {SigmaRule::d_inv, 3, 40, 24}};
  const auto t = variance_table(cells, {StatisticKind::mvd, StatisticKind::mmd}, o);
  ASSERT_EQ(t.rows.size(), 4u);
  for (const auto& row : t.rows) {
    EXPECT_EQ(row.exact.count, 30u);
    EXPECT_GT(row.exact.variance, 0.0);
    ASSERT_EQ(row.subsampling.size(), 2u);
    EXPECT_EQ(row.subsampling[0].k, row.cell.n / 4);
    EXPECT_GT(row.subsampling[1].estimate.mean, 0.0);
  }
  const auto again = variance_table(cells, {StatisticKind::mvd, StatisticKind::mmd}, o);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(t.rows[i].exact.variance, again.rows[i].exact.variance);
    EXPECT_EQ(t.rows[i].subsampling[0].estimate.mean, again.rows[i].subsampling[0].estimate.mean);
  }
  EXPECT_GT(table_slope(t, StatisticKind::mvd, 8), 0.0);
  EXPECT_THROW(table_slope(t, StatisticKind::mvd, 6), std::invalid_argument);
}

TEST(PowerExperiment, RatesAndStandardErrors) {
  PowerTableOptions o;
  o.reps = 8;
  o.subsample_iterations = 50;
  o.draws = 2000;
  o.seed = 13;
  const std::vector<Cell> cells{{SigmaRule::d_pow_neg_3_4, 2, 40, 40}};
  const auto t = type1_power_table(cells, {StatisticKind::mvd, StatisticKind::mmd}, o);
  ASSERT_EQ(t.rows.size(), 6u);
  for (const auto& row : t.rows) {
    EXPECT_EQ(row.rate.reps, 8u);
    EXPECT_GE(row.rate.rate(), 0.0);
    EXPECT_LE(row.rate.rate(), 1.0);
    const double p = row.rate.rate();
    EXPECT_DOUBLE_EQ(row.rate.se(), std::sqrt(p * (1 - p) / 8.0));
  }
  EXPECT_DOUBLE_EQ(t.rows[0].tau, 0.30928);
  EXPECT_DOUBLE_EQ(t.rows[1].tau, 0.11643);
  const auto again = type1_power_table(cells, {StatisticKind::mvd, StatisticKind::mmd}, o);
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    EXPECT_EQ(t.rows[i].rate.rejections, again.rows[i].rate.rejections);
}
