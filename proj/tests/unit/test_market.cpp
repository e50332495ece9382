#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mfbounds/error.hpp"
#include "mfbounds/market.hpp"
#include "mfbounds/normal.hpp"

using namespace mfb;

namespace {

MarketSpec three_assets() { return MarketSpec::uniform({0.3, 0.4, 0.5}, 10.0, 0.5, 1.5); }

// Kolmogorov-Smirnov statistic of `xs` against `cdf`.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

std::vector<double> column(const SampleBatch& b, int j) {
  std::vector<double> out(static_cast<std::size_t>(b.rows()));
  for (Eigen::Index r = 0; r < b.rows(); ++r) out[static_cast<std::size_t>(r)] = b.values(r, j);
  return out;
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd ca = a.array() - a.mean();
  const Eigen::ArrayXd cb = b.array() - b.mean();
  return (ca * cb).sum() / std::sqrt((ca * ca).sum() * (cb * cb).sum());
}

}  // namespace

TEST(Normal, QuantileInvertsCdf) {
  for (double u : {1e-12, 1e-6, 0.01, 0.2, 0.5, 0.7, 0.975, 1 - 1e-9}) {
    EXPECT_NEAR(norm_cdf(norm_quantile(u)), u, 1e-14 + 1e-12 * u) << u;
  }
  EXPECT_NEAR(norm_quantile(0.975), 1.959963984540054, 1e-13);
  EXPECT_DOUBLE_EQ(norm_quantile(0.5), 0.0);
}

TEST(Normal, CdfKnownValues) {
  EXPECT_NEAR(norm_cdf(0.0), 0.5, 1e-16);
  EXPECT_NEAR(norm_cdf(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(norm_cdf(-3.0), 0.0013498980316300946, 1e-17);
  EXPECT_NEAR(norm_pdf(0.0), 0.3989422804014327, 1e-16);
}

TEST(Seeds, DerivationSeparatesLabelsAndIndices) {
  EXPECT_EQ(derive_seed(1, "train", 3), derive_seed(1, "train", 3));
  EXPECT_NE(derive_seed(1, "train", 3), derive_seed(1, "train", 4));
  EXPECT_NE(derive_seed(1, "train"), derive_seed(1, "fresh"));
  EXPECT_NE(derive_seed(1, "train"), derive_seed(2, "train"));
}

TEST(Market, ValidateRejectsBadShapes) {
  auto spec = three_assets();
  spec.sigma.pop_back();
  EXPECT_THROW(spec.validate(), Error);
  spec = three_assets();
  spec.sigma[1] = -0.1;
  EXPECT_THROW(spec.validate(), Error);
  spec = three_assets();
  spec.rho(0, 1) = 0.2;  // asymmetric
  EXPECT_THROW(spec.validate(), Error);
  spec = three_assets();
  spec.maturity = 0.0;
  EXPECT_THROW(spec.validate(), Error);
  EXPECT_NO_THROW(three_assets().validate());
}

TEST(Market, NonPositiveDefiniteCorrelationFailsFactorization) {
  auto spec = MarketSpec::uniform({0.3, 0.3, 0.3}, 10.0, -0.6, 1.0);
  try {
    spec.cholesky();
    FAIL() << "expected a factorization error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Factorization);
  }
}

TEST(Market, MarginalsPassKolmogorovSmirnov) {
  const auto spec = three_assets();
  const auto batch = sample_copula(spec, 20000, 7);
  // 1% critical value for n = 20000 is about 1.63 / sqrt(n).
  const double critical = 1.63 / std::sqrt(20000.0);
  for (int j = 0; j < 3; ++j) {
    const double d = ks_statistic(column(batch, j), [&](double x) { return marginal_cdf(spec, j, x); });
    EXPECT_LT(d, critical) << "asset " << j + 1;
  }
  const auto ref = sample_reference(spec, 20000, 8);
  for (int j = 0; j < 3; ++j) {
    const double d = ks_statistic(column(ref, j), [&](double x) { return marginal_cdf(spec, j, x); });
    EXPECT_LT(d, critical) << "asset " << j + 1;
  }
}

TEST(Market, MarginalMeanIsSpot) {
  const auto spec = three_assets();
  const auto batch = sample_copula(spec, 400000, 11);
  for (int j = 0; j < 3; ++j) {
    const Eigen::VectorXd c = batch.values.col(j);
    const double se = std::sqrt((c.array() - c.mean()).square().mean() / c.size());
    EXPECT_NEAR(c.mean(), 10.0, 4 * se);
  }
}

TEST(Market, CopulaCarriesLogCorrelationAndReferenceDoesNot) {
  const auto spec = three_assets();
  const auto cop = sample_copula(spec, 100000, 3);
  const auto ref = sample_reference(spec, 100000, 3);
  const Eigen::MatrixXd lc = cop.values.array().log().matrix();
  const Eigen::MatrixXd lr = ref.values.array().log().matrix();
  EXPECT_NEAR(correlation(lc.col(0), lc.col(2)), 0.5, 0.01);
  EXPECT_NEAR(correlation(lr.col(0), lr.col(2)), 0.0, 0.01);
}

TEST(Market, SamplingIsDeterministicPerSeed) {
  const auto spec = three_assets();
  EXPECT_EQ(sample_copula(spec, 100, 5).values, sample_copula(spec, 100, 5).values);
  EXPECT_NE(sample_copula(spec, 100, 5).values, sample_copula(spec, 100, 6).values);
}

TEST(Market, ZeroVolatilityCollapsesOntoForward) {
  auto spec = MarketSpec::uniform({0.0, 0.4}, 10.0, 0.0, 1.0);
  const auto batch = sample_copula(spec, 50, 1);
  for (Eigen::Index r = 0; r < batch.rows(); ++r) EXPECT_DOUBLE_EQ(batch.values(r, 0), 10.0);
}

TEST(Market, QuantileAndCdfAreInverse) {
  const auto spec = three_assets();
  for (int j = 0; j < 3; ++j) {
    for (double u : {0.01, 0.3, 0.5, 0.9, 0.999}) EXPECT_NEAR(marginal_cdf(spec, j, marginal_quantile(spec, j, u)), u, 1e-12);
  }
}

TEST(Market, DiscreteSamplersHitAtoms) {
  DiscreteMarginals m{{{1.0, 2.0}, {5.0, 6.0, 7.0}}, {{0.25, 0.75}, {0.2, 0.3, 0.5}}};
  m.validate();
  EXPECT_EQ(m.grid_size(), 6u);
  EXPECT_DOUBLE_EQ(m.mean(0), 1.75);
  const auto b = sample_discrete_product(m, 40000, 2);
  EXPECT_NEAR((b.values.col(0).array() == 2.0).cast<double>().mean(), 0.75, 0.01);
  EXPECT_NEAR((b.values.col(1).array() == 7.0).cast<double>().mean(), 0.5, 0.01);
  auto spec = MarketSpec::uniform({0.3, 0.3}, 10.0, 0.9, 1.0);
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> idx;
  const auto c = sample_discrete_copula(spec, m, 40000, 3, &idx);
  EXPECT_NEAR((c.values.col(1).array() == 5.0).cast<double>().mean(), 0.2, 0.01);
  for (Eigen::Index r = 0; r < 100; ++r) EXPECT_EQ(c.values(r, 0), m.atoms[0][static_cast<std::size_t>(idx(r, 0))]);
}

TEST(Market, DiscreteMarginalsValidate) {
  DiscreteMarginals bad{{{2.0, 1.0}}, {{0.5, 0.5}}};
  EXPECT_THROW(bad.validate(), Error);
  DiscreteMarginals mass{{{1.0, 2.0}}, {{0.5, 0.4}}};
  EXPECT_THROW(mass.validate(), Error);
}

TEST(Market, ReferenceMeasureKinds) {
  const auto spec = three_assets();
  const auto product = ReferenceMeasure::product(spec);
  const auto copula = ReferenceMeasure::copula(spec);
  EXPECT_TRUE(product.is_product());
  EXPECT_FALSE(copula.is_product());
  EXPECT_EQ(product.sample(10, 1).source, SampleSource::Reference);
  const auto scales = product.input_scales();
  ASSERT_EQ(scales.size(), 3u);
  EXPECT_DOUBLE_EQ(scales[0], 10.0);
  EXPECT_EQ(reference_kind_from_string("copula"), ReferenceKind::Copula);
  EXPECT_THROW(reference_kind_from_string("nope"), Error);
}
