#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "idil/error.hpp"
#include "idil/mahalanobis.hpp"

namespace idil::mahalanobis {
namespace {

using ad::Tensor;

double gaussian(Rng& rng) {
  // Box-Muller; u1 in (0, 1].
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

struct Sample {
  Tensor features;
  std::vector<std::size_t> labels;
};

Sample clustered(Rng& rng, std::size_t n, std::size_t d, std::size_t classes, double spread = 1.0) {
  std::vector<double> x(n * d);
  std::vector<std::size_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % classes;
    for (std::size_t j = 0; j < d; ++j) x[i * d + j] = 3.0 * static_cast<double>(y[i] == j) + spread * gaussian(rng);
  }
  return {Tensor::matrix(n, d, std::move(x)), std::move(y)};
}

TEST(Fit, IdenticalFeaturesGiveShrinkageOnlyCovariance) {
  const Tensor x = Tensor::matrix(4, 2, {1.5, -2, 1.5, -2, 1.5, -2, 1.5, -2});
  const std::vector<std::size_t> y(4, 0);
  const auto s = fit(x, y, 1, 1e-3);
  EXPECT_EQ(s.class_means[0], (std::vector<double>{1.5, -2.0}));
  EXPECT_NEAR(s.precision[0], 1e3, 1e-9);
  EXPECT_NEAR(s.precision[3], 1e3, 1e-9);
  EXPECT_EQ(s.precision[1], 0.0);
  // No explicit shrinkage and zero covariance falls back to 1e-6.
  EXPECT_EQ(fit(x, y, 1).shrinkage_eps, 1e-6);
}

TEST(Fit, RecoversClassMeans) {
  Rng rng(1);
  std::vector<double> x;
  std::vector<std::size_t> y;
  for (int i = 0; i < 50; ++i) {
    const double a = gaussian(rng), b = gaussian(rng);
    // Symmetric noise around (0,0) and (1,1).
    for (double sgn : {1.0, -1.0}) {
      x.insert(x.end(), {sgn * a, sgn * b});
      y.push_back(0);
      x.insert(x.end(), {1.0 + sgn * b, 1.0 + sgn * a});
      y.push_back(1);
    }
  }
  const auto s = fit(Tensor::matrix(y.size(), 2, x), y, 2);
  EXPECT_NEAR(s.class_means[0][0], 0.0, 1e-14);
  EXPECT_NEAR(s.class_means[0][1], 0.0, 1e-14);
  EXPECT_NEAR(s.class_means[1][0], 1.0, 1e-14);
  EXPECT_NEAR(s.class_means[1][1], 1.0, 1e-14);
}

TEST(Fit, PrecisionInvertsSampleCovariance) {
  Rng rng(20240);
  const std::size_t n = 10000;
  std::vector<double> x(2 * n);
  for (auto& v : x) v = gaussian(rng);
  const std::vector<std::size_t> y(n, 0);
  const auto s = fit(Tensor::matrix(n, 2, x), y, 1, 1e-6);

  // Reference: 2x2 sample covariance (scatter / n) plus eps, inverted by adjugate.
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[2 * i];
    my += x[2 * i + 1];
  }
  mx /= n;
  my /= n;
  long double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double a = x[2 * i] - mx, b = x[2 * i + 1] - my;
    sxx += a * a;
    syy += b * b;
    sxy += a * b;
  }
  sxx = sxx / n + 1e-6L;
  syy = syy / n + 1e-6L;
  sxy /= n;
  const long double det = sxx * syy - sxy * sxy;
  EXPECT_NEAR(s.precision[0], static_cast<double>(syy / det), 1e-10);
  EXPECT_NEAR(s.precision[3], static_cast<double>(sxx / det), 1e-10);
  EXPECT_NEAR(s.precision[1], static_cast<double>(-sxy / det), 1e-10);

  // Standard data: the estimate is close to the identity. Sampling noise per
  // entry is about 1/sqrt(n) = 0.01, so allow five of those.
  EXPECT_NEAR(s.precision[0], 1.0, 5e-2);
  EXPECT_NEAR(s.precision[3], 1.0, 5e-2);
  EXPECT_NEAR(s.precision[1], 0.0, 5e-2);
}

TEST(Fit, PrecisionSymmetricPositiveDefinite) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    // More dimensions than samples per class: only the shrinkage keeps it invertible.
    const auto sample = clustered(rng, 12, 20, 3);
    const auto s = fit(sample.features, sample.labels, 3);
    const std::size_t d = 20;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) EXPECT_EQ(s.precision[i * d + j], s.precision[j * d + i]);
    for (int k = 0; k < 20; ++k) {
      const auto v = idil::testing::uniform_values(rng, d, -1, 1);
      long double q = 0;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) q += v[i] * s.precision[i * d + j] * v[j];
      EXPECT_GT(q, 0.0L);
    }
  }
}

TEST(Fit, Errors) {
  const Tensor x = Tensor::matrix(3, 1, {1, 2, 3});
  const std::vector<std::size_t> y = {0, 0, 1};
  try {
    fit(x, y, 2);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("label 1"), std::string::npos) << e.what();
  }
  const std::vector<std::size_t> y0 = {0, 0, 0};
  EXPECT_THROW(fit(Tensor::matrix(3, 1, {1, NAN, 3}), y0, 1), NumericError);
  EXPECT_THROW(fit(x, y0, 1, -1.0), ConfigError);
  const std::vector<std::size_t> short_labels = {0, 0};
  EXPECT_THROW(fit(x, short_labels, 1), ShapeError);
}

TEST(Score, Examples) {
  GaussianStats s;
  s.feature_dim = 2;
  s.precision = {1, 0, 0, 1};
  s.class_means = {{0, 0}};
  const std::vector<double> x = {3, 4};
  EXPECT_EQ(s.score(x), 25.0);
  EXPECT_EQ(s.score(std::vector<double>{0, 0}), 0.0);

  s.class_means = {{0, 0}, {10, -10}};
  EXPECT_EQ(s.score(std::vector<double>{10, -10}), 0.0);
  EXPECT_THROW(s.score(std::vector<double>{1, 2, 3}), ShapeError);
  EXPECT_EQ(s.confidences(Tensor::matrix(1, 2, {3, 4})), (std::vector<double>{-25.0}));
}

TEST(Score, IdentityPrecisionIsNearestSquaredDistance) {
  Rng rng(3);
  GaussianStats s;
  s.feature_dim = 5;
  s.precision.assign(25, 0.0);
  for (std::size_t i = 0; i < 5; ++i) s.precision[i * 5 + i] = 1.0;
  for (int c = 0; c < 4; ++c) s.class_means.push_back(idil::testing::uniform_values(rng, 5));
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = idil::testing::uniform_values(rng, 5, -3, 3);
    double best = INFINITY;
    for (const auto& mu : s.class_means) {
      double d2 = 0;
      for (std::size_t j = 0; j < 5; ++j) d2 += (x[j] - mu[j]) * (x[j] - mu[j]);
      best = std::min(best, d2);
    }
    EXPECT_NEAR(s.score(x), best, 1e-12);
  }
}

TEST(Score, NonNegativeAndTranslationInvariant) {
  Rng rng(4);
  const auto sample = clustered(rng, 60, 4, 3);
  const auto s = fit(sample.features, sample.labels, 3);
  auto shifted = s;
  const auto t = idil::testing::uniform_values(rng, 4, -5, 5);
  for (auto& mu : shifted.class_means)
    for (std::size_t j = 0; j < 4; ++j) mu[j] += t[j];
  for (int trial = 0; trial < 100; ++trial) {
    auto x = idil::testing::uniform_values(rng, 4, -4, 4);
    const double a = s.score(x);
    EXPECT_GE(a, 0.0);
    for (std::size_t j = 0; j < 4; ++j) x[j] += t[j];
    EXPECT_NEAR(shifted.score(x), a, 1e-9 * std::max(1.0, a));
  }
  for (const auto& mu : s.class_means) EXPECT_NEAR(s.score(mu), 0.0, 1e-12);
}

TEST(Stats, JsonRoundTripIsExact) {
  Rng rng(5);
  const auto sample = clustered(rng, 30, 3, 2);
  const auto s = fit(sample.features, sample.labels, 2);
  idil::testing::TempDir dir;
  save(s, dir / "m.json");
  const auto back = load(dir / "m.json");
  EXPECT_EQ(back.precision, s.precision);
  EXPECT_EQ(back.class_means, s.class_means);
  EXPECT_EQ(back.shrinkage_eps, s.shrinkage_eps);
  EXPECT_EQ(back.feature_dim, s.feature_dim);
}

}  // namespace
}  // namespace idil::mahalanobis
