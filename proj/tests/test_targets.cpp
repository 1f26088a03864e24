// Copyright 2026 The ataflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <vector>

#include "ataflow/targets.hpp"

namespace dist = ataflow::dist;
namespace targets = ataflow::targets;
using targets::SupportKind;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-12) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20,
                                                                       tol);
}

double eval(const targets::TargetModel& t, std::vector<double> x) {
  return t.log_density(x);
}

// Least-squares slope of log f against log x over a geometric grid.
double log_log_slope(const std::function<double(double)>& log_f, double lo,
                     double hi) {
  std::vector<double> lx, ly;
  for (int i = 0; i <= 40; ++i) {
    const double x = lo * std::pow(hi / lo, i / 40.0);
    lx.push_back(std::log(x));
    ly.push_back(log_f(x));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= lx.size();
  my /= ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST(Targets, CauchyValues) {
  const auto t = targets::cauchy_target();
  EXPECT_EQ(eval(t, {0.0}), 0.0);
  EXPECT_NEAR(eval(t, {1.0}), -std::log(2.0), 1e-15);
  const double z = integrate([&](double x) { return std::exp(eval(t, {x})); },
                             -kInf, kInf);
  EXPECT_NEAR(z, M_PI, 1e-6);
  EXPECT_NEAR(std::log(z), *t.reference.log_normalizer, 1e-6);
}

TEST(Targets, AnisoProductValues) {
  const auto t = targets::aniso_product_target();
  EXPECT_NEAR(eval(t, {0.0, 0.0}), -1.1447299 - 0.9189385, 1e-7);
  for (double a : {0.3, 2.0, 17.0}) {
    for (double b : {0.1, 1.5}) {
      EXPECT_EQ(eval(t, {a, b}), eval(t, {-a, b}));
      EXPECT_EQ(eval(t, {a, b}), eval(t, {a, -b}));
    }
  }
  // Normalized: 2-D quadrature of the product.
  const double z = integrate(
      [&](double x) {
        return integrate([&](double y) { return std::exp(eval(t, {x, y})); },
                         -kInf, kInf, 1e-10);
      },
      -kInf, kInf, 1e-9);
  EXPECT_NEAR(z, 1.0, 1e-6);
}

TEST(Targets, BlrNoDataIsPrior) {
  ataflow::Matrix x(0, 1);
  const std::vector<double> y;
  const auto blr = targets::blr_conjugate(x, y, 2.5, 1.5);
  EXPECT_EQ(blr.posterior.a_n, 2.5);
  EXPECT_EQ(blr.posterior.b_n, 1.5);
  EXPECT_EQ(blr.posterior.mu_n[0], 0.0);
}

TEST(Targets, BlrShapeUpdate) {
  const auto blr = targets::blr_synthetic(100, 1.0, 0.5, 3.0, 2.0, 4);
  EXPECT_EQ(blr.posterior.a_n, 3.0 + 50.0);
  EXPECT_GT(blr.posterior.b_n, 0.0);
  EXPECT_EQ(blr.target.support.back(), SupportKind::kPositive);
}

TEST(Targets, BlrRejectsBadHyperparameters) {
  ataflow::Matrix x(1, 1, 1.0);
  const std::vector<double> y = {1.0};
  EXPECT_THROW(targets::blr_conjugate(x, y, 0.0, 1.0), ataflow::DomainError);
  EXPECT_THROW(targets::blr_conjugate(x, y, 1.0, -1.0), ataflow::DomainError);
}

TEST(Targets, BlrLogMarginalMatchesQuadrature) {
  const auto blr = targets::blr_synthetic(5, 0.8, 0.7, 2.0, 1.0, 9);
  const auto& t = blr.target;
  const double z = integrate(
      [&](double s) {
        return integrate([&](double b) { return std::exp(eval(t, {b, s})); },
                         -kInf, kInf, 1e-11);
      },
      0.0, kInf, 1e-10);
  EXPECT_NEAR(blr.posterior.log_marginal, std::log(z), 1e-4);
  EXPECT_EQ(*t.reference.log_normalizer, blr.posterior.log_marginal);
}

TEST(Targets, BlrJointMatchesDirectFormula) {
  ataflow::Matrix x(3, 1);
  x(0, 0) = 0.5;
  x(1, 0) = -1.0;
  x(2, 0) = 2.0;
  const std::vector<double> y = {0.7, -0.2, 1.9};
  const auto blr = targets::blr_conjugate(x, y, 2.0, 3.0);
  const double beta = 0.6, s = 0.8;
  double direct = 2.0 * std::log(3.0) - std::lgamma(2.0) - 3.0 * std::log(s) - 3.0 / s;
  direct += -0.5 * std::log(2 * M_PI * s) - 0.5 * beta * beta / s;
  for (int i = 0; i < 3; ++i) {
    const double r = y[i] - beta * x(i, 0);
    direct += -0.5 * std::log(2 * M_PI * s) - 0.5 * r * r / s;
  }
  EXPECT_NEAR(eval(blr.target, {beta, s}), direct, 1e-12);
}

TEST(Targets, EightSchools) {
  const auto t = targets::eight_schools(targets::rubin_eight_schools());
  EXPECT_EQ(t.dim, 10u);
  EXPECT_EQ(t.support[0], SupportKind::kPositive);
  std::vector<double> x(10, 0.0);
  x[0] = 1.0;
  EXPECT_TRUE(std::isfinite(t.log_density(x)));
  double prev = t.log_density(x);
  for (double mu = 0.5; mu < 20.0; mu += 0.5) {
    x[1] = mu;
    const double v = t.log_density(x);
    EXPECT_LT(v, prev);
    prev = v;
  }
  x[1] = 0.0;
  x[0] = 0.0;
  EXPECT_THROW(t.log_density(x), ataflow::DomainError);
  x[0] = -2.0;
  EXPECT_THROW(t.log_density(x), ataflow::DomainError);
}

TEST(Targets, EightSchoolsTauTail) {
  // The HalfCauchy(5) factor decays like tau^-2.
  const double slope = log_log_slope(
      [](double tau) { return targets::half_cauchy_log_prob(tau, 5.0); }, 1e4, 1e6);
  EXPECT_NEAR(slope, -2.0, 1e-3);
  // With theta = mu = 0 and y = theta the eight theta factors add tau^-8.
  targets::EightSchoolsData zero{std::vector<double>(8, 0.0),
                                 targets::rubin_eight_schools().sigma};
  const auto t = targets::eight_schools(zero);
  const double full = log_log_slope(
      [&](double tau) {
        std::vector<double> x(10, 0.0);
        x[0] = tau;
        return t.log_density(x);
      },
      1e4, 1e6);
  EXPECT_NEAR(full, -10.0, 1e-3);
}

TEST(Targets, RadialAlpha) {
  EXPECT_DOUBLE_EQ(targets::radial_alpha(0.0), 3.0);
  EXPECT_NEAR(targets::radial_alpha(M_PI / 2), 1.0, 1e-15);
  EXPECT_NEAR(targets::radial_alpha(M_PI / 4), 2.0, 1e-15);
  double best = 0.0;
  for (int i = 0; i < 10000; ++i) {
    best = std::max(best, targets::radial_alpha(2 * M_PI * i / 10000.0));
  }
  EXPECT_DOUBLE_EQ(best, 3.0);
  EXPECT_THROW(targets::radial_aniso_log_density(1.0, 0.3), ataflow::DomainError);
}

TEST(Targets, RadialDensityIsNormalized) {
  const double z = integrate(
      [](double th) {
        return integrate(
            [th](double r) {
              return std::exp(targets::radial_aniso_log_density(r, th));
            },
            1.0, kInf, 1e-10);
      },
      0.0, 2 * M_PI, 1e-9);
  EXPECT_NEAR(z, 1.0, 1e-6);
}

TEST(Targets, SpiralTransform) {
  ataflow::Matrix m(3, 2);
  m(1, 0) = 3.0;
  m(1, 1) = -4.0;
  m(2, 0) = -0.2;
  m(2, 1) = 0.1;
  const auto out = targets::spiral_transform(m);
  EXPECT_EQ(out(0, 0), 0.0);
  EXPECT_EQ(out(0, 1), 0.0);
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_NEAR(std::hypot(out(i, 0), out(i, 1)), std::hypot(m(i, 0), m(i, 1)),
                1e-14);
  }
}

TEST(Targets, NormalNormalPriorWhenNoData) {
  const std::vector<double> y;
  const auto t = targets::normal_normal(y, 1.0, 0.3, 2.0);
  EXPECT_EQ(t.reference.mean[0], 0.3);
  EXPECT_NEAR(t.reference.variance[0], 4.0, 1e-15);
  EXPECT_NEAR(*t.reference.log_normalizer, 0.0, 1e-14);
}

TEST(Targets, NormalNormalFlatPriorLimit) {
  dist::Rng rng(3);
  std::vector<double> y(10);
  double mean = 0.0;
  for (double& v : y) {
    v = 1.0 + rng.normal();
    mean += v / 10.0;
  }
  const auto t = targets::normal_normal(y, 1.0, 0.0, 1e6);
  EXPECT_LT(std::abs(t.reference.mean[0] - mean), 1e-4);
}

TEST(Targets, NormalNormalMomentsMatchQuadrature) {
  const std::vector<double> y = {0.3, 1.2, -0.4, 2.2, 0.9};
  const auto t = targets::normal_normal(y, 0.8, 0.5, 1.5);
  const double peak = eval(t, {t.reference.mean[0]});
  auto w = [&](double m) { return std::exp(eval(t, {m}) - peak); };
  const double z = integrate(w, -kInf, kInf, 1e-14);
  const double m1 = integrate([&](double m) { return m * w(m); }, -kInf, kInf, 1e-14) / z;
  const double m2 =
      integrate([&](double m) { return (m - m1) * (m - m1) * w(m); }, -kInf, kInf, 1e-14) / z;
  const double var = 1.0 / (1.0 / (1.5 * 1.5) + 5.0 / (0.8 * 0.8));
  EXPECT_NEAR(t.reference.variance[0], var, 1e-15);
  EXPECT_NEAR(m2, var, 1e-8);
  EXPECT_NEAR(m1, t.reference.mean[0], 1e-8);
  EXPECT_NEAR(std::log(z) + peak, *t.reference.log_normalizer, 1e-8);
}

TEST(Targets, SyntheticNonconjugate) {
  dist::Rng rng(5);
  const auto t = targets::synthetic_blr_nonconjugate(500, 8, rng);
  EXPECT_EQ(t.dim, 10u);
  EXPECT_EQ(t.support[1], SupportKind::kPositive);
  std::vector<double> x(10, 0.0);
  x[0] = 8.0;
  x[1] = 10.0;
  EXPECT_TRUE(std::isfinite(t.log_density(x)));
  const double slope = log_log_slope(
      [](double s) { return targets::half_studentt_log_prob(s, 3.0, 10.0); }, 1e5,
      1e7);
  EXPECT_NEAR(slope, -4.0, 1e-3);
}

TEST(Targets, FiniteOnRandomInteriorProbes) {
  dist::Rng rng(21);
  for (const auto& name : targets::target_names()) {
    const auto t = targets::target_by_name(name);
    std::vector<double> x(t.dim);
    for (int probe = 0; probe < 10000; ++probe) {
      for (std::size_t i = 0; i < t.dim; ++i) {
        const double z = 3.0 * rng.normal();
        x[i] = t.support[i] == SupportKind::kPositive ? std::exp(z) : z;
      }
      ASSERT_TRUE(std::isfinite(t.log_density(x))) << name;
    }
  }
}

TEST(Targets, TapedDensityMatchesDouble) {
  dist::Rng rng(8);
  for (const auto& name : targets::target_names()) {
    const auto t = targets::target_by_name(name);
    std::vector<double> x(t.dim);
    for (std::size_t i = 0; i < t.dim; ++i) {
      x[i] = t.support[i] == SupportKind::kPositive ? 1.0 + rng.uniform() : rng.normal();
    }
    ataflow::ad::Tape tape;
    const auto v = ataflow::ad::variables(tape, x);
    EXPECT_NEAR(t.log_density_var(v).value(), t.log_density(x),
                1e-12 * std::max(1.0, std::abs(t.log_density(x))))
        << name;
  }
}

TEST(Targets, DataParsing) {
  const auto d = targets::parse_eight_schools_json(R"({"y": [1, 2], "sigma": [3, 4]})");
  EXPECT_EQ(d.y, (std::vector<double>{1, 2}));
  EXPECT_EQ(d.sigma, (std::vector<double>{3, 4}));
  EXPECT_THROW(targets::parse_eight_schools_json(R"({"y": [1]})"), ataflow::UsageError);
  EXPECT_THROW(targets::parse_eight_schools_json("not json"), ataflow::UsageError);
  ataflow::Matrix m(2, 3);
  m(0, 2) = 5.0;
  const auto r = targets::regression_from_matrix(m);
  EXPECT_EQ(r.x.cols(), 2u);
  EXPECT_EQ(r.y[0], 5.0);
  EXPECT_THROW(targets::target_by_name("nope"), ataflow::UsageError);
}
