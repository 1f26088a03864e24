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
#include <vector>

#include "ataflow/distributions.hpp"
#include "ataflow/errors.hpp"

namespace dist = ataflow::dist;
namespace ad = ataflow::ad;

namespace {

double integrate(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, 15, 1e-13);
}

}  // namespace

TEST(Distributions, NormalLogProb) {
  EXPECT_NEAR(dist::normal_log_prob(0.0), -0.9189385, 1e-7);
  EXPECT_NEAR(dist::normal_log_prob(1.0), -1.4189385, 1e-7);
  EXPECT_EQ(dist::normal_log_prob(-1.0), dist::normal_log_prob(1.0));
}

TEST(Distributions, StudentTLogProb) {
  EXPECT_NEAR(dist::studentt_log_prob(0.0, 1.0), -1.1447299, 1e-7);
  EXPECT_NEAR(dist::studentt_log_prob(1.0, 1.0), -1.8378771, 1e-7);
  EXPECT_NEAR(dist::studentt_log_prob(2.0, 3.0), -2.6954846, 1e-5);
  // Closed form with the library lgamma as the oracle.
  const double oracle = std::lgamma(2.0) - std::lgamma(1.5) -
                        0.5 * std::log(3.0 * M_PI) -
                        2.0 * std::log(1.0 + 4.0 / 3.0);
  EXPECT_NEAR(dist::studentt_log_prob(2.0, 3.0), oracle, 1e-12);
}

TEST(Distributions, StudentTRejectsBadDof) {
  EXPECT_THROW(dist::studentt_log_prob(0.0, 0.0), ataflow::DomainError);
  EXPECT_THROW(dist::studentt_log_prob(0.0, -1.0), ataflow::DomainError);
  EXPECT_THROW(dist::studentt_cdf(0.0, 0.0), ataflow::DomainError);
}

TEST(Distributions, StudentTCdf) {
  for (double nu : {0.3, 1.0, 7.0}) EXPECT_DOUBLE_EQ(dist::studentt_cdf(0.0, nu), 0.5);
  EXPECT_NEAR(dist::studentt_cdf(1.0, 1.0), 0.75, 1e-14);
  const double quad =
      0.5 + integrate([](double x) { return dist::studentt_pdf(x, 5.0); }, 0.0,
                      2.0);
  EXPECT_NEAR(dist::studentt_cdf(2.0, 5.0), 0.94903, 1e-4);
  EXPECT_NEAR(dist::studentt_cdf(2.0, 5.0), quad, 1e-10);
}

TEST(Distributions, CdfMonotone) {
  for (double nu : {0.5, 2.0, 40.0}) {
    double prev = 0.0;
    for (double x = -30.0; x <= 30.0; x += 0.25) {
      const double c = dist::studentt_cdf(x, nu);
      EXPECT_GE(c, prev);
      prev = c;
    }
  }
}

TEST(Distributions, DensityIntegratesToOne) {
  for (double nu : {0.5, 1.0, 2.0, 4.0, 30.0}) {
    auto pdf = [nu](double x) { return dist::studentt_pdf(x, nu); };
    double mass = 0.0;
    for (double a = -50.0; a < 50.0; a += 1.0) mass += integrate(pdf, a, a + 1.0);
    mass += 2.0 * dist::studentt_survival(50.0, nu);
    EXPECT_NEAR(mass, 1.0, 1e-6) << "nu=" << nu;
  }
}

TEST(Distributions, LargeDofApproachesNormal) {
  auto worst_gap = [](double nu, double range) {
    double worst = 0.0;
    for (double x = -range; x <= range + 1e-12; x += 0.01) {
      worst = std::max(worst, std::abs(dist::studentt_log_prob(x, nu) -
                                       dist::normal_log_prob(x)));
    }
    return worst;
  };
  // The gap is (3x^4 - 6x^2 + ...)/(12 nu) to leading order, 1.549e-3 at
  // |x| = 3 for nu = 1e4.
  EXPECT_NEAR(worst_gap(1e4, 3.0), 1.5489882e-3, 1e-8);
  EXPECT_LT(worst_gap(1e4, 2.0), 1e-3);
  EXPECT_LT(worst_gap(1e5, 3.0), 1e-3);
}

TEST(Distributions, QuantileRoundTrip) {
  for (double nu : {0.3, 1.0, 2.5, 10.0}) {
    for (double x = -10.0; x <= 10.0; x += 0.125) {
      const double u = dist::studentt_cdf(x, nu);
      EXPECT_NEAR(dist::studentt_quantile(u, nu), x, 1e-6)
          << "nu=" << nu << " x=" << x;
    }
  }
  // For light tails F(x) rounds toward 1 in double on the right, so only the
  // left half carries the level exactly.
  for (double nu : {200.0, 1e4}) {
    for (double x = -10.0; x <= 0.0; x += 0.125) {
      const double u = dist::studentt_cdf(x, nu);
      if (u <= 0.0 || u >= 1.0) continue;
      EXPECT_NEAR(dist::studentt_quantile(u, nu), x, 1e-6)
          << "nu=" << nu << " x=" << x;
    }
  }
}

TEST(Distributions, QuantileDeepTail) {
  const double x = dist::studentt_quantile(1e-300, 1.0);
  EXPECT_NEAR(-1.0 / (M_PI * x), 1e-300, 1e-310);
}

TEST(Distributions, MedianPathHasZeroDerivative) {
  const dist::PathwiseDraw d = dist::studentt_from_uniform(0.5, 3.0);
  EXPECT_EQ(d.value, 0.0);
  EXPECT_EQ(d.dvalue_dnu, 0.0);
}

TEST(Distributions, PathwiseDerivativeMatchesQuantileDifference) {
  for (double u : {0.02, 0.1, 0.3, 0.7, 0.9, 0.995}) {
    for (double nu : {0.5, 1.0, 2.0, 6.0, 25.0}) {
      const double h = 1e-3;
      const double fd = (dist::studentt_quantile(u, nu + h) -
                         dist::studentt_quantile(u, nu - h)) /
                        (2 * h);
      const double d = dist::studentt_from_uniform(u, nu).dvalue_dnu;
      EXPECT_LT(std::abs(d - fd) / std::abs(fd), 1e-2)
          << "u=" << u << " nu=" << nu;
    }
  }
}

TEST(Distributions, TapedDrawCarriesPathwiseGradient) {
  ad::Tape t;
  ad::Var nu = ad::variable(t, 2.0);
  ad::Var x = dist::studentt_from_uniform(0.9, nu);
  EXPECT_NEAR(t.backward(x.id())[nu.id()],
              dist::studentt_dx_dnu(x.value(), 2.0), 1e-15);
}

TEST(Distributions, StudentTSampleMean) {
  dist::Rng rng(3);
  double s = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) s += dist::studentt_sample(5.0, rng).value;
  EXPECT_NEAR(s / n, 0.0, 0.03);
}

TEST(Distributions, GaussianSampleMoments) {
  dist::Rng rng(1);
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = dist::gaussian_sample(rng);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(s2 / n - mean * mean, 1.0, 0.03);
}

TEST(Distributions, SameSeedSameStream) {
  dist::Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Distributions, TailParamsRespectFloor) {
  dist::TailParams tp{{-20.0, 0.0, 3.0}, 0.1};
  EXPECT_GT(tp.nu(0), 0.1);
  EXPECT_NEAR(tp.nu(1), 0.1 + std::log(2.0), 1e-15);
  EXPECT_NEAR(dist::raw_from_nu(tp.nu(2), 0.1), 3.0, 1e-12);
  dist::TailParams shared{{1.0}, 0.1};
  EXPECT_EQ(shared.nu(0), shared.nu(5));
}

TEST(Distributions, BaseKinds) {
  dist::BaseDistribution g(dist::BaseKind::kGaussian, 3);
  dist::BaseDistribution s(dist::BaseKind::kStudentTShared, 3);
  dist::BaseDistribution p(dist::BaseKind::kStudentTPerDim, 3);
  EXPECT_EQ(g.num_tail_params(), 0u);
  EXPECT_EQ(s.num_tail_params(), 1u);
  EXPECT_EQ(p.num_tail_params(), 3u);
  const std::vector<double> raw = {0.2, 1.0, 4.0};
  const auto nus = p.nu<double>(raw);
  const std::vector<double> z = {0.1, -0.5, 2.0};
  double expect = 0.0;
  for (int i = 0; i < 3; ++i) expect += dist::studentt_log_prob(z[i], nus[i]);
  EXPECT_NEAR(p.log_prob<double>(nus, z), expect, 1e-14);
}
