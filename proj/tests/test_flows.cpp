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

#include <cmath>
#include <vector>

#include "ataflow/flows.hpp"

namespace ad = ataflow::ad;
namespace dist = ataflow::dist;
namespace flows = ataflow::flows;
using flows::FlowOptions;
using flows::FlowStack;
using flows::SupportKind;

namespace {

FlowStack make_stack(std::size_t d, dist::BaseKind base, std::size_t hidden,
                     double weight_scale, std::uint64_t seed,
                     std::vector<SupportKind> support = {}) {
  if (support.empty()) support.assign(d, SupportKind::kIdentity);
  FlowOptions opts;
  opts.hidden = hidden;
  FlowStack stack(base, support, opts, seed);
  dist::Rng rng(seed + 1000);
  for (const auto& layer : stack.layers()) {
    layer.conditioner().initialize(stack.params().values(), rng, false);
  }
  for (std::size_t i = 0; i < stack.nu_offset(); ++i) {
    stack.params().values()[i] *= weight_scale;
  }
  return stack;
}

std::vector<double> random_vector(std::size_t d, dist::Rng& rng) {
  std::vector<double> z(d);
  for (double& v : z) v = rng.normal();
  return z;
}

// Dense central-difference Jacobian of a layer's forward map.
std::vector<double> jacobian(const flows::IafLayer& layer,
                             std::span<const double> p,
                             std::vector<double> z) {
  const std::size_t d = z.size();
  const double h = 1e-6;
  std::vector<double> jac(d * d);
  for (std::size_t k = 0; k < d; ++k) {
    const double z0 = z[k];
    z[k] = z0 + h;
    const auto up = layer.forward<double>(p, z).values;
    z[k] = z0 - h;
    const auto down = layer.forward<double>(p, z).values;
    z[k] = z0;
    for (std::size_t j = 0; j < d; ++j) jac[j * d + k] = (up[j] - down[j]) / (2 * h);
  }
  return jac;
}

double log_abs_det(std::vector<double> a, std::size_t d) {
  double acc = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < d; ++r) {
      if (std::abs(a[r * d + c]) > std::abs(a[piv * d + c])) piv = r;
    }
    for (std::size_t k = 0; k < d; ++k) std::swap(a[c * d + k], a[piv * d + k]);
    acc += std::log(std::abs(a[c * d + c]));
    for (std::size_t r = c + 1; r < d; ++r) {
      const double f = a[r * d + c] / a[c * d + c];
      for (std::size_t k = c; k < d; ++k) a[r * d + k] -= f * a[c * d + k];
    }
  }
  return acc;
}

}  // namespace

TEST(Flows, ZeroInitIsIdentity) {
  FlowStack stack(dist::BaseKind::kGaussian, {SupportKind::kIdentity, SupportKind::kIdentity, SupportKind::kIdentity},
                  FlowOptions{}, 7);
  const std::vector<double> z = {0.3, -1.1, 2.2};
  for (const auto& layer : stack.layers()) {
    const auto f = flows::iaf_forward(z, layer, stack.params().values());
    EXPECT_EQ(f.values, z);
    EXPECT_EQ(f.log_det, 0.0);
    const auto b = flows::iaf_inverse(z, layer, stack.params().values());
    EXPECT_EQ(b.values, z);
  }
}

TEST(Flows, SingleCoordinateIsAffine) {
  FlowOptions opts;
  opts.layers = 1;
  FlowStack stack(dist::BaseKind::kGaussian, {SupportKind::kIdentity}, opts, 3);
  stack.params().block_values("layer0.bmu")[0] = 0.7;
  stack.params().block_values("layer0.blambda")[0] = 0.4;
  const double s = 5.0 * std::tanh(0.4 / 5.0);
  const std::vector<double> z = {1.3};
  const auto f = flows::iaf_forward(z, stack.layers()[0], stack.params().values());
  EXPECT_NEAR(f.values[0], 1.3 * std::exp(s) + 0.7, 1e-15);
  EXPECT_NEAR(f.log_det, s, 1e-15);
}

TEST(Flows, JacobianIsTriangularAndMatchesLogDet) {
  dist::Rng rng(5);
  const std::size_t d = 4;
  FlowStack stack = make_stack(d, dist::BaseKind::kGaussian, 16, 2.0, 21);
  const auto p = stack.params().values();
  for (const auto& layer : stack.layers()) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto z = random_vector(d, rng);
      const auto jac = jacobian(layer, p, z);
      const auto& ord = layer.conditioner().ordering();
      for (std::size_t pj = 0; pj < d; ++pj) {
        for (std::size_t pk = pj + 1; pk < d; ++pk) {
          EXPECT_LT(std::abs(jac[ord[pj] * d + ord[pk]]), 1e-6);
        }
      }
      EXPECT_NEAR(log_abs_det(jac, d), layer.forward<double>(p, z).log_det, 1e-6);
    }
  }
}

TEST(Flows, InverseUndoesForward) {
  dist::Rng rng(9);
  const std::size_t d = 5;
  FlowStack stack = make_stack(d, dist::BaseKind::kGaussian, 32, 3.0, 4);
  const auto p = stack.params().values();
  for (const auto& layer : stack.layers()) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto z = random_vector(d, rng);
      const auto f = layer.forward<double>(p, z);
      const auto b = layer.inverse<double>(p, f.values);
      for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(b.values[j], z[j], 1e-8);
      EXPECT_NEAR(f.log_det + b.log_det, 0.0, 1e-10);
    }
  }
}

TEST(Flows, AutoregressiveProperty) {
  dist::Rng rng(12);
  const std::size_t d = 6;
  FlowStack stack = make_stack(d, dist::BaseKind::kGaussian, 32, 1.0, 8);
  const auto p = stack.params().values();
  for (const auto& layer : stack.layers()) {
    const auto& ord = layer.conditioner().ordering();
    for (int trial = 0; trial < 5; ++trial) {
      const auto jac = jacobian(layer, p, random_vector(d, rng));
      for (std::size_t pj = 0; pj < d; ++pj) {
        for (std::size_t pk = pj + 1; pk < d; ++pk) {
          EXPECT_EQ(std::abs(jac[ord[pj] * d + ord[pk]]) < 1e-6, true);
        }
      }
    }
  }
}

TEST(Flows, ClampBoundsLogScale) {
  dist::Rng rng(2);
  const std::size_t d = 3;
  FlowStack stack = make_stack(d, dist::BaseKind::kGaussian, 32, 50.0, 6);
  const auto p = stack.params().values();
  const auto& layer = stack.layers()[0];
  double worst = 0.0;
  std::vector<double> mu(d), lambda(d);
  for (int probe = 0; probe < 10000; ++probe) {
    auto z = random_vector(d, rng);
    for (double& v : z) v *= 10.0;
    layer.conditioner().forward<double>(p, z, mu, lambda);
    for (double l : lambda) {
      worst = std::max(worst, std::abs(layer.clamped(l)));
    }
  }
  EXPECT_LE(worst, 5.0);
  EXPECT_GT(worst, 4.0);
}

TEST(Flows, SupportForwardValues) {
  flows::SupportBijection exp_b({SupportKind::kPositive});
  flows::SupportBijection sig_b({SupportKind::kUnitInterval});
  flows::SupportBijection id_b({SupportKind::kIdentity});
  const std::vector<double> zero = {0.0};
  auto e = flows::support_forward(zero, exp_b);
  EXPECT_EQ(e.values[0], 1.0);
  EXPECT_EQ(e.log_det, 0.0);
  auto s = flows::support_forward(zero, sig_b);
  EXPECT_EQ(s.values[0], 0.5);
  EXPECT_NEAR(s.log_det, std::log(0.25), 1e-15);
  const std::vector<double> x = {-2.5};
  auto i = flows::support_forward(x, id_b);
  EXPECT_EQ(i.values[0], -2.5);
  EXPECT_EQ(i.log_det, 0.0);
}

TEST(Flows, IdentityStackGaussianLogProb) {
  FlowStack stack(dist::BaseKind::kGaussian, {SupportKind::kIdentity, SupportKind::kIdentity}, FlowOptions{}, 1);
  const std::vector<double> y = {0.4, -2.0};
  EXPECT_NEAR(flows::flow_log_prob(y, stack),
              dist::normal_log_prob(0.4) + dist::normal_log_prob(-2.0), 1e-15);
}

TEST(Flows, AffineMapChangeOfVariables) {
  FlowOptions opts;
  opts.layers = 1;
  opts.clamp = 5.0;
  FlowStack stack(dist::BaseKind::kGaussian, {SupportKind::kIdentity}, opts, 1);
  // Choose the raw lambda whose clamped value is exactly log 2.
  stack.params().block_values("layer0.blambda")[0] = 5.0 * std::atanh(std::log(2.0) / 5.0);
  for (double y : {-3.0, -0.2, 0.0, 1.7, 6.0}) {
    const std::vector<double> v = {y};
    EXPECT_NEAR(flows::flow_log_prob(v, stack),
                dist::normal_log_prob(y / 2.0) - std::log(2.0), 1e-12);
  }
}

TEST(Flows, OneDimensionalPushforwardDensity) {
  FlowOptions opts;
  opts.layers = 1;
  FlowStack stack(dist::BaseKind::kStudentTShared, {SupportKind::kIdentity}, opts, 1);
  stack.set_nu(3.0);
  stack.params().block_values("layer0.bmu")[0] = -0.6;
  stack.params().block_values("layer0.blambda")[0] = 1.3;
  const double s = 5.0 * std::tanh(1.3 / 5.0);
  const double nu = stack.nu_values()[0];
  for (double y : {-40.0, -1.0, 0.5, 3.0, 100.0}) {
    const std::vector<double> v = {y};
    const double analytic =
        dist::studentt_log_prob((y + 0.6) * std::exp(-s), nu) - s;
    EXPECT_NEAR(flows::flow_log_prob(v, stack), analytic, 1e-8);
  }
}

TEST(Flows, DensityIntegratesToOne) {
  FlowStack stack = make_stack(2, dist::BaseKind::kGaussian, 16, 1.5, 31);
  const double h = 0.05;
  const int n = static_cast<int>(40.0 / h);
  double mass = 0.0;
  std::vector<double> y(2);
  for (int i = 0; i <= n; ++i) {
    const double wi = (i == 0 || i == n) ? 0.5 : 1.0;
    y[0] = -20.0 + i * h;
    for (int j = 0; j <= n; ++j) {
      const double wj = (j == 0 || j == n) ? 0.5 : 1.0;
      y[1] = -20.0 + j * h;
      mass += wi * wj * std::exp(flows::flow_log_prob(y, stack));
    }
  }
  EXPECT_NEAR(mass * h * h, 1.0, 2e-2);
}

TEST(Flows, IdentityStackSampleCovariance) {
  FlowStack stack(dist::BaseKind::kGaussian, {SupportKind::kIdentity, SupportKind::kIdentity, SupportKind::kIdentity},
                  FlowOptions{}, 1);
  dist::Rng rng(77);
  const std::size_t n = 100000;
  const auto batch = flows::flow_sample(stack, n, rng);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      double m_a = 0, m_b = 0, c = 0;
      for (std::size_t i = 0; i < n; ++i) {
        m_a += batch.values(i, a);
        m_b += batch.values(i, b);
      }
      m_a /= n;
      m_b /= n;
      for (std::size_t i = 0; i < n; ++i) {
        c += (batch.values(i, a) - m_a) * (batch.values(i, b) - m_b);
      }
      EXPECT_NEAR(c / (n - 1), a == b ? 1.0 : 0.0, 0.05);
    }
  }
}

TEST(Flows, SamplingPathLogDensityMatchesInversion) {
  std::vector<SupportKind> support = {SupportKind::kIdentity, SupportKind::kPositive,
                                      SupportKind::kUnitInterval};
  for (auto base : {dist::BaseKind::kGaussian, dist::BaseKind::kStudentTShared,
                    dist::BaseKind::kStudentTPerDim}) {
    FlowStack stack = make_stack(3, base, 16, 1.0, 13, support);
    if (stack.nu_count() > 0) {
      auto raw = stack.params().block_values("raw_nu");
      for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = 0.5 + i;
    }
    dist::Rng rng(4);
    const auto batch = flows::flow_sample(stack, 200, rng);
    for (std::size_t i = 0; i < 200; ++i) {
      const auto y = batch.values.row(i);
      // Near 0 or 1 the stored y itself has lost the digits needed to invert.
      if (std::min(y[2], 1.0 - y[2]) < 1e-3) continue;
      const double lp = flows::flow_log_prob(y, stack);
      EXPECT_NEAR(batch.log_q[i], lp, 1e-8 * std::max(1.0, std::abs(lp)));
    }
  }
}

TEST(Flows, StackLogDetIsSumOfLayers) {
  FlowStack stack = make_stack(3, dist::BaseKind::kGaussian, 16, 1.0, 17);
  const auto p = stack.params().values();
  dist::Rng rng(1);
  const auto z = random_vector(3, rng);
  const auto r0 = stack.layers()[0].forward<double>(p, z);
  const auto r1 = stack.layers()[1].forward<double>(p, r0.values);
  const std::vector<double> nus;
  const auto total = stack.transform<double>(p, nus, z);
  double base = 0.0;
  for (double v : z) base += dist::normal_log_prob(v);
  EXPECT_EQ(total.values, r1.values);
  EXPECT_NEAR(total.log_det, base - r0.log_det - r1.log_det, 1e-14);
}

TEST(Flows, TapedLogProbMatchesDouble) {
  FlowStack stack = make_stack(3, dist::BaseKind::kStudentTPerDim, 8, 1.0, 3);
  const std::vector<double> y = {0.2, -1.4, 3.0};
  ad::Tape tape;
  const auto p = ad::variables(tape, stack.params().values());
  const auto yv = ad::variables(tape, y);
  const ad::Var lp = stack.log_prob<ad::Var>(p, yv);
  EXPECT_NEAR(lp.value(), flows::flow_log_prob(y, stack), 1e-13);
}

TEST(Flows, OutOfSupportNamesCoordinate) {
  FlowStack stack(dist::BaseKind::kGaussian,
                  {SupportKind::kIdentity, SupportKind::kPositive}, FlowOptions{}, 1);
  const std::vector<double> y = {0.5, -1.0};
  try {
    (void)flows::flow_log_prob(y, stack);
    FAIL() << "expected a domain error";
  } catch (const ataflow::DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("coordinate 1"), std::string::npos);
  }
}

TEST(Flows, SnapshotRoundTripIsExact) {
  FlowStack stack = make_stack(3, dist::BaseKind::kStudentTPerDim, 8, 1.3, 99,
                               {SupportKind::kIdentity, SupportKind::kPositive,
                                SupportKind::kIdentity});
  stack.params().block_values("raw_nu")[1] = 0.123456789012345678;
  const auto json = flows::snapshot(stack);
  const FlowStack back = flows::restore(nlohmann::json::parse(json.dump()));
  ASSERT_EQ(back.params().size(), stack.params().size());
  for (std::size_t i = 0; i < stack.params().size(); ++i) {
    EXPECT_EQ(back.params().values()[i], stack.params().values()[i]);
  }
  EXPECT_EQ(flows::hex_double(0.1), "0x1.999999999999ap-4");
  EXPECT_EQ(flows::parse_hex_double("0x1.999999999999ap-4"), 0.1);
}
