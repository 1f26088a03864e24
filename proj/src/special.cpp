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

#include "ataflow/special.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace ataflow::special {
namespace {

constexpr double kG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

bool is_nonpositive_integer(double x) {
  return x <= 0.0 && x == std::floor(x);
}

}  // namespace

double lgamma(double x) {
  if (std::isnan(x)) return x;
  if (is_nonpositive_integer(x)) return std::numeric_limits<double>::infinity();
  if (x < 0.5) {
    // Gamma(x) Gamma(1 - x) = pi / sin(pi x)
    return std::log(kPi / std::abs(std::sin(kPi * x))) - lgamma(1.0 - x);
  }
  const double xm = x - 1.0;
  double a = kLanczos[0];
  for (int i = 1; i < 9; ++i) a += kLanczos[i] / (xm + i);
  const double t = xm + kG + 0.5;
  return kLogSqrt2Pi + (xm + 0.5) * std::log(t) - t + std::log(a);
}

double digamma(double x) {
  if (std::isnan(x)) return x;
  if (is_nonpositive_integer(x)) return std::numeric_limits<double>::quiet_NaN();
  if (x < 0.5) {
    return digamma(1.0 - x) - kPi / std::tan(kPi * x);
  }
  const double xm = x - 1.0;
  double a = kLanczos[0];
  double da = 0.0;
  for (int i = 1; i < 9; ++i) {
    const double q = xm + i;
    a += kLanczos[i] / q;
    da -= kLanczos[i] / (q * q);
  }
  const double t = xm + kG + 0.5;
  return std::log(t) + (xm + 0.5) / t - 1.0 + da / a;
}

}  // namespace ataflow::special
