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

#include "ataflow/distributions.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>

namespace ataflow::dist {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * special::kPi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double gaussian_sample(Rng& rng) { return rng.normal(); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double studentt_pdf(double x, double nu) {
  return std::exp(studentt_log_prob(x, nu));
}

double studentt_survival(double x, double nu) {
  check_dof(nu);
  if (std::isnan(x)) return x;
  if (x < 0.0) return 1.0 - studentt_survival(-x, nu);
  if (x == 0.0) return 0.5;
  // P(|T| > x) = I_{nu/(nu+x^2)}(nu/2, 1/2) = 1 - I_{x^2/(nu+x^2)}(1/2, nu/2)
  const double r = x / std::sqrt(nu);
  if (r < 1.0) {
    const double t = r * r;
    return 0.5 * boost::math::ibetac(0.5, 0.5 * nu, t / (1.0 + t));
  }
  const double inv = 1.0 / r;
  const double w = inv * inv;  // nu / x^2
  return 0.5 * boost::math::ibeta(0.5 * nu, 0.5, w / (1.0 + w));
}

double studentt_cdf(double x, double nu) {
  check_dof(nu);
  if (x <= 0.0) return studentt_survival(-x, nu);
  return 1.0 - studentt_survival(x, nu);
}

namespace {

double log_norm_const(double nu) {
  return special::lgamma(0.5 * (nu + 1.0)) - special::lgamma(0.5 * nu) -
         0.5 * std::log(nu * special::kPi);
}

// log pdf at x = e^t, safe when x^2 overflows.
double log_pdf_at_log(double t, double nu) {
  const double log_ratio = 2.0 * t - std::log(nu);  // log(x^2 / nu)
  const double log1p_term = log_ratio > 0.0
                                ? log_ratio + std::log1p(std::exp(-log_ratio))
                                : std::log1p(std::exp(log_ratio));
  return log_norm_const(nu) - 0.5 * (nu + 1.0) * log1p_term;
}

// Upper bound on the root of S(x) = p, from pdf(x) <= c nu^{(nu+1)/2} x^{-nu-1}.
double tail_guess(double p, double nu) {
  return (log_norm_const(nu) + 0.5 * (nu - 1.0) * std::log(nu) - std::log(p)) /
         nu;
}

// Hill's closed-form approximation to the upper quantile, good to ~1e-6
// relative for nu >= 1. Returns NaN when it does not apply.
double hill_guess(double p, double nu) {
  if (nu < 1.0) return std::numeric_limits<double>::quiet_NaN();
  const double two_p = 2.0 * p;  // two-sided level
  if (nu == 1.0) return 1.0 / std::tan(0.5 * special::kPi * two_p);
  if (nu == 2.0) return std::sqrt(2.0 / (two_p * (2.0 - two_p)) - 2.0);
  const double a = 1.0 / (nu - 0.5);
  const double b = 48.0 / (a * a);
  double c = ((20700.0 * a / b - 98.0) * a - 16.0) * a + 96.36;
  const double d =
      ((94.5 / (b + c) - 3.0) / b + 1.0) * std::sqrt(a * special::kPi / 2.0) * nu;
  double y = std::pow(d * two_p, 2.0 / nu);
  if (y > 0.05 + a) {
    const double x = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
    y = x * x;
    if (nu < 5.0) c += 0.3 * (nu - 4.5) * (x + 0.6);
    c = (((0.05 * d * x - 5.0) * x - 7.0) * x - 2.0) * x + b + c;
    y = (((((0.4 * y + 6.3) * y + 36.0) * y + 94.5) / c - y - 3.0) / b + 1.0) *
        x;
    y = std::expm1(a * y * y);
  } else {
    y = ((1.0 / (((nu + 6.0) / (nu * y) - 0.089 * d - 0.822) * (nu + 2.0) * 3.0) +
          0.5 / (nu + 4.0)) *
             y -
         1.0) *
            (nu + 1.0) / (nu + 2.0) +
        1.0 / y;
  }
  return std::sqrt(nu * y);
}

// Solves log S(e^t) = log p for 0 < p < 0.5 by Newton's method in t. log S(e^t)
// is concave and decreasing in t, so iterates right of the root descend
// monotonically; the bracket catches anything else.
double upper_quantile(double p, double nu) {
  const double log_p = std::log(p);
  const double guess = hill_guess(p, nu);
  double t = std::isfinite(guess) && guess > 0.0 ? std::log(guess)
                                                 : tail_guess(p, nu);
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 200; ++iter) {
    const double log_s = studentt_log_survival_at_log(t, nu);
    const double g = log_s - log_p;
    if (g == 0.0) break;
    if (g > 0.0) {
      lo = std::max(lo, t);
    } else {
      hi = std::min(hi, t);
    }
    const double hazard = std::exp(t + log_pdf_at_log(t, nu) - log_s);
    double next = t + std::clamp(g / hazard, -8.0, 8.0);
    if (!std::isfinite(next) || next <= lo || next >= hi) {
      if (std::isfinite(lo) && std::isfinite(hi)) {
        next = 0.5 * (lo + hi);
      } else {
        next = std::isfinite(lo) ? lo + 8.0 : hi - 8.0;
      }
    }
    const double step = next - t;
    t = next;
    // Quadratic convergence: the error after a step of 1e-7 is ~1e-14.
    if (std::abs(step) <= 1e-7) break;
  }
  return std::exp(t);
}

}  // namespace

double studentt_log_survival_at_log(double t, double nu) {
  check_dof(nu);
  const double log_w = std::log(nu) - 2.0 * t;  // log(nu / x^2)
  if (log_w > 0.0) return std::log(studentt_survival(std::exp(t), nu));
  if (log_w < -600.0) {
    // I_y(a, b) ~ y^a / (a B(a, b)) as y -> 0.
    const double a = 0.5 * nu;
    const double log_beta = special::lgamma(a) + special::lgamma(0.5) -
                            special::lgamma(a + 0.5);
    return std::log(0.5) + a * log_w - std::log(a) - log_beta;
  }
  const double w = std::exp(log_w);
  return std::log(0.5 * boost::math::ibeta(0.5 * nu, 0.5, w / (1.0 + w)));
}

double studentt_quantile(double u, double nu) {
  check_dof(nu);
  if (!(u > 0.0 && u < 1.0)) {
    if (u == 0.0) return -std::numeric_limits<double>::infinity();
    if (u == 1.0) return std::numeric_limits<double>::infinity();
    throw DomainError("quantile level must lie in [0, 1]");
  }
  if (u == 0.5) return 0.0;
  if (u < 0.5) return -upper_quantile(u, nu);
  return upper_quantile(1.0 - u, nu);
}

double studentt_dx_dnu(double x, double nu) {
  check_dof(nu);
  if (x == 0.0) return 0.0;
  const double ax = std::abs(x);
  const double h = 1e-4 * std::max(1.0, nu);
  const double ds =
      (studentt_survival(ax, nu + h) - studentt_survival(ax, nu - h)) /
      (2.0 * h);
  // x > 0: F = 1 - S so dx/dnu = dS/dnu / pdf; mirrored for x < 0.
  const double d = ds / studentt_pdf(ax, nu);
  return x > 0.0 ? d : -d;
}

PathwiseDraw studentt_from_uniform(double u, double nu) {
  const double x = studentt_quantile(u, nu);
  return PathwiseDraw{x, studentt_dx_dnu(x, nu)};
}

PathwiseDraw studentt_sample(double nu, Rng& rng) {
  return studentt_from_uniform(rng.uniform(), nu);
}

ad::Var studentt_from_uniform(double u, const ad::Var& nu) {
  const PathwiseDraw d = studentt_from_uniform(u, nu.value());
  return ad::custom(*nu.tape(), d.value, {{nu, d.dvalue_dnu}});
}

double raw_from_nu(double nu, double floor) {
  const double y = nu - floor;
  if (!(y > 0.0)) throw DomainError("nu must exceed the floor");
  // inverse softplus, stable for large y
  return y > 30.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
}

std::string to_string(BaseKind kind) {
  switch (kind) {
    case BaseKind::kGaussian: return "gaussian";
    case BaseKind::kStudentTShared: return "studentt_shared";
    case BaseKind::kStudentTPerDim: return "studentt_per_dim";
  }
  return "?";
}

BaseDistribution::BaseDistribution(BaseKind kind, std::size_t dim, double floor)
    : kind_(kind), dim_(dim), floor_(floor) {
  if (dim == 0) throw UsageError("base distribution needs dim >= 1");
  if (!(floor > 0.0)) throw DomainError("nu floor must be positive");
}

std::size_t BaseDistribution::num_tail_params() const noexcept {
  switch (kind_) {
    case BaseKind::kGaussian: return 0;
    case BaseKind::kStudentTShared: return 1;
    case BaseKind::kStudentTPerDim: return dim_;
  }
  return 0;
}

}  // namespace ataflow::dist
