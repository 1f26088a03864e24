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

#ifndef ATAFLOW_TARGETS_HPP
#define ATAFLOW_TARGETS_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ataflow/autodiff.hpp"
#include "ataflow/distributions.hpp"
#include "ataflow/flows.hpp"
#include "ataflow/matrix.hpp"

namespace ataflow::targets {

using flows::SupportKind;

// Exact facts about a target, where known.
struct AnalyticReference {
  // log of the integral of exp(log_density), i.e. log p(y) for posteriors.
  std::optional<double> log_normalizer;
  // Per-coordinate marginal CDFs; empty when unknown.
  std::vector<std::function<double(double)>> marginal_cdf;
  // Exact joint sampler writing one draw; empty when unavailable.
  std::function<void(dist::Rng&, std::span<double>)> sampler;
  std::vector<double> mean;
  std::vector<double> variance;
};

/**
 * Unnormalized log density over a constrained support.
 *
 * The density is stored twice, once over doubles and once over taped
 * variables, both generated from the same generic callable by make_target.
 * Evaluating outside the support throws DomainError.
 */
struct TargetModel {
  std::string name;
  std::size_t dim = 0;
  std::vector<SupportKind> support;
  std::vector<std::string> coordinate_names;
  std::function<double(std::span<const double>)> log_density;
  std::function<ad::Var(std::span<const ad::Var>)> log_density_var;
  AnalyticReference reference;

  double operator()(std::span<const double> x) const { return log_density(x); }
  ad::Var operator()(std::span<const ad::Var> x) const {
    return log_density_var(x);
  }
};

// Builds a TargetModel from a callable templated on the scalar type:
// `f(std::span<const T>) -> T` for T in {double, ad::Var}.
template <class F>
TargetModel make_target(std::string name, std::vector<SupportKind> support,
                        F f) {
  TargetModel t;
  t.name = std::move(name);
  t.dim = support.size();
  t.support = std::move(support);
  t.log_density = [f](std::span<const double> x) { return f(x); };
  t.log_density_var = [f](std::span<const ad::Var> x) { return f(x); };
  for (std::size_t i = 0; i < t.dim; ++i) {
    t.coordinate_names.push_back("x" + std::to_string(i));
  }
  return t;
}

// Common factors, each a normalized log density.
template <class T>
T normal_log_prob(const T& x, double loc, double scale) {
  return dist::normal_log_prob<T>((x - loc) / scale) - std::log(scale);
}

template <class T>
T half_cauchy_log_prob(const T& x, double scale) {
  if (!(ad::value_of(x) > 0.0)) {
    throw DomainError("HalfCauchy support is x > 0");
  }
  const T u = x / scale;
  return std::log(2.0 / (special::kPi * scale)) - ad::log(1.0 + u * u);
}

template <class T>
T half_studentt_log_prob(const T& x, double nu, double scale) {
  if (!(ad::value_of(x) > 0.0)) {
    throw DomainError("HalfStudentT support is x > 0");
  }
  return std::log(2.0 / scale) + dist::studentt_log_prob<T>(x / scale, nu);
}

template <class T>
T studentt_log_prob(const T& x, double nu, double loc, double scale) {
  return dist::studentt_log_prob<T>((x - loc) / scale, nu) - std::log(scale);
}

TargetModel cauchy_target();
TargetModel aniso_product_target();

struct BlrPosterior {
  double a_n = 0.0;
  double b_n = 0.0;
  std::vector<double> mu_n;
  Matrix sigma_n;        // beta | sigma^2 ~ N(mu_n, sigma^2 * sigma_n)
  double log_marginal = 0.0;
};

struct BlrProblem {
  TargetModel target;  // over (beta_1..beta_p, sigma^2)
  BlrPosterior posterior;
};

// sigma^2 ~ InvGamma(a0, b0), beta | sigma^2 ~ N(0, sigma^2 I),
// y | beta, sigma^2 ~ N(X beta, sigma^2 I).
BlrProblem blr_conjugate(const Matrix& x, std::span<const double> y, double a0,
                         double b0);
// Seeded toy dataset: x ~ N(0, 1), y = beta x + sigma eps.
BlrProblem blr_synthetic(std::size_t n, double beta, double sigma, double a0,
                         double b0, std::uint64_t seed);

struct EightSchoolsData {
  std::vector<double> y;
  std::vector<double> sigma;
};
EightSchoolsData rubin_eight_schools();

// Coordinates (tau, mu, theta_1..theta_J) with tau > 0.
TargetModel eight_schools(const EightSchoolsData& data);

// Tail parameter function of the radial family: alpha(theta) = 2 + cos 2 theta.
double radial_alpha(double theta);
// Density in polar coordinates (with respect to dr dtheta) on r > 1 with
// P(R > r | theta) = r^{-alpha(theta)} and theta uniform.
double radial_aniso_log_density(double r, double theta);
Matrix radial_aniso_sample(std::size_t n, dist::Rng& rng);

// (r, theta) -> (r, r + theta) on each row.
Matrix spiral_transform(const Matrix& samples);

// mu ~ N(mu0, sigma0), y_i ~ N(mu, sigma_lik).
TargetModel normal_normal(std::span<const double> y, double sigma_lik,
                          double mu0, double sigma0);

// Normalized N(loc, scale^2) in one dimension.
TargetModel gaussian_target(double loc, double scale);

struct RegressionData {
  Matrix x;                 // n x p covariates
  std::vector<double> y;    // n outcomes
};
RegressionData synthetic_regression(std::size_t n, std::size_t p,
                                    dist::Rng& rng);

// alpha ~ StudentT(3, 8, 10), sigma ~ HalfStudentT(3, 0, 10),
// beta ~ N(0, 1), y ~ N(alpha + X beta, sigma). Coordinates (alpha, sigma,
// beta_1..beta_p) with sigma > 0.
TargetModel blr_nonconjugate(const RegressionData& data);
TargetModel synthetic_blr_nonconjugate(std::size_t n, std::size_t p,
                                       dist::Rng& rng);

// Eight-schools data from JSON text {"y": [...], "sigma": [...]}.
EightSchoolsData parse_eight_schools_json(const std::string& text);
// Regression data from a matrix whose final column is the outcome.
RegressionData regression_from_matrix(const Matrix& m);

// Registry names: cauchy, aniso_product, blr, eight_schools, normal_normal,
// blr_nonconjugate, gaussian.
std::vector<std::string> target_names();
TargetModel target_by_name(const std::string& name);

}  // namespace ataflow::targets

#endif  // ATAFLOW_TARGETS_HPP
