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

#include "ataflow/targets.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <random>

#include "json.hpp"

namespace ataflow::targets {

namespace {

double cauchy_cdf(double x) { return 0.5 + std::atan(x) / special::kPi; }

// N(x; mu, s) with a possibly taped scale.
template <class T>
T normal_log_prob_var_scale(const T& x, const T& mu, const T& scale) {
  const T u = (x - mu) / scale;
  return -0.5 * (u * u) - ad::log(scale) - special::kLogSqrt2Pi;
}

}  // namespace

TargetModel cauchy_target() {
  TargetModel t = make_target(
      "cauchy", {SupportKind::kIdentity}, [](auto x) {
        using T = typename decltype(x)::value_type;
        const T& v = x[0];
        return -ad::log(1.0 + v * v);
      });
  t.reference.log_normalizer = std::log(special::kPi);
  t.reference.marginal_cdf = {cauchy_cdf};
  t.reference.sampler = [](dist::Rng& rng, std::span<double> out) {
    out[0] = std::tan(special::kPi * (rng.uniform() - 0.5));
  };
  t.reference.mean = {0.0};
  return t;
}

TargetModel aniso_product_target() {
  TargetModel t = make_target(
      "aniso_product", {SupportKind::kIdentity, SupportKind::kIdentity},
      [](auto x) {
        using T = typename decltype(x)::value_type;
        return dist::studentt_log_prob<T>(x[0], 1.0) +
               dist::normal_log_prob<T>(x[1]);
      });
  t.reference.log_normalizer = 0.0;
  t.reference.marginal_cdf = {cauchy_cdf, dist::normal_cdf};
  t.reference.sampler = [](dist::Rng& rng, std::span<double> out) {
    out[0] = std::tan(special::kPi * (rng.uniform() - 0.5));
    out[1] = rng.normal();
  };
  return t;
}

BlrProblem blr_conjugate(const Matrix& x, std::span<const double> y, double a0,
                         double b0) {
  if (!(a0 > 0.0) || !(b0 > 0.0)) {
    throw DomainError("blr_conjugate: a0 and b0 must be positive");
  }
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (y.size() != n) throw UsageError("blr_conjugate: X and y disagree on n");
  if (p == 0) throw UsageError("blr_conjugate: X needs at least one column");

  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
  double yty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < p; ++a) {
      xty(a) += x(i, a) * y[i];
      for (std::size_t b = 0; b < p; ++b) xtx(a, b) += x(i, a) * x(i, b);
    }
    yty += y[i] * y[i];
  }
  const Eigen::MatrixXd lambda_n = xtx + Eigen::MatrixXd::Identity(p, p);
  const Eigen::LLT<Eigen::MatrixXd> llt(lambda_n);
  const Eigen::VectorXd mu_n = llt.solve(xty);
  const Eigen::MatrixXd sigma_n = llt.solve(Eigen::MatrixXd::Identity(p, p));
  double log_det_lambda = 0.0;
  for (std::size_t a = 0; a < p; ++a) {
    log_det_lambda += 2.0 * std::log(llt.matrixL()(a, a));
  }

  BlrProblem out;
  BlrPosterior& post = out.posterior;
  post.a_n = a0 + 0.5 * static_cast<double>(n);
  post.b_n = b0 + 0.5 * (yty - mu_n.dot(lambda_n * mu_n));
  post.mu_n.assign(mu_n.data(), mu_n.data() + p);
  post.sigma_n = Matrix(p, p);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) post.sigma_n(a, b) = sigma_n(a, b);
  }
  post.log_marginal = -0.5 * static_cast<double>(n) * std::log(2.0 * special::kPi) -
                      0.5 * log_det_lambda + a0 * std::log(b0) -
                      post.a_n * std::log(post.b_n) + special::lgamma(post.a_n) -
                      special::lgamma(a0);

  std::vector<double> xtx_flat(p * p), xty_flat(p);
  for (std::size_t a = 0; a < p; ++a) {
    xty_flat[a] = xty(a);
    for (std::size_t b = 0; b < p; ++b) xtx_flat[a * p + b] = xtx(a, b);
  }
  const double log_prior_const = a0 * std::log(b0) - special::lgamma(a0);
  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);

  std::vector<SupportKind> support(p, SupportKind::kIdentity);
  support.push_back(SupportKind::kPositive);
  out.target = make_target("blr", support, [=](auto v) {
    using T = typename decltype(v)::value_type;
    const T& s = v[p];
    if (!(ad::value_of(s) > 0.0)) {
      throw DomainError("blr: sigma^2 must be positive");
    }
    const std::span<const T> beta = v.first(p);
    // ||y - X beta||^2 + beta'beta from sufficient statistics.
    T quad = beta[0] * beta[0] * (xtx_flat[0] + 1.0) - 2.0 * xty_flat[0] * beta[0];
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < p; ++b) {
        if (a == 0 && b == 0) continue;
        const double coef = xtx_flat[a * p + b] + (a == b ? 1.0 : 0.0);
        quad += coef * beta[a] * beta[b];
      }
      if (a > 0) quad -= 2.0 * xty_flat[a] * beta[a];
    }
    const T log_s = ad::log(s);
    return log_prior_const - (a0 + 1.0) * log_s - b0 / s -
           0.5 * (nd + pd) * (log_s + std::log(2.0 * special::kPi)) -
           0.5 * (yty + quad) / s;
  });
  std::vector<std::string> names;
  for (std::size_t a = 0; a < p; ++a) names.push_back("beta" + std::to_string(a));
  names.push_back("sigma2");
  out.target.coordinate_names = names;

  // Exact posterior: sigma^2 ~ InvGamma(a_n, b_n), beta | sigma^2 ~ N(mu_n,
  // sigma^2 Sigma_n); beta marginals are StudentT(2 a_n).
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(sigma_n).matrixL();
  const double a_n = post.a_n;
  const double b_n = post.b_n;
  const std::vector<double> mu = post.mu_n;
  AnalyticReference& ref = out.target.reference;
  ref.log_normalizer = post.log_marginal;
  ref.sampler = [=](dist::Rng& rng, std::span<double> draw) {
    std::gamma_distribution<double> gamma(a_n, 1.0);
    const double s = b_n / gamma(rng.engine());
    std::vector<double> z(p);
    for (double& zi : z) zi = rng.normal();
    for (std::size_t a = 0; a < p; ++a) {
      double acc = mu[a];
      for (std::size_t b = 0; b <= a; ++b) acc += std::sqrt(s) * chol(a, b) * z[b];
      draw[a] = acc;
    }
    draw[p] = s;
  };
  for (std::size_t a = 0; a < p; ++a) {
    const double scale = std::sqrt(b_n / a_n * sigma_n(a, a));
    const double loc = mu[a];
    ref.marginal_cdf.push_back([=](double b) {
      return dist::studentt_cdf((b - loc) / scale, 2.0 * a_n);
    });
  }
  ref.marginal_cdf.push_back([=](double s) {
    return s <= 0.0 ? 0.0 : boost::math::gamma_q(a_n, b_n / s);
  });
  return out;
}

BlrProblem blr_synthetic(std::size_t n, double beta, double sigma, double a0,
                         double b0, std::uint64_t seed) {
  dist::Rng rng(seed);
  Matrix x(n, 1);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    y[i] = beta * x(i, 0) + sigma * rng.normal();
  }
  return blr_conjugate(x, y, a0, b0);
}

EightSchoolsData rubin_eight_schools() {
  return EightSchoolsData{{28, 8, -3, 7, -1, 1, 18, 12},
                          {15, 10, 16, 11, 9, 11, 10, 18}};
}

TargetModel eight_schools(const EightSchoolsData& data) {
  if (data.y.size() != data.sigma.size() || data.y.empty()) {
    throw UsageError("eight_schools: y and sigma must be non-empty and equal length");
  }
  for (double s : data.sigma) {
    if (!(s > 0.0)) throw DomainError("eight_schools: sigma must be positive");
  }
  const std::vector<double> y = data.y;
  const std::vector<double> sigma = data.sigma;
  const std::size_t j = y.size();
  std::vector<SupportKind> support(j + 2, SupportKind::kIdentity);
  support[0] = SupportKind::kPositive;
  TargetModel t = make_target("eight_schools", support, [=](auto v) {
    using T = typename decltype(v)::value_type;
    const T& tau = v[0];
    if (!(ad::value_of(tau) > 0.0)) {
      throw DomainError("eight_schools: coordinate 0 (tau) must be positive");
    }
    const T& mu = v[1];
    T lp = half_cauchy_log_prob<T>(tau, 5.0) + normal_log_prob<T>(mu, 0.0, 5.0);
    const T log_tau = ad::log(tau);
    for (std::size_t i = 0; i < j; ++i) {
      const T& theta = v[2 + i];
      const T u = (theta - mu) / tau;
      lp += -0.5 * (u * u) - log_tau - special::kLogSqrt2Pi;
      const T r = (y[i] - theta) / sigma[i];
      lp += -0.5 * (r * r) - (std::log(sigma[i]) + special::kLogSqrt2Pi);
    }
    return lp;
  });
  t.coordinate_names = {"tau", "mu"};
  for (std::size_t i = 0; i < j; ++i) {
    t.coordinate_names.push_back("theta" + std::to_string(i + 1));
  }
  return t;
}

double radial_alpha(double theta) { return 2.0 + std::cos(2.0 * theta); }

double radial_aniso_log_density(double r, double theta) {
  if (!(r > 1.0)) throw DomainError("radial density is defined on r > 1");
  const double a = radial_alpha(theta);
  return std::log(a / (2.0 * special::kPi)) - (a + 1.0) * std::log(r);
}

Matrix radial_aniso_sample(std::size_t n, dist::Rng& rng) {
  Matrix out(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = 2.0 * special::kPi * rng.uniform();
    const double r = std::pow(rng.uniform(), -1.0 / radial_alpha(theta));
    out(i, 0) = r * std::cos(theta);
    out(i, 1) = r * std::sin(theta);
  }
  return out;
}

Matrix spiral_transform(const Matrix& samples) {
  if (samples.cols() != 2) throw UsageError("spiral_transform needs 2 columns");
  Matrix out(samples.rows(), 2);
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    const double x = samples(i, 0);
    const double y = samples(i, 1);
    const double r = std::hypot(x, y);
    const double theta = std::atan2(y, x) + r;
    out(i, 0) = r * std::cos(theta);
    out(i, 1) = r * std::sin(theta);
  }
  return out;
}

TargetModel normal_normal(std::span<const double> y, double sigma_lik,
                          double mu0, double sigma0) {
  if (!(sigma_lik > 0.0) || !(sigma0 > 0.0)) {
    throw DomainError("normal_normal: scales must be positive");
  }
  const std::vector<double> data(y.begin(), y.end());
  const double n = static_cast<double>(data.size());
  double sum = 0.0, sum_sq = 0.0;
  for (double v : data) {
    sum += v;
    sum_sq += v * v;
  }
  TargetModel t = make_target("normal_normal", {SupportKind::kIdentity}, [=](auto v) {
    using T = typename decltype(v)::value_type;
    const T& mu = v[0];
    const T u = (mu - mu0) / sigma0;
    // sum_i (y_i - mu)^2 = sum_sq - 2 mu sum + n mu^2
    const T sq = sum_sq - 2.0 * sum * mu + n * (mu * mu);
    return -0.5 * (u * u) - std::log(sigma0) - special::kLogSqrt2Pi -
           0.5 * sq / (sigma_lik * sigma_lik) -
           n * (std::log(sigma_lik) + special::kLogSqrt2Pi);
  });
  t.coordinate_names = {"mu"};
  const double prec = 1.0 / (sigma0 * sigma0) + n / (sigma_lik * sigma_lik);
  const double var = 1.0 / prec;
  const double mean = var * (mu0 / (sigma0 * sigma0) + sum / (sigma_lik * sigma_lik));
  // log p(y) = log p(mu, y) - log p(mu | y) at mu = mean.
  const std::vector<double> at = {mean};
  const double log_post = -0.5 * std::log(2.0 * special::kPi * var);
  t.reference.log_normalizer = t.log_density(at) - log_post;
  t.reference.mean = {mean};
  t.reference.variance = {var};
  const double sd = std::sqrt(var);
  t.reference.marginal_cdf = {
      [=](double x) { return dist::normal_cdf((x - mean) / sd); }};
  t.reference.sampler = [=](dist::Rng& rng, std::span<double> out) {
    out[0] = mean + sd * rng.normal();
  };
  return t;
}

TargetModel gaussian_target(double loc, double scale) {
  if (!(scale > 0.0)) throw DomainError("gaussian_target: scale must be positive");
  TargetModel t = make_target("gaussian", {SupportKind::kIdentity}, [=](auto v) {
    using T = typename decltype(v)::value_type;
    return normal_log_prob<T>(v[0], loc, scale);
  });
  t.reference.log_normalizer = 0.0;
  t.reference.mean = {loc};
  t.reference.variance = {scale * scale};
  t.reference.marginal_cdf = {
      [=](double x) { return dist::normal_cdf((x - loc) / scale); }};
  t.reference.sampler = [=](dist::Rng& rng, std::span<double> out) {
    out[0] = loc + scale * rng.normal();
  };
  return t;
}

RegressionData synthetic_regression(std::size_t n, std::size_t p,
                                    dist::Rng& rng) {
  if (n < 1 || p < 1) throw UsageError("synthetic regression needs n, p >= 1");
  RegressionData d{Matrix(n, p), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) d.x(i, j) = rng.normal();
  }
  // Standardize columns.
  for (std::size_t j = 0; j < p && n > 1; ++j) {
    double m = 0.0, s = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += d.x(i, j);
    m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) s += (d.x(i, j) - m) * (d.x(i, j) - m);
    s = std::sqrt(s / static_cast<double>(n - 1));
    for (std::size_t i = 0; i < n; ++i) d.x(i, j) = (d.x(i, j) - m) / s;
  }
  std::vector<double> beta(p);
  for (double& b : beta) b = rng.normal();
  const double alpha = 8.0;
  const double sigma = 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mu = alpha;
    for (std::size_t j = 0; j < p; ++j) mu += d.x(i, j) * beta[j];
    d.y[i] = mu + sigma * rng.normal();
  }
  return d;
}

TargetModel blr_nonconjugate(const RegressionData& data) {
  const std::size_t n = data.x.rows();
  const std::size_t p = data.x.cols();
  if (n == 0 || p == 0 || data.y.size() != n) {
    throw UsageError("blr_nonconjugate: need n >= 1 rows, p >= 1 covariates");
  }
  const Matrix x = data.x;
  const std::vector<double> y = data.y;
  std::vector<SupportKind> support(p + 2, SupportKind::kIdentity);
  support[1] = SupportKind::kPositive;
  TargetModel t = make_target("blr_nonconjugate", support, [=](auto v) {
    using T = typename decltype(v)::value_type;
    const T& alpha = v[0];
    const T& sigma = v[1];
    if (!(ad::value_of(sigma) > 0.0)) {
      throw DomainError("blr_nonconjugate: coordinate 1 (sigma) must be positive");
    }
    const std::span<const T> beta = v.subspan(2, p);
    T lp = studentt_log_prob<T>(alpha, 3.0, 8.0, 10.0) +
           half_studentt_log_prob<T>(sigma, 3.0, 10.0);
    for (std::size_t j = 0; j < p; ++j) lp += dist::normal_log_prob<T>(beta[j]);
    std::vector<T> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
      const T r = y[i] - ad::affine(alpha, x.row(i), beta);
      sq[i] = r * r;
    }
    const T rss = ad::sum(std::span<const T>(sq));
    const double nd = static_cast<double>(n);
    return lp - 0.5 * rss / (sigma * sigma) -
           nd * (ad::log(sigma) + special::kLogSqrt2Pi);
  });
  t.coordinate_names = {"alpha", "sigma"};
  for (std::size_t j = 0; j < p; ++j) {
    t.coordinate_names.push_back("beta" + std::to_string(j + 1));
  }
  return t;
}

TargetModel synthetic_blr_nonconjugate(std::size_t n, std::size_t p,
                                       dist::Rng& rng) {
  return blr_nonconjugate(synthetic_regression(n, p, rng));
}

EightSchoolsData parse_eight_schools_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EightSchoolsData d;
    d.y = j.at("y").get<std::vector<double>>();
    d.sigma = j.at("sigma").get<std::vector<double>>();
    if (d.y.size() != d.sigma.size() || d.y.empty()) {
      throw UsageError("eight-schools data: y and sigma must be non-empty and equal length");
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("eight-schools data: ") + e.what());
  }
}

RegressionData regression_from_matrix(const Matrix& m) {
  if (m.cols() < 2) {
    throw UsageError("regression data needs covariate columns and a final outcome column");
  }
  RegressionData d{Matrix(m.rows(), m.cols() - 1), m.column(m.cols() - 1)};
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j + 1 < m.cols(); ++j) d.x(i, j) = m(i, j);
  }
  return d;
}

std::vector<std::string> target_names() {
  return {"cauchy", "aniso_product", "blr", "eight_schools",
          "normal_normal", "blr_nonconjugate", "gaussian"};
}

TargetModel target_by_name(const std::string& name) {
  if (name == "cauchy") return cauchy_target();
  if (name == "aniso_product") return aniso_product_target();
  if (name == "blr") return blr_synthetic(100, 1.5, 1.0, 2.0, 2.0, 1).target;
  if (name == "eight_schools") return eight_schools(rubin_eight_schools());
  if (name == "normal_normal") {
    dist::Rng rng(7);
    std::vector<double> y(20);
    for (double& v : y) v = 2.0 + rng.normal();
    return normal_normal(y, 1.0, 0.0, 10.0);
  }
  if (name == "blr_nonconjugate") {
    dist::Rng rng(11);
    return synthetic_blr_nonconjugate(500, 8, rng);
  }
  if (name == "gaussian") return gaussian_target(3.0, 2.0);
  std::string valid;
  for (const auto& n : target_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw UsageError("unknown target '" + name + "' (valid: " + valid + ")");
}

}  // namespace ataflow::targets
