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

#ifndef ATAFLOW_DISTRIBUTIONS_HPP
#define ATAFLOW_DISTRIBUTIONS_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "ataflow/autodiff.hpp"
#include "ataflow/errors.hpp"
#include "ataflow/special.hpp"

namespace ataflow::dist {

// Deterministic random stream. Uniforms take the top 53 bits of a 64-bit
// Mersenne Twister draw, so a seed fixes the stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  // Standard normal by the Box-Muller transform; draws come in pairs.
  double normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

double gaussian_sample(Rng& rng);

template <class T>
T normal_log_prob(const T& x) {
  return -0.5 * (x * x) - special::kLogSqrt2Pi;
}

inline void check_dof(double nu) {
  if (!(nu > 0.0)) {
    throw DomainError("StudentT degrees of freedom must be positive, got " +
                      std::to_string(nu));
  }
}

// StudentT(nu) log density, differentiable in both x and nu.
template <class T>
  requires(!std::is_same_v<T, double>)
T studentt_log_prob(const T& x, const T& nu) {
  check_dof(ad::value_of(nu));
  const T half_nu1 = 0.5 * (nu + 1.0);
  return ad::lgamma(half_nu1) - ad::lgamma(0.5 * nu) -
         0.5 * ad::log(nu * special::kPi) -
         half_nu1 * ad::log(1.0 + x * x / nu);
}

// Same density with a constant nu.
template <class T>
T studentt_log_prob(const T& x, double nu) {
  check_dof(nu);
  const double half_nu1 = 0.5 * (nu + 1.0);
  const double norm = special::lgamma(half_nu1) - special::lgamma(0.5 * nu) -
                      0.5 * std::log(nu * special::kPi);
  return norm - half_nu1 * ad::log(1.0 + x * x / nu);
}

double studentt_pdf(double x, double nu);
// P(T <= x); regularized incomplete beta on the side that keeps precision.
double studentt_cdf(double x, double nu);
// P(T > x), accurate far into the upper tail.
double studentt_survival(double x, double nu);
// log P(T > e^t), finite even where x^2 overflows.
double studentt_log_survival_at_log(double t, double nu);
// Inverse CDF by safeguarded Newton iteration on log-survival in log x,
// converged to 1e-12 relative.
double studentt_quantile(double u, double nu);

// Implicit reparameterization dx/dnu = -(dF/dnu)(x) / pdf(x), with dF/dnu by
// a central difference of step 1e-4 * max(1, nu).
double studentt_dx_dnu(double x, double nu);

struct PathwiseDraw {
  double value = 0.0;
  double dvalue_dnu = 0.0;
};

PathwiseDraw studentt_from_uniform(double u, double nu);
PathwiseDraw studentt_sample(double nu, Rng& rng);

// Taped draw: a node depending on nu through the implicit derivative.
ad::Var studentt_from_uniform(double u, const ad::Var& nu);
inline double studentt_value_from_uniform(double u, double nu) {
  return studentt_quantile(u, nu);
}

double normal_cdf(double x);

inline constexpr double kDefaultNuFloor = 0.1;

// nu = floor + softplus(raw).
template <class T>
T nu_from_raw(const T& raw, double floor) {
  return floor + ad::softplus(raw);
}
double raw_from_nu(double nu, double floor);

// Unconstrained tail parameters; a length-1 vector broadcasts across
// coordinates.
struct TailParams {
  std::vector<double> raw;
  double floor = kDefaultNuFloor;

  double nu(std::size_t i) const {
    return nu_from_raw(raw.size() == 1 ? raw[0] : raw.at(i), floor);
  }
};

enum class BaseKind { kGaussian, kStudentTShared, kStudentTPerDim };

std::string to_string(BaseKind kind);

// Product base measure: N(0, I), prod StudentT(nu) or prod StudentT(nu_i).
// The tail parameters themselves live in the owner's parameter vector; the
// methods here take them as a span of raw values.
class BaseDistribution {
 public:
  BaseDistribution(BaseKind kind, std::size_t dim,
                   double floor = kDefaultNuFloor);

  BaseKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  double floor() const noexcept { return floor_; }
  std::size_t num_tail_params() const noexcept;

  // Per-coordinate degrees of freedom (empty for the Gaussian base).
  template <class T>
  std::vector<T> nu(std::span<const T> raw) const {
    std::vector<T> out;
    if (kind_ == BaseKind::kGaussian) return out;
    if (raw.size() != num_tail_params()) {
      throw UsageError("tail parameter count mismatch");
    }
    out.reserve(dim_);
    if (kind_ == BaseKind::kStudentTShared) {
      const T shared = nu_from_raw(raw[0], floor_);
      out.assign(dim_, shared);
    } else {
      for (std::size_t i = 0; i < dim_; ++i) {
        out.push_back(nu_from_raw(raw[i], floor_));
      }
    }
    return out;
  }

  template <class T>
  T log_prob(std::span<const T> nu, std::span<const T> z) const {
    if (z.size() != dim_) throw UsageError("base log_prob: dimension mismatch");
    T acc = kind_ == BaseKind::kGaussian ? normal_log_prob(z[0])
                                         : studentt_log_prob(z[0], nu[0]);
    for (std::size_t i = 1; i < dim_; ++i) {
      acc += kind_ == BaseKind::kGaussian ? normal_log_prob(z[i])
                                          : studentt_log_prob(z[i], nu[i]);
    }
    return acc;
  }

  // One noise variate for a coordinate: a standard normal for the Gaussian
  // base, a uniform for the StudentT bases (inverse-CDF path).
  double draw_noise(Rng& rng) const {
    return kind_ == BaseKind::kGaussian ? rng.normal() : rng.uniform();
  }

  // Maps a noise variate to a base draw for coordinate i.
  double from_noise(std::span<const double> nu, std::size_t i,
                    double noise) const {
    return kind_ == BaseKind::kGaussian ? noise
                                        : studentt_quantile(noise, nu[i]);
  }
  ad::Var from_noise(std::span<const ad::Var> nu, std::size_t i, double noise,
                     ad::Tape& tape) const {
    return kind_ == BaseKind::kGaussian ? ad::variable(tape, noise)
                                        : studentt_from_uniform(noise, nu[i]);
  }

 private:
  BaseKind kind_;
  std::size_t dim_;
  double floor_;
};

}  // namespace ataflow::dist

#endif  // ATAFLOW_DISTRIBUTIONS_HPP
