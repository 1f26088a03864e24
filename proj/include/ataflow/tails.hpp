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

#ifndef ATAFLOW_TAILS_HPP
#define ATAFLOW_TAILS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ataflow/matrix.hpp"

#include "json.hpp"

namespace ataflow::tails {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// floor(sqrt(n)), at least 2.
std::size_t default_k(std::size_t n);

// alpha = k / sum_{i=1..k} log(x_(n-i+1) / x_(n-k)) over the positive part.
// Throws InsufficientDataError with fewer than k + 1 positive samples.
double hill_estimator(std::span<const double> samples, std::size_t k);
double hill_estimator(std::span<const double> samples);

// Ordinary least squares y = a + b x with its coefficient of determination.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

enum class TailFamily { kExponential, kLogarithmic, kUndecided };
std::string to_string(TailFamily family);

/**
 * Tail class of a univariate sample, from the top 20% of the normalized
 * magnitudes (the 10 largest dropped) against the empirical survival S.
 * Positive samples are normalized as x / median, others as
 * |x - median| / MAD.
 *
 * The family is decided by comparing two straight-line fits of
 * log(-log S): against log x (exponential-type) and against log log x
 * (logarithmic-type). p and alpha then come from fitting
 * log S = c - alpha g_p(x) with g_p(x) = x^p or (log x)^p.
 */
struct TailClassVerdict {
  TailFamily family = TailFamily::kUndecided;
  double p_hat = 0.0;
  double alpha_hat = 0.0;
  double r2_exponential = 0.0;
  double r2_logarithmic = 0.0;
};

struct ClassifyOptions {
  double window_fraction = 0.2;
  std::size_t drop_top = 10;
  double min_r2 = 0.95;
  double min_gap = 0.005;
};

TailClassVerdict classify_tail(std::span<const double> samples,
                               const ClassifyOptions& options = {});

// Thresholds deciding when a directional estimate is reported as finite.
struct ScreenOptions {
  double min_loglog_r2 = 0.98;     // over the top k points
  double family_window = 0.01;     // fraction of n for the reported family gap
  std::size_t family_drop = 3;
  double max_finite_alpha = 6.0;   // larger Hill estimates read as light tails
};

struct DirectionalEstimate {
  double alpha_hat = kInfinity;
  double hill = 0.0;           // raw Hill value before screening
  double loglog_r2 = 0.0;
  double family_gap = 0.0;     // R2(exponential) - R2(logarithmic)
};

// Hill estimate of one projection, or infinity if it fails the power-law
// screen.
DirectionalEstimate screened_alpha(std::span<const double> projection,
                                   std::size_t k,
                                   const ScreenOptions& screen = {});

enum class Isotropy { kIsotropic, kAnisotropic, kUndecided };
std::string to_string(Isotropy verdict);

struct TailReport {
  std::size_t dim = 0;
  Matrix directions;                  // one unit vector per row
  std::vector<double> alpha_hat;      // infinity where no power law
  std::vector<DirectionalEstimate> detail;
  std::size_t k = 0;
  std::size_t n = 0;
  Isotropy isotropy = Isotropy::kUndecided;
  double spread = 0.0;                // max - min over finite estimates
  double null_quantile = 0.0;         // simulated 95% spread under isotropy
  bool finite_mismatch = false;       // some directions finite, some not
  double raw_spread = 0.0;            // max - min raw Hill, set on a mismatch
  double raw_null_quantile = 0.0;     // null spread at the median raw Hill
  double spread_threshold = 0.5;
  double null_level = 0.05;
};

// 64 equiangular directions for d = 2; otherwise the 2d signed axes plus
// 128 seeded uniform directions.
Matrix default_directions(std::size_t d, std::uint64_t seed = 0);

// Hill estimates of <v, x - median(x)> per direction v.
// Anisotropic when the finite estimates spread more than spread_threshold
// and the simulated null quantile, or when some directions are finite and
// others not and the raw Hill values spread beyond both bounds.
TailReport tail_parameter_function(const Matrix& samples,
                                   const Matrix& directions, std::size_t k = 0,
                                   const ScreenOptions& screen = {});

// 95% quantile of the spread of m Hill estimates that share the index alpha,
// simulated as alpha k / Gamma(k, 1) with a fixed seed.
double isotropic_spread_quantile(std::size_t m, std::size_t k, double alpha,
                                 double level = 0.95, std::size_t reps = 2000);

nlohmann::json to_json(const TailReport& report);
nlohmann::json to_json(const TailClassVerdict& verdict);
// "direction,alpha_hat" rows; the direction column is the angle for d = 2
// and the row index otherwise.
std::string to_csv(const TailReport& report);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Kolmogorov survival function P(K > lambda).
double kolmogorov_survival(double lambda);
KsResult ks_test(std::span<const double> samples,
                 const std::function<double(double)>& cdf);

struct ClosureCheck {
  std::string name;
  bool passed = false;
  std::string detail;
  double value = 0.0;
};

struct ClosureReport {
  std::vector<ClosureCheck> checks;
  bool all_passed() const;
};

// The fixed battery (a)-(e) on n draws per check.
ClosureReport closure_checks(std::uint64_t seed, std::size_t n = 1000000);
nlohmann::json to_json(const ClosureReport& report);

}  // namespace ataflow::tails

#endif  // ATAFLOW_TAILS_HPP
