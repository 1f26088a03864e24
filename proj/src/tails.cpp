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

#include "ataflow/tails.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "ataflow/distributions.hpp"
#include "ataflow/errors.hpp"
#include "ataflow/flows.hpp"
#include "ataflow/special.hpp"

namespace ataflow::tails {

std::size_t default_k(std::size_t n) {
  return std::max<std::size_t>(
      2, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n)))));
}

namespace {

// The m largest positive values, sorted in decreasing order.
std::vector<double> top_positive(std::span<const double> samples, std::size_t m) {
  std::vector<double> pos;
  pos.reserve(samples.size() / 2 + 1);
  for (double v : samples) {
    if (v > 0.0) pos.push_back(v);
  }
  m = std::min(m, pos.size());
  std::partial_sort(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(m),
                    pos.end(), std::greater<>());
  pos.resize(m);
  return pos;
}

double hill_sorted(std::span<const double> desc, std::size_t k) {
  const double base = std::log(desc[k]);
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += std::log(desc[i]) - base;
  return static_cast<double>(k) / acc;
}

struct FamilyFit {
  double r2_exp = -1.0;
  double r2_log = -1.0;
};

// log(-log S) against log x and against log log x on desc[drop, m).
FamilyFit family_fits(std::span<const double> desc, std::size_t n,
                      std::size_t drop, std::size_t m) {
  FamilyFit out;
  std::vector<double> lx, w, llx, wl;
  for (std::size_t i = drop; i < m && i < desc.size(); ++i) {
    const double s = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double wi = std::log(-std::log(s));
    lx.push_back(std::log(desc[i]));
    w.push_back(wi);
    if (desc[i] > 1.0) {
      llx.push_back(std::log(lx.back()));
      wl.push_back(wi);
    }
  }
  if (lx.size() >= 5) out.r2_exp = fit_line(lx, w).r2;
  if (llx.size() >= 5) out.r2_log = fit_line(llx, wl).r2;
  return out;
}

struct PowerFit {
  double p = 0.0;
  double alpha = 0.0;
  double r2 = -1.0;
};

// log S = c - alpha g_p(x) with g_p = exp(p * base), base = log x or log log x.
PowerFit fit_power(std::span<const double> base, std::span<const double> log_s) {
  std::vector<double> g(base.size());
  auto eval = [&](double p) {
    for (std::size_t i = 0; i < base.size(); ++i) g[i] = std::exp(p * base[i]);
    const LineFit f = fit_line(g, log_s);
    return PowerFit{p, -f.slope, f.r2};
  };
  PowerFit best;
  for (double p = 0.25; p <= 4.0 + 1e-9; p += 0.05) {
    const PowerFit f = eval(p);
    if (f.r2 > best.r2) best = f;
  }
  // Golden-section refinement around the best grid point.
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = std::max(0.2, best.p - 0.05);
  double hi = best.p + 0.05;
  double x1 = hi - phi * (hi - lo);
  double x2 = lo + phi * (hi - lo);
  PowerFit f1 = eval(x1), f2 = eval(x2);
  for (int iter = 0; iter < 30; ++iter) {
    if (f1.r2 > f2.r2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = eval(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = eval(x2);
    }
  }
  const PowerFit refined = f1.r2 > f2.r2 ? f1 : f2;
  return refined.r2 > best.r2 ? refined : best;
}

}  // namespace

double hill_estimator(std::span<const double> samples, std::size_t k) {
  if (k < 2) throw UsageError("hill_estimator needs k >= 2");
  if (k >= samples.size()) throw UsageError("hill_estimator needs k < n");
  const std::vector<double> desc = top_positive(samples, k + 1);
  if (desc.size() < k + 1) {
    throw InsufficientDataError("hill_estimator: fewer than k + 1 positive samples");
  }
  return hill_sorted(desc, k);
}

double hill_estimator(std::span<const double> samples) {
  return hill_estimator(samples, default_k(samples.size()));
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw UsageError("fit_line needs >= 2 paired points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 0.0;
  return f;
}

std::string to_string(TailFamily family) {
  switch (family) {
    case TailFamily::kExponential: return "exponential-type";
    case TailFamily::kLogarithmic: return "logarithmic-type";
    case TailFamily::kUndecided: return "undecided";
  }
  return "?";
}

TailClassVerdict classify_tail(std::span<const double> samples,
                               const ClassifyOptions& options) {
  const std::size_t n = samples.size();
  if (n < 1000) throw InsufficientDataError("classify_tail needs at least 1000 samples");
  const std::size_t m = static_cast<std::size_t>(options.window_fraction * n);
  // Location and scale are normalized away because the logarithmic fit is
  // not scale-free: positive samples are divided by their median, others
  // are centered at the median and divided by the median absolute deviation.
  std::vector<double> mags(samples.begin(), samples.end());
  const auto mid = mags.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(mags.begin(), mid, mags.end());
  const double median = *mid;
  const bool positive = *std::min_element(samples.begin(), samples.end()) > 0.0;
  if (positive) {
    for (std::size_t i = 0; i < n; ++i) mags[i] = samples[i] / median;
  } else {
    for (std::size_t i = 0; i < n; ++i) mags[i] = std::abs(samples[i] - median);
    std::vector<double> dev = mags;
    std::nth_element(dev.begin(), dev.begin() + static_cast<std::ptrdiff_t>(n / 2), dev.end());
    const double mad = dev[n / 2];
    if (mad > 0.0) {
      for (double& m : mags) m /= mad;
    }
  }
  std::partial_sort(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(m),
                    mags.end(), std::greater<>());
  mags.resize(m);
  while (!mags.empty() && !(mags.back() > 0.0)) mags.pop_back();
  if (mags.size() <= options.drop_top + 5) {
    throw InsufficientDataError("classify_tail: too few nonzero samples in the tail window");
  }
  const std::span<const double> desc(mags);

  TailClassVerdict v;
  const FamilyFit fam = family_fits(desc, n, options.drop_top, desc.size());
  v.r2_exponential = fam.r2_exp;
  v.r2_logarithmic = fam.r2_log;
  const bool weak = fam.r2_exp < options.min_r2 && fam.r2_log < options.min_r2;
  const bool close = std::abs(fam.r2_exp - fam.r2_log) < options.min_gap;
  if (weak || close) {
    v.family = TailFamily::kUndecided;
  } else {
    v.family = fam.r2_exp > fam.r2_log ? TailFamily::kExponential
                                       : TailFamily::kLogarithmic;
  }

  const bool log_type = v.family == TailFamily::kLogarithmic ||
                        (v.family == TailFamily::kUndecided && fam.r2_log > fam.r2_exp);
  std::vector<double> base, log_s;
  for (std::size_t i = options.drop_top; i < desc.size(); ++i) {
    if (log_type && !(desc[i] > 1.0)) break;
    const double lx = std::log(desc[i]);
    base.push_back(log_type ? std::log(lx) : lx);
    log_s.push_back(std::log((static_cast<double>(i) + 0.5) / static_cast<double>(n)));
  }
  if (base.size() >= 5) {
    const PowerFit pf = fit_power(base, log_s);
    v.p_hat = pf.p;
    v.alpha_hat = pf.alpha;
  }
  return v;
}

DirectionalEstimate screened_alpha(std::span<const double> projection,
                                   std::size_t k, const ScreenOptions& screen) {
  const std::size_t n = projection.size();
  if (k < 2 || k >= n) throw UsageError("screened_alpha needs 2 <= k < n");
  const std::size_t window = std::max<std::size_t>(
      k + 1, static_cast<std::size_t>(screen.family_window * static_cast<double>(n)));
  const std::vector<double> desc = top_positive(projection, window);
  if (desc.size() < k + 1) {
    throw InsufficientDataError("directional estimate: fewer than k + 1 positive projections");
  }
  DirectionalEstimate e;
  e.hill = hill_sorted(desc, k);
  std::vector<double> lx(k), ls(k);
  for (std::size_t i = 0; i < k; ++i) {
    lx[i] = std::log(desc[i]);
    ls[i] = std::log((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  }
  e.loglog_r2 = fit_line(lx, ls).r2;
  const FamilyFit fam = family_fits(desc, n, screen.family_drop, desc.size());
  e.family_gap = fam.r2_exp - fam.r2_log;
  const bool power_law =
      e.loglog_r2 >= screen.min_loglog_r2 && e.hill <= screen.max_finite_alpha;
  e.alpha_hat = power_law ? e.hill : kInfinity;
  return e;
}

std::string to_string(Isotropy verdict) {
  switch (verdict) {
    case Isotropy::kIsotropic: return "isotropic";
    case Isotropy::kAnisotropic: return "anisotropic";
    case Isotropy::kUndecided: return "undecided";
  }
  return "?";
}

Matrix default_directions(std::size_t d, std::uint64_t seed) {
  if (d == 0) throw UsageError("directions need d >= 1");
  if (d == 1) {
    Matrix m(2, 1);
    m(0, 0) = 1.0;
    m(1, 0) = -1.0;
    return m;
  }
  if (d == 2) {
    Matrix m(64, 2);
    for (std::size_t i = 0; i < 64; ++i) {
      const double t = 2.0 * special::kPi * static_cast<double>(i) / 64.0;
      m(i, 0) = std::cos(t);
      m(i, 1) = std::sin(t);
    }
    // Exact axes.
    m(16, 0) = 0.0;
    m(32, 1) = 0.0;
    m(48, 0) = 0.0;
    return m;
  }
  Matrix m(2 * d + 128, d);
  for (std::size_t i = 0; i < d; ++i) {
    m(2 * i, i) = 1.0;
    m(2 * i + 1, i) = -1.0;
  }
  dist::Rng rng(seed);
  for (std::size_t r = 2 * d; r < m.rows(); ++r) {
    double norm = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      m(r, c) = rng.normal();
      norm += m(r, c) * m(r, c);
    }
    norm = std::sqrt(norm);
    for (std::size_t c = 0; c < d; ++c) m(r, c) /= norm;
  }
  return m;
}

double isotropic_spread_quantile(std::size_t m, std::size_t k, double alpha,
                                 double level, std::size_t reps) {
  if (m < 2) return 0.0;
  std::mt19937_64 engine(0x5eed);
  std::gamma_distribution<double> gamma(static_cast<double>(k), 1.0);
  std::vector<double> spreads(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    double lo = kInfinity, hi = -kInfinity;
    for (std::size_t j = 0; j < m; ++j) {
      const double a = alpha * static_cast<double>(k) / gamma(engine);
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
    spreads[r] = hi - lo;
  }
  std::sort(spreads.begin(), spreads.end());
  const std::size_t idx = std::min(
      reps - 1, static_cast<std::size_t>(std::ceil(level * static_cast<double>(reps))) - 1);
  return spreads[idx];
}

TailReport tail_parameter_function(const Matrix& samples,
                                   const Matrix& directions, std::size_t k,
                                   const ScreenOptions& screen) {
  const std::size_t n = samples.rows();
  const std::size_t d = samples.cols();
  if (directions.cols() != d) throw UsageError("direction dimension mismatch");
  if (directions.rows() < 2) throw UsageError("need at least 2 directions");
  if (n == 0) throw InsufficientDataError("tail parameter function of no samples");
  for (std::size_t r = 0; r < directions.rows(); ++r) {
    double norm = 0.0;
    for (std::size_t c = 0; c < d; ++c) norm += directions(r, c) * directions(r, c);
    if (std::abs(std::sqrt(norm) - 1.0) > 1e-12) {
      throw UsageError("direction " + std::to_string(r) + " is not a unit vector");
    }
  }
  TailReport rep;
  rep.dim = d;
  rep.n = n;
  rep.k = k == 0 ? default_k(n) : k;
  rep.directions = directions;
  std::vector<double> center(d), proj(n);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t i = 0; i < n; ++i) proj[i] = samples(i, c);
    std::nth_element(proj.begin(), proj.begin() + n / 2, proj.end());
    center[c] = proj[n / 2];
  }
  for (std::size_t r = 0; r < directions.rows(); ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += (samples(i, c) - center[c]) * directions(r, c);
      proj[i] = acc;
    }
    rep.detail.push_back(screened_alpha(proj, rep.k, screen));
    rep.alpha_hat.push_back(rep.detail.back().alpha_hat);
  }

  std::vector<double> finite, raw;
  for (std::size_t r = 0; r < rep.alpha_hat.size(); ++r) {
    if (std::isfinite(rep.alpha_hat[r])) finite.push_back(rep.alpha_hat[r]);
    raw.push_back(rep.detail[r].hill);
  }
  rep.finite_mismatch = !finite.empty() && finite.size() < rep.alpha_hat.size();
  if (!finite.empty()) {
    const auto [lo, hi] = std::minmax_element(finite.begin(), finite.end());
    rep.spread = *hi - *lo;
    std::vector<double> sorted = finite;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];
    rep.null_quantile =
        isotropic_spread_quantile(finite.size(), rep.k, median, 1.0 - rep.null_level);
  }
  if (rep.finite_mismatch) {
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    rep.raw_spread = *hi - *lo;
    std::nth_element(raw.begin(), raw.begin() + raw.size() / 2, raw.end());
    rep.raw_null_quantile = isotropic_spread_quantile(raw.size(), rep.k, raw[raw.size() / 2],
                                                      1.0 - rep.null_level);
  }
  const bool decisive_mismatch = rep.finite_mismatch &&
                                 rep.raw_spread > rep.spread_threshold &&
                                 rep.raw_spread > rep.raw_null_quantile;
  const bool wide = rep.spread > rep.spread_threshold;
  const bool significant = rep.spread > rep.null_quantile;
  if (decisive_mismatch || (wide && significant)) {
    rep.isotropy = Isotropy::kAnisotropic;
  } else if (significant && finite.size() >= 2 &&
             rep.spread > 0.5 * rep.spread_threshold) {
    rep.isotropy = Isotropy::kUndecided;
  } else {
    rep.isotropy = Isotropy::kIsotropic;
  }
  return rep;
}

namespace {

nlohmann::json alpha_json(double a) {
  return std::isfinite(a) ? nlohmann::json(a) : nlohmann::json("inf");
}

std::string alpha_text(double a) {
  if (!std::isfinite(a)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", a);
  return buf;
}

}  // namespace

nlohmann::json to_json(const TailReport& report) {
  nlohmann::json j;
  j["dim"] = report.dim;
  j["n"] = report.n;
  j["k"] = report.k;
  j["isotropy"] = to_string(report.isotropy);
  j["spread"] = report.spread;
  j["null_quantile"] = report.null_quantile;
  j["finite_mismatch"] = report.finite_mismatch;
  j["raw_spread"] = report.raw_spread;
  j["raw_null_quantile"] = report.raw_null_quantile;
  j["spread_threshold"] = report.spread_threshold;
  j["null_level"] = report.null_level;
  nlohmann::json dirs = nlohmann::json::array();
  for (std::size_t r = 0; r < report.directions.rows(); ++r) {
    const auto row = report.directions.row(r);
    dirs.push_back({{"direction", std::vector<double>(row.begin(), row.end())},
                    {"alpha_hat", alpha_json(report.alpha_hat[r])},
                    {"hill", report.detail[r].hill},
                    {"loglog_r2", report.detail[r].loglog_r2},
                    {"family_gap", report.detail[r].family_gap}});
  }
  j["directions"] = dirs;
  return j;
}

nlohmann::json to_json(const TailClassVerdict& v) {
  return {{"family", to_string(v.family)},
          {"p_hat", v.p_hat},
          {"alpha_hat", v.alpha_hat},
          {"r2_exponential", v.r2_exponential},
          {"r2_logarithmic", v.r2_logarithmic}};
}

std::string to_csv(const TailReport& report) {
  std::ostringstream out;
  out << "direction,alpha_hat\n";
  for (std::size_t r = 0; r < report.directions.rows(); ++r) {
    if (report.dim == 2) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f",
                    std::atan2(report.directions(r, 1), report.directions(r, 0)));
      out << buf;
    } else {
      out << r;
    }
    out << ',' << alpha_text(report.alpha_hat[r]) << '\n';
  }
  return out.str();
}

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // Jacobi theta form, fast for small lambda.
    const double c = special::kPi * special::kPi / (8.0 * lambda * lambda);
    double acc = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double m = 2.0 * k - 1.0;
      acc += std::exp(-m * m * c);
    }
    return std::clamp(1.0 - std::sqrt(2.0 * special::kPi) / lambda * acc, 0.0, 1.0);
  }
  double acc = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    acc += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * acc, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> samples,
                 const std::function<double(double)>& cdf) {
  const std::size_t n = samples.size();
  if (n == 0) throw UsageError("ks_test needs at least one sample");
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / nd - f, f - static_cast<double>(i) / nd});
  }
  return KsResult{d, kolmogorov_survival(std::sqrt(nd) * d)};
}

bool ClosureReport::all_passed() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(),
                     [](const ClosureCheck& c) { return c.passed; });
}

namespace {

// Random clamped two-layer IAF on d = 2. Output weights are shrunk so the
// clamp rarely saturates; saturated scale mixtures bias Hill at k = sqrt(n).
constexpr double kClosureOutputScale = 0.05;

flows::FlowStack random_stack(dist::BaseKind base, double nu, std::uint64_t seed) {
  flows::FlowOptions opts;
  opts.hidden = 16;
  flows::FlowStack stack(base, {flows::SupportKind::kIdentity, flows::SupportKind::kIdentity},
                         opts, seed);
  dist::Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (const auto& layer : stack.layers()) {
    layer.conditioner().initialize(stack.params().values(), rng, false);
  }
  for (const auto& block : stack.params().blocks()) {
    const bool output = block.name.find("mu") != std::string::npos ||
                        block.name.find("lambda") != std::string::npos;
    if (!output) continue;
    for (double& v : stack.params().block_values(block.name)) v *= kClosureOutputScale;
  }
  if (stack.nu_count() > 0) stack.set_nu(nu);
  return stack;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

ClosureReport closure_checks(std::uint64_t seed, std::size_t n) {
  ClosureReport report;
  dist::Rng rng(seed);

  {
    ClosureCheck c{"a_gaussian_flow_exponential_type", true, "", 0.0};
    const auto stack = random_stack(dist::BaseKind::kGaussian, 0.0, seed + 1);
    const auto draws = stack.sample(n, rng).values;
    for (std::size_t j = 0; j < 2; ++j) {
      const auto v = classify_tail(draws.column(j));
      c.passed = c.passed && v.family == TailFamily::kExponential;
      c.detail += "x" + std::to_string(j) + ": " + to_string(v.family) + " p=" + fmt(v.p_hat) + "; ";
      c.value = v.p_hat;
    }
    report.checks.push_back(c);
  }
  {
    ClosureCheck c{"b_cauchy_flow_logarithmic_type", true, "", 0.0};
    const auto stack = random_stack(dist::BaseKind::kStudentTShared, 1.0, seed + 1);
    const auto draws = stack.sample(n, rng).values;
    for (std::size_t j = 0; j < 2; ++j) {
      const auto col = draws.column(j);
      const auto v = classify_tail(col);
      std::vector<double> mags(col.size());
      for (std::size_t i = 0; i < col.size(); ++i) mags[i] = std::abs(col[i]);
      const double a = hill_estimator(mags);
      c.passed = c.passed && v.family == TailFamily::kLogarithmic && a >= 0.8 && a <= 1.2;
      c.detail += "x" + std::to_string(j) + ": " + to_string(v.family) + " hill=" + fmt(a) + "; ";
      c.value = a;
    }
    report.checks.push_back(c);
  }
  {
    ClosureCheck c{"c_gaussian_monomials_not_logarithmic", true, "", 0.0};
    std::vector<double> z(n);
    for (double& v : z) v = rng.normal();
    for (int k : {2, 3, 5}) {
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = std::pow(z[i], k);
      const auto v = classify_tail(y);
      c.passed = c.passed && v.family != TailFamily::kLogarithmic;
      c.detail += "k=" + std::to_string(k) + ": " + to_string(v.family) + " p=" + fmt(v.p_hat) + "; ";
    }
    report.checks.push_back(c);
  }
  {
    ClosureCheck c{"d_isotropic_studentt_flow_spread", false, "", 0.0};
    const auto stack = random_stack(dist::BaseKind::kStudentTShared, 1.5, seed + 2);
    const auto draws = stack.sample(n, rng).values;
    Matrix dirs(16, 2);
    for (std::size_t i = 0; i < 16; ++i) {
      const double t = 2.0 * special::kPi * static_cast<double>(i) / 16.0;
      dirs(i, 0) = std::cos(t);
      dirs(i, 1) = std::sin(t);
    }
    dirs(4, 0) = 0.0;
    dirs(8, 1) = 0.0;
    dirs(12, 0) = 0.0;
    const auto rep = tail_parameter_function(draws, dirs);
    c.value = rep.spread;
    c.passed = !rep.finite_mismatch && std::isfinite(rep.alpha_hat[0]) && rep.spread < 0.3;
    c.detail = "spread=" + fmt(rep.spread) + " verdict=" + to_string(rep.isotropy);
    report.checks.push_back(c);
  }
  {
    ClosureCheck c{"e_sum_rule_min_index", false, "", 0.0};
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = dist::studentt_quantile(rng.uniform(), 1.0) +
             dist::studentt_quantile(rng.uniform(), 2.0);
    }
    const double a = hill_estimator(s);
    c.value = a;
    c.passed = a >= 0.8 && a <= 1.2;
    c.detail = "hill=" + fmt(a);
    report.checks.push_back(c);
  }
  return report;
}

nlohmann::json to_json(const ClosureReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value},
                      {"detail", c.detail}});
  }
  return {{"all_passed", report.all_passed()}, {"checks", checks}};
}

}  // namespace ataflow::tails
