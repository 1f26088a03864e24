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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli.hpp"
#include "ataflow/autodiff.hpp"
#include "ataflow/distributions.hpp"
#include "ataflow/flows.hpp"
#include "ataflow/tails.hpp"
#include "ataflow/targets.hpp"
#include "ataflow/vi.hpp"

namespace {

using namespace ataflow;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / ("ataflow_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::vector<nlohmann::json>& summaries() {
  static std::vector<nlohmann::json> all;
  return all;
}

Verdict gradients() {
  const targets::TargetModel t = targets::aniso_product_target();
  flows::FlowOptions options;
  options.hidden = 8;
  flows::FlowStack stack = vi::make_family(vi::FamilyKind::kAtaf, t, options, 5);
  dist::Rng init(17);
  for (const auto& b : stack.params().blocks()) {
    if (b.name.find("mu") == std::string::npos && b.name.find("lambda") == std::string::npos) {
      continue;
    }
    for (double& v : stack.params().block_values(b.name)) v = 0.2 * (2.0 * init.uniform() - 1.0);
  }
  stack.params().values()[stack.nu_offset()] += 0.4;
  dist::Rng rng(2);
  const vi::NoiseBatch batch = vi::draw_noise(stack, 64, rng);
  std::vector<double> p(stack.params().values().begin(), stack.params().values().end());
  const vi::ElboGradient g = vi::elbo_and_gradient(stack, p, t, batch);
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::fabs(p[i]));
    const double keep = p[i];
    p[i] = keep + h;
    const double up = vi::elbo_value(stack, p, t, batch);
    p[i] = keep - h;
    const double down = vi::elbo_value(stack, p, t, batch);
    p[i] = keep;
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::fabs(fd - g.grad[i]) / std::max(1.0, std::fabs(fd)));
  }

  using ad::Var;
  const std::vector<std::pair<ad::ScalarFn, std::vector<double>>> primitives = {
      {[](std::span<const Var> v) { return v[0] * v[1] / (v[0] + 2.0); }, {0.3, -1.2}},
      {[](std::span<const Var> v) { return ad::exp(v[0]) + ad::log(v[1]); }, {0.7, 1.9}},
      {[](std::span<const Var> v) { return ad::tanh(v[0]) * ad::elu(v[1]); }, {0.7, -0.4}},
      {[](std::span<const Var> v) { return ad::softplus(v[0]) + ad::sqrt(v[1]); }, {-2.5, 2.5}},
      {[](std::span<const Var> v) { return ad::lgamma(v[0]) + ad::atan(v[1]); }, {0.3, 1.9}},
      {[](std::span<const Var> v) { return dist::studentt_log_prob(v[0], v[1]); }, {0.7, 2.0}},
  };
  double prim = 0.0;
  for (const auto& [fn, point] : primitives) {
    prim = std::max(prim, ad::check_gradient(fn, point).max_rel_error);
  }
  return {g.used == 64 && worst < 1e-3 && prim < 1e-4,
          fmt("end-to-end max rel err %.2e over %.0f params, primitives %.2e", worst,
              static_cast<double>(p.size()), prim)};
}

Verdict pushforward() {
  flows::FlowOptions options;
  options.layers = 1;
  flows::FlowStack affine(dist::BaseKind::kGaussian,
                          {flows::SupportKind::kIdentity, flows::SupportKind::kIdentity}, options, 3);
  const double mu[2] = {1.5, -0.7};
  const double log_s[2] = {std::log(2.0), -0.3};
  for (std::size_t j = 0; j < 2; ++j) {
    affine.params().block_values("layer0.bmu")[j] = mu[j];
    affine.params().block_values("layer0.blambda")[j] = 5.0 * std::atanh(log_s[j] / 5.0);
  }
  dist::Rng rng(8);
  double worst = 0.0;
  std::vector<double> y(2);
  for (int i = 0; i < 1000; ++i) {
    double analytic = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
      y[j] = mu[j] + 4.0 * rng.normal();
      analytic += dist::normal_log_prob((y[j] - mu[j]) / std::exp(log_s[j])) - log_s[j];
    }
    worst = std::max(worst, std::fabs(affine.log_prob(y) - analytic));
  }

  flows::FlowOptions o2;
  o2.hidden = 16;
  flows::FlowStack random(dist::BaseKind::kGaussian,
                          {flows::SupportKind::kIdentity, flows::SupportKind::kIdentity}, o2, 31);
  dist::Rng w(1031);
  for (const auto& layer : random.layers()) {
    layer.conditioner().initialize(random.params().values(), w, false);
  }
  for (std::size_t i = 0; i < random.nu_offset(); ++i) random.params().values()[i] *= 1.5;
  const double h = 0.05;
  const int n = static_cast<int>(40.0 / h);
  double mass = 0.0;
  for (int i = 0; i <= n; ++i) {
    y[0] = -20.0 + i * h;
    const double wi = (i == 0 || i == n) ? 0.5 : 1.0;
    for (int j = 0; j <= n; ++j) {
      y[1] = -20.0 + j * h;
      const double wj = (j == 0 || j == n) ? 0.5 : 1.0;
      mass += wi * wj * std::exp(random.log_prob(y));
    }
  }
  mass *= h * h;
  return {worst < 1e-8 && std::fabs(mass - 1.0) <= 2e-2,
          fmt("affine max abs err %.2e at 1000 points, random stack mass %.5f", worst, mass)};
}

Verdict reproduce(const std::string& name) {
  cli::ReproduceOptions o;
  o.out = scratch() / name;
  const nlohmann::json s = cli::reproduce(name, o);
  summaries().push_back(s);
  std::string detail;
  for (const auto& c : s["checks"]) {
    detail += (detail.empty() ? "" : "; ") + c["name"].get<std::string>() +
              (c["passed"].get<bool>() ? " ok" : " FAILED") +
              (c.contains("detail") ? " (" + c["detail"].get<std::string>() + ")" : "");
  }
  return {s["passed"].get<bool>(), detail};
}

Verdict calibration() {
  double worst = 0.0;
  for (double alpha : {0.5, 1.0, 2.0, 3.0}) {
    const std::size_t n = 100000;
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) {
      grid[i] = std::pow((static_cast<double>(i) + 0.5) / static_cast<double>(n), -1.0 / alpha);
    }
    worst = std::max(worst, std::fabs(tails::hill_estimator(grid) / alpha - 1.0));
  }
  int correct = 0;
  for (int rep = 0; rep < 20; ++rep) {
    std::mt19937_64 g(1000 + rep);
    std::normal_distribution<double> normal;
    std::exponential_distribution<double> expo;
    std::cauchy_distribution<double> cauchy;
    const std::size_t n = 100000;
    std::vector<double> a(n), b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = normal(g);
      b[i] = expo(g);
      c[i] = cauchy(g);
    }
    const bool ok = tails::classify_tail(a).family == tails::TailFamily::kExponential &&
                    tails::classify_tail(b).family == tails::TailFamily::kExponential &&
                    tails::classify_tail(c).family == tails::TailFamily::kLogarithmic;
    correct += ok;
  }
  return {worst < 0.03 && correct == 20,
          fmt("Hill worst rel err %.4f, classification %.0f/20 repetitions", worst, correct)};
}

Verdict determinism() {
  std::string first, second;
  for (std::string* slot : {&first, &second}) {
    const fs::path dir = scratch() / (slot == &first ? "det_a" : "det_b");
    const std::vector<std::string> args = {"ataflow", "fit", "--target", "cauchy", "--family",
                                           "ataf", "--steps", "100", "--seed", "7",
                                           "--eval-samples", "500", "--out", dir.string()};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    if (cli::run(static_cast<int>(argv.size()), argv.data(), out, err) != 0) {
      return {false, "fit failed: " + err.str()};
    }
    *slot = cli::read_file((dir / "result.json").string()) +
            cli::read_file((dir / "params.json").string()) +
            cli::read_file((dir / "trace.csv").string());
  }
  cli::ReproduceOptions o;
  o.steps = 50;
  o.eval_samples = 200;
  o.seeds = {3};
  std::string sa, sb;
  for (std::string* slot : {&sa, &sb}) {
    o.out = scratch() / (slot == &sa ? "det_ra" : "det_rb");
    cli::reproduce("normal-normal", o);
    *slot = cli::read_file((o.out / "summary.json").string());
  }
  std::size_t valid = 0;
  std::string bad;
  for (const auto& s : summaries()) {
    try {
      cli::validate_summary(s);
      ++valid;
    } catch (const std::exception& e) {
      bad += std::string(" ") + e.what();
    }
  }
  const bool presets = valid == summaries().size() && summaries().size() == 6;
  return {first == second && sa == sb && presets,
          std::string("fit artifacts ") + (first == second ? "identical" : "differ") +
              ", reproduce summary " + (sa == sb ? "identical" : "differs") +
              fmt(", %.0f/%.0f preset summaries valid", static_cast<double>(valid),
                  static_cast<double>(summaries().size())) + bad};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient suite", 30, gradients},
      {2, "pushforward exactness", 60, pushforward},
      {3, "cauchy-appB", 600, [] { return reproduce("cauchy-appB"); }},
      {4, "aniso-fig1", 600, [] { return reproduce("aniso-fig1"); }},
      {5, "blr-fig3", 600, [] { return reproduce("blr-fig3"); }},
      {6, "eight-schools", 1200, [] { return reproduce("eight-schools"); }},
      {7, "closure-battery", 300, [] { return reproduce("closure-battery"); }},
      {8, "estimator calibration", 120, calibration},
      {9, "normal-normal", 300, [] { return reproduce("normal-normal"); }},
      {10, "determinism and schema", 600, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    const bool in_time = secs < c.budget_seconds;
    const bool ok = v.passed && in_time;
    failures += !ok;
    std::printf("%s criterion %d (%s): %s [%.1f s of %.0f s]\n", ok ? "PASS" : "FAIL", c.id,
                c.name, v.detail.c_str(), secs, c.budget_seconds);
    std::fflush(stdout);
  }
  fs::remove_all(scratch());
  return failures == 0 ? 0 : 1;
}
