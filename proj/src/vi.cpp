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

#include "ataflow/vi.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace ataflow::vi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kEvalStream = 0x6a09e667f3bcc909ULL;

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kAdvi: return "advi";
    case FamilyKind::kTaf: return "taf";
    case FamilyKind::kAtaf: return "ataf";
  }
  return "?";
}

FamilyKind family_from_string(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "advi") return FamilyKind::kAdvi;
  if (lower == "taf") return FamilyKind::kTaf;
  if (lower == "ataf") return FamilyKind::kAtaf;
  throw UsageError("unknown family '" + name + "' (expected advi, taf or ataf)");
}

dist::BaseKind base_kind(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kAdvi: return dist::BaseKind::kGaussian;
    case FamilyKind::kTaf: return dist::BaseKind::kStudentTShared;
    case FamilyKind::kAtaf: return dist::BaseKind::kStudentTPerDim;
  }
  throw UsageError("unknown family");
}

flows::FlowStack make_family(FamilyKind kind, const targets::TargetModel& target,
                             const flows::FlowOptions& options,
                             std::uint64_t init_seed) {
  if (target.dim == 0) throw UsageError("target " + target.name + " has no dimensions");
  return flows::FlowStack(base_kind(kind), target.support, options, init_seed);
}

NoiseBatch draw_noise(const flows::FlowStack& stack, std::size_t n, dist::Rng& rng) {
  NoiseBatch b{Matrix(n, stack.dim())};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < stack.dim(); ++j) {
      b.noise(i, j) = stack.base().draw_noise(rng);
    }
  }
  return b;
}

ElboGradient elbo_and_gradient(const flows::FlowStack& stack,
                               std::span<const double> params,
                               const targets::TargetModel& target,
                               const NoiseBatch& batch) {
  const std::size_t d = stack.dim();
  if (batch.noise.cols() != d) throw UsageError("noise batch dimension mismatch");
  if (params.size() != stack.params().size()) throw UsageError("parameter size mismatch");
  // Reused across calls so the buffers keep their capacity.
  thread_local ad::Tape tape;
  thread_local std::vector<double> adj;
  tape.clear();
  const std::vector<ad::Var> p = ad::variables(tape, params);
  const std::span<const ad::Var> ps(p);
  const std::vector<ad::Var> nus = stack.nu<ad::Var>(ps);
  const std::span<const ad::Var> nu_span(nus);

  ElboGradient out;
  std::vector<ad::Var> terms;
  terms.reserve(batch.noise.rows());
  std::vector<ad::Var> z(d);
  for (std::size_t i = 0; i < batch.noise.rows(); ++i) {
    const ad::Tape::Mark mark = tape.mark();
    try {
      for (std::size_t j = 0; j < d; ++j) {
        z[j] = stack.base().from_noise(nu_span, j, batch.noise(i, j), tape);
      }
      flows::LayerResult<ad::Var> r =
          stack.transform<ad::Var>(ps, nu_span, std::span<const ad::Var>(z));
      terms.push_back(target.log_density_var(r.values) - r.log_det);
    } catch (const DomainError&) {
      tape.rewind(mark);
      ++out.dropped;
    } catch (const NumericError&) {
      tape.rewind(mark);
      ++out.dropped;
    }
  }
  out.used = terms.size();
  out.grad.assign(params.size(), 0.0);
  if (terms.empty()) {
    out.value = kNaN;
    return out;
  }
  const ad::Var objective = ad::sum(terms) * (1.0 / static_cast<double>(terms.size()));
  out.value = objective.value();
  tape.backward(objective.id(), adj);
  for (std::size_t k = 0; k < p.size(); ++k) out.grad[k] = adj[p[k].id()];
  return out;
}

double elbo_value(const flows::FlowStack& stack, std::span<const double> params,
                  const targets::TargetModel& target, const NoiseBatch& batch) {
  const std::size_t d = stack.dim();
  const std::vector<double> nus = stack.nu<double>(params);
  std::vector<double> z(d);
  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < batch.noise.rows(); ++i) {
    try {
      for (std::size_t j = 0; j < d; ++j) {
        z[j] = stack.base().from_noise(nus, j, batch.noise(i, j));
      }
      const flows::LayerResult<double> r = stack.transform<double>(params, nus, z);
      const double term = target.log_density(r.values) - r.log_det;
      if (!std::isfinite(term)) continue;
      acc += term;
      ++used;
    } catch (const DomainError&) {
    } catch (const NumericError&) {
    }
  }
  return used == 0 ? kNaN : acc / static_cast<double>(used);
}

std::vector<double> log_weights(const flows::FlowStack& stack,
                                const targets::TargetModel& target,
                                std::size_t n, dist::Rng& rng) {
  if (n < 2) throw UsageError("estimates need at least 2 draws");
  const std::size_t d = stack.dim();
  const std::span<const double> p = stack.params().values();
  const std::vector<double> nus = stack.nu<double>(p);
  std::vector<double> z(d);
  std::vector<double> w;
  w.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      z[j] = stack.base().from_noise(nus, j, stack.base().draw_noise(rng));
    }
    try {
      const flows::LayerResult<double> r = stack.transform<double>(p, nus, z);
      const double term = target.log_density(r.values) - r.log_det;
      if (std::isfinite(term)) w.push_back(term);
    } catch (const DomainError&) {
    } catch (const NumericError&) {
    }
  }
  if (w.empty()) {
    throw NumericError("all " + std::to_string(n) + " draws failed to evaluate on target " +
                       target.name);
  }
  return w;
}

Estimate elbo_from_log_weights(std::span<const double> w) {
  Estimate e;
  e.used = w.size();
  if (w.empty()) return Estimate{kNaN, kNaN, 0};
  const double n = static_cast<double>(w.size());
  e.mean = std::accumulate(w.begin(), w.end(), 0.0) / n;
  if (w.size() > 1) {
    double ss = 0.0;
    for (double v : w) ss += (v - e.mean) * (v - e.mean);
    e.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return e;
}

Estimate logml_from_log_weights(std::span<const double> w) {
  Estimate e;
  e.used = w.size();
  if (w.empty()) return Estimate{kNaN, kNaN, 0};
  const double n = static_cast<double>(w.size());
  const double m = *std::max_element(w.begin(), w.end());
  double s = 0.0;
  for (double v : w) s += std::exp(v - m);
  const double mean_w = s / n;
  e.mean = m + std::log(mean_w);
  if (w.size() > 1) {
    double ss = 0.0;
    for (double v : w) {
      const double dv = std::exp(v - m) - mean_w;
      ss += dv * dv;
    }
    e.std_error = std::sqrt(ss / (n - 1.0) / n) / mean_w;
  }
  return e;
}

Estimate elbo_estimate(const flows::FlowStack& stack,
                       const targets::TargetModel& target, std::size_t n,
                       dist::Rng& rng) {
  return elbo_from_log_weights(log_weights(stack, target, n, rng));
}

Estimate log_marginal_likelihood(const flows::FlowStack& stack,
                                 const targets::TargetModel& target,
                                 std::size_t n, dist::Rng& rng) {
  return logml_from_log_weights(log_weights(stack, target, n, rng));
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& config) {
  if (grads.size() != params.size()) throw UsageError("adam_step: size mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] += config.lr * mhat / (std::sqrt(vhat) + config.eps);
  }
}

double clip_global_norm(std::span<double> g, double max_norm) {
  double ss = 0.0;
  for (double v : g) ss += v * v;
  const double norm = std::sqrt(ss);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (double& v : g) v *= scale;
  }
  return norm;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
  if (elbo_samples < 1) throw UsageError("elbo samples must be at least 1");
  if (eval_samples < 2) throw UsageError("eval samples must be at least 2");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw UsageError("Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw UsageError("Adam eps must be positive");
  if (!(clip_norm > 0.0)) throw UsageError("clip norm must be positive");
  if (max_nonfinite < 1) throw UsageError("max_nonfinite must be at least 1");
}

namespace {

void load_initial(flows::FlowStack& stack, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open init snapshot " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("malformed init snapshot " + path + ": " + e.what());
  }
  const flows::FlowStack loaded = flows::restore(j.contains("params") && j["params"].contains("params")
                                                     ? j["params"]
                                                     : j);
  if (loaded.base().kind() == stack.base().kind() &&
      loaded.params().size() == stack.params().size()) {
    std::copy(loaded.params().values().begin(), loaded.params().values().end(),
              stack.params().values().begin());
    return;
  }
  stack.copy_flow_weights_from(loaded);
  const std::vector<double> nus = loaded.nu_values();
  if (!nus.empty() && stack.nu_count() > 0) stack.set_nu(nus[0]);
}

}  // namespace

TrainResult train(flows::FlowStack& stack, const targets::TargetModel& target,
                  const TrainConfig& config) {
  config.validate();
  if (target.dim != stack.dim()) throw UsageError("family and target dimensions differ");
  if (config.init_from) load_initial(stack, *config.init_from);
  const auto start = std::chrono::steady_clock::now();

  TrainResult result;
  result.seed = config.seed;
  result.trace.reserve(config.steps);
  dist::Rng rng(config.seed);
  AdamState state;
  const AdamConfig adam{config.lr, config.beta1, config.beta2, config.eps};
  std::size_t consecutive = 0;
  std::span<double> params = stack.params().values();

  for (std::size_t step = 0; step < config.steps; ++step) {
    const NoiseBatch batch = draw_noise(stack, config.elbo_samples, rng);
    ElboGradient eg;
    bool ok = true;
    try {
      eg = elbo_and_gradient(stack, params, target, batch);
      ok = eg.used > 0 && std::isfinite(eg.value) && all_finite(eg.grad);
    } catch (const NumericError&) {
      ok = false;
    }
    if (!ok) {
      ++consecutive;
      ++result.skipped_steps;
      result.trace.push_back(kNaN);
      if (consecutive >= config.max_nonfinite) {
        throw TrainingAborted("non-finite ELBO for " + std::to_string(consecutive) +
                                  " consecutive steps (last step " +
                                  std::to_string(step) + ") on target " + target.name,
                              flows::snapshot(stack));
      }
      if (config.on_step) config.on_step(step, kNaN);
      continue;
    }
    consecutive = 0;
    clip_global_norm(eg.grad, config.clip_norm);
    adam_step(params, eg.grad, state, adam);
    result.trace.push_back(eg.value);
    if (config.on_step) config.on_step(step, eg.value);
  }

  dist::Rng eval_rng(config.seed ^ kEvalStream);
  const std::vector<double> w = log_weights(stack, target, config.eval_samples, eval_rng);
  result.elbo = elbo_from_log_weights(w);
  result.log_py = logml_from_log_weights(w);
  result.nu = stack.nu_values();
  result.params = flows::snapshot(stack);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

namespace {

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json estimate_json(const Estimate& e) {
  return {{"mean", finite_or_null(e.mean)},
          {"stderr", finite_or_null(e.std_error)},
          {"used", e.used}};
}

}  // namespace

nlohmann::json to_json(const TrainResult& result, bool include_wall_time) {
  nlohmann::json trace = nlohmann::json::array();
  for (double v : result.trace) trace.push_back(finite_or_null(v));
  nlohmann::json j{{"seed", result.seed},
                   {"steps", result.trace.size()},
                   {"skipped_steps", result.skipped_steps},
                   {"elbo", estimate_json(result.elbo)},
                   {"log_py", estimate_json(result.log_py)},
                   {"nu", result.nu},
                   {"trace", trace},
                   {"params", result.params}};
  if (include_wall_time) j["wall_seconds"] = result.wall_seconds;
  return j;
}

std::string trace_csv(std::span<const double> trace) {
  std::ostringstream out;
  out << "step,elbo\n";
  char buf[40];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (std::isfinite(trace[i])) {
      std::snprintf(buf, sizeof buf, "%.17g", trace[i]);
      out << i << ',' << buf << '\n';
    } else {
      out << i << ",nan\n";
    }
  }
  return out.str();
}

StagedRun staged_run(const targets::TargetModel& target, const TrainConfig& config,
                     const flows::FlowOptions& options, bool train_ataf) {
  flows::FlowStack advi = make_family(FamilyKind::kAdvi, target, options, config.seed);
  TrainConfig c = config;
  c.init_from.reset();
  TrainResult advi_result = train(advi, target, c);

  flows::FlowStack taf = make_family(FamilyKind::kTaf, target, options, config.seed);
  taf.copy_flow_weights_from(advi);
  c.seed = config.seed + 1;
  TrainResult taf_result = train(taf, target, c);

  flows::FlowStack ataf = make_family(FamilyKind::kAtaf, target, options, config.seed);
  ataf.copy_flow_weights_from(taf);
  ataf.set_nu(taf.nu_values().at(0));
  std::optional<TrainResult> ataf_result;
  if (train_ataf) {
    c.seed = config.seed + 2;
    ataf_result = train(ataf, target, c);
  }
  return StagedRun{std::move(advi), std::move(taf), std::move(ataf), std::move(advi_result),
                   std::move(taf_result), std::move(ataf_result)};
}

flows::FlowStack staged_init(const targets::TargetModel& target, const TrainConfig& config,
                             const flows::FlowOptions& options) {
  return staged_run(target, config, options, false).ataf;
}

namespace {

double mean_log_prob(const flows::FlowStack& stack, const Matrix& data,
                     std::span<const std::size_t> rows) {
  double acc = 0.0;
  for (std::size_t r : rows) acc += stack.log_prob(data.row(r));
  return acc / static_cast<double>(rows.size());
}

}  // namespace

DensityResult fit_density(flows::FlowStack& stack, const Matrix& data,
                          const TrainConfig& config) {
  config.validate();
  if (data.cols() == 0) throw UsageError("density data has no columns");
  if (data.cols() != stack.dim()) throw UsageError("density data and family dimensions differ");
  if (data.rows() < 10) {
    throw InsufficientDataError("density fitting needs at least 10 rows, got " +
                                std::to_string(data.rows()));
  }
  for (std::size_t i = 0; i < data.rows(); ++i) stack.support().check_in_support(data.row(i));
  if (config.init_from) load_initial(stack, *config.init_from);

  dist::Rng rng(config.seed);
  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
    std::swap(order[i], order[std::min(j, i)]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(data.rows())));
  const std::span<const std::size_t> train_rows(order.data(), n_train);
  const std::span<const std::size_t> held_rows(order.data() + n_train, order.size() - n_train);

  DensityResult out;
  out.n_train = train_rows.size();
  out.n_heldout = held_rows.size();
  AdamState state;
  const AdamConfig adam{config.lr, config.beta1, config.beta2, config.eps};
  std::span<double> params = stack.params().values();
  const std::size_t batch = std::min(config.elbo_samples, n_train);
  std::size_t consecutive = 0;
  std::vector<ad::Var> y(stack.dim());

  ad::Tape tape;
  std::vector<double> adj;
  for (std::size_t step = 0; step < config.steps; ++step) {
    tape.clear();
    const std::vector<ad::Var> p = ad::variables(tape, params);
    std::vector<ad::Var> terms;
    terms.reserve(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      const auto pick = std::min(n_train - 1, static_cast<std::size_t>(
                                                  rng.uniform() * static_cast<double>(n_train)));
      const auto row = data.row(train_rows[pick]);
      const ad::Tape::Mark mark = tape.mark();
      try {
        for (std::size_t j = 0; j < y.size(); ++j) y[j] = ad::variable(tape, row[j]);
        terms.push_back(stack.log_prob<ad::Var>(p, y));
      } catch (const NumericError&) {
        tape.rewind(mark);
      }
    }
    bool ok = !terms.empty();
    std::vector<double> grad(params.size(), 0.0);
    double value = kNaN;
    if (ok) {
      try {
        const ad::Var obj = ad::sum(terms) * (1.0 / static_cast<double>(terms.size()));
        value = obj.value();
        tape.backward(obj.id(), adj);
        for (std::size_t k = 0; k < p.size(); ++k) grad[k] = adj[p[k].id()];
        ok = std::isfinite(value) && all_finite(grad);
      } catch (const NumericError&) {
        ok = false;
      }
    }
    if (!ok) {
      out.trace.push_back(kNaN);
      if (++consecutive >= config.max_nonfinite) {
        throw TrainingAborted("non-finite log-likelihood for " + std::to_string(consecutive) +
                                  " consecutive steps",
                              flows::snapshot(stack));
      }
      continue;
    }
    consecutive = 0;
    clip_global_norm(grad, config.clip_norm);
    adam_step(params, grad, state, adam);
    out.trace.push_back(value);
    if (config.on_step) config.on_step(step, value);
  }
  out.train_loglik = mean_log_prob(stack, data, train_rows);
  out.heldout_loglik = held_rows.empty() ? kNaN : mean_log_prob(stack, data, held_rows);
  out.params = flows::snapshot(stack);
  return out;
}

}  // namespace ataflow::vi
