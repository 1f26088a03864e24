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

#ifndef ATAFLOW_VI_HPP
#define ATAFLOW_VI_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ataflow/errors.hpp"
#include "ataflow/flows.hpp"
#include "ataflow/matrix.hpp"
#include "ataflow/targets.hpp"

#include "json.hpp"

namespace ataflow::vi {

enum class FamilyKind { kAdvi, kTaf, kAtaf };

std::string to_string(FamilyKind kind);       // "advi", "taf", "ataf"
FamilyKind family_from_string(const std::string& name);
dist::BaseKind base_kind(FamilyKind kind);

// Base per family, IAF stack, and the target's support bijection.
flows::FlowStack make_family(FamilyKind kind, const targets::TargetModel& target,
                             const flows::FlowOptions& options = {},
                             std::uint64_t init_seed = 0);

// Frozen base noise, one row per draw: standard normals for a Gaussian base,
// uniforms for the StudentT bases.
struct NoiseBatch {
  Matrix noise;
};
NoiseBatch draw_noise(const flows::FlowStack& stack, std::size_t n, dist::Rng& rng);

struct ElboGradient {
  double value = 0.0;           // mean over the draws that evaluated
  std::vector<double> grad;     // d value / d params
  std::size_t used = 0;
  std::size_t dropped = 0;      // draws that hit a domain or numeric failure
};

// Monte-Carlo ELBO on a frozen batch with its pathwise gradient (including
// the implicit StudentT terms through nu).
ElboGradient elbo_and_gradient(const flows::FlowStack& stack,
                               std::span<const double> params,
                               const targets::TargetModel& target,
                               const NoiseBatch& batch);
// The same objective over doubles; NaN if no draw evaluates.
double elbo_value(const flows::FlowStack& stack, std::span<const double> params,
                  const targets::TargetModel& target, const NoiseBatch& batch);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t used = 0;
};

// log pi(x_i) - log q(x_i) for fresh draws; failing draws are skipped.
// Throws NumericError naming the target when every draw fails.
std::vector<double> log_weights(const flows::FlowStack& stack,
                                const targets::TargetModel& target,
                                std::size_t n, dist::Rng& rng);
// Sample mean and standard error.
Estimate elbo_from_log_weights(std::span<const double> w);
// log-mean-exp with a first-order delta-method standard error.
Estimate logml_from_log_weights(std::span<const double> w);

Estimate elbo_estimate(const flows::FlowStack& stack,
                       const targets::TargetModel& target, std::size_t n,
                       dist::Rng& rng);
Estimate log_marginal_likelihood(const flows::FlowStack& stack,
                                 const targets::TargetModel& target,
                                 std::size_t n, dist::Rng& rng);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;
};

// One ascent step on params along grads (bias-corrected Adam).
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& config);

// Rescales g in place so its Euclidean norm is at most max_norm; returns
// the norm before clipping.
double clip_global_norm(std::span<double> g, double max_norm);

struct TrainConfig {
  std::size_t steps = 10000;
  double lr = 1e-3;
  std::size_t elbo_samples = 100;
  std::size_t eval_samples = 1000;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 10.0;
  std::size_t max_nonfinite = 50;
  std::optional<std::string> init_from;   // params.json to start from
  // Called after every step with (step index, batch ELBO).
  std::function<void(std::size_t, double)> on_step;

  void validate() const;
};

struct TrainResult {
  nlohmann::json params;            // snapshot after training
  std::vector<double> trace;        // batch ELBO per step
  Estimate elbo;
  Estimate log_py;
  std::vector<double> nu;           // fitted tail parameters, per coordinate
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::size_t skipped_steps = 0;    // steps with a non-finite objective
};

// Raised after max_nonfinite consecutive non-finite steps.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, nlohmann::json snapshot)
      : NumericError(what), snapshot_(std::move(snapshot)) {}
  const nlohmann::json& snapshot() const noexcept { return snapshot_; }

 private:
  nlohmann::json snapshot_;
};

// Adam ascent on the Monte-Carlo ELBO, then evaluation on eval_samples
// shared draws. Deterministic in config.seed.
TrainResult train(flows::FlowStack& stack, const targets::TargetModel& target,
                  const TrainConfig& config);

// Wall time is left out unless asked for, so seeded runs serialize
// identically.
nlohmann::json to_json(const TrainResult& result, bool include_wall_time = false);
std::string trace_csv(std::span<const double> trace);

// ADVI, then TAF warm-started from the ADVI weights, then ATAF warm-started
// from the TAF weights with every nu_i set to the TAF nu.
struct StagedRun {
  flows::FlowStack advi;
  flows::FlowStack taf;
  flows::FlowStack ataf;
  TrainResult advi_result;
  TrainResult taf_result;
  std::optional<TrainResult> ataf_result;   // empty when train_ataf is false
};
StagedRun staged_run(const targets::TargetModel& target, const TrainConfig& config,
                     const flows::FlowOptions& options, bool train_ataf = true);
// The ATAF stack only, before its own training.
flows::FlowStack staged_init(const targets::TargetModel& target,
                             const TrainConfig& config,
                             const flows::FlowOptions& options = {});

struct DensityResult {
  std::vector<double> trace;        // mean train log-likelihood per step
  double train_loglik = 0.0;        // mean over the training split
  double heldout_loglik = 0.0;      // mean over the held-out split
  std::size_t n_train = 0;
  std::size_t n_heldout = 0;
  nlohmann::json params;
};

// Maximum likelihood on an 80/20 seeded split; minibatches of
// config.elbo_samples rows.
DensityResult fit_density(flows::FlowStack& stack, const Matrix& data,
                          const TrainConfig& config);

}  // namespace ataflow::vi

#endif  // ATAFLOW_VI_HPP
