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

#include "ataflow/flows.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>

namespace ataflow::flows {

std::size_t ParamStore::add(std::string name, std::size_t size) {
  for (const Block& b : blocks_) {
    if (b.name == name) throw UsageError("duplicate parameter block " + name);
  }
  const std::size_t offset = values_.size();
  blocks_.push_back(Block{std::move(name), offset, size});
  values_.resize(offset + size, 0.0);
  return offset;
}

const ParamStore::Block& ParamStore::block(const std::string& name) const {
  for (const Block& b : blocks_) {
    if (b.name == name) return b;
  }
  throw UsageError("unknown parameter block " + name);
}

std::span<double> ParamStore::block_values(const std::string& name) {
  const Block& b = block(name);
  return std::span<double>(values_).subspan(b.offset, b.size);
}

std::span<const double> ParamStore::block_values(
    const std::string& name) const {
  const Block& b = block(name);
  return std::span<const double>(values_).subspan(b.offset, b.size);
}

MaskedConditioner::MaskedConditioner(std::size_t dim, std::size_t hidden1,
                                     std::size_t hidden2,
                                     std::vector<std::size_t> ordering,
                                     ParamStore& store,
                                     const std::string& prefix)
    : dim_(dim),
      hidden1_(hidden1),
      hidden2_(hidden2),
      ordering_(std::move(ordering)) {
  if (dim_ == 0) throw UsageError("conditioner needs dim >= 1");
  if (ordering_.size() != dim_) throw UsageError("ordering size mismatch");
  std::vector<std::size_t> position(dim_, dim_);
  for (std::size_t p = 0; p < dim_; ++p) {
    if (ordering_[p] >= dim_ || position[ordering_[p]] != dim_) {
      throw UsageError("ordering is not a permutation");
    }
    position[ordering_[p]] = p;
  }

  w1_ = store.add(prefix + "W1", hidden1_ * dim_);
  b1_ = store.add(prefix + "b1", hidden1_);
  w2_ = store.add(prefix + "W2", hidden2_ * hidden1_);
  b2_ = store.add(prefix + "b2", hidden2_);
  wm_ = store.add(prefix + "Wmu", dim_ * hidden2_);
  bm_ = store.add(prefix + "bmu", dim_);
  wl_ = store.add(prefix + "Wlambda", dim_ * hidden2_);
  bl_ = store.add(prefix + "blambda", dim_);

  // Degrees: 0 marks an unused unit (only when d == 1).
  auto degree = [&](std::size_t h) -> std::size_t {
    return dim_ >= 2 ? (h % (dim_ - 1)) + 1 : 0;
  };
  in1_.assign(hidden1_, {});
  in2_.assign(hidden2_, {});
  out_.assign(dim_, {});
  by_degree1_.assign(dim_, {});
  by_degree2_.assign(dim_, {});
  for (std::size_t h = 0; h < hidden1_; ++h) {
    const std::size_t m = degree(h);
    if (m == 0) continue;
    by_degree1_[m].push_back(static_cast<std::uint32_t>(h));
    for (std::size_t c = 0; c < dim_; ++c) {
      if (position[c] + 1 <= m) in1_[h].push_back(static_cast<std::uint32_t>(c));
    }
  }
  for (std::size_t h = 0; h < hidden2_; ++h) {
    const std::size_t m = degree(h);
    if (m == 0) continue;
    by_degree2_[m].push_back(static_cast<std::uint32_t>(h));
    for (std::size_t g = 0; g < hidden1_; ++g) {
      const std::size_t mg = degree(g);
      if (mg != 0 && mg <= m) in2_[h].push_back(static_cast<std::uint32_t>(g));
    }
  }
  for (std::size_t c = 0; c < dim_; ++c) {
    for (std::size_t h = 0; h < hidden2_; ++h) {
      const std::size_t m = degree(h);
      if (m != 0 && m <= position[c]) {
        out_[c].push_back(static_cast<std::uint32_t>(h));
      }
    }
  }
}

void MaskedConditioner::initialize(std::span<double> params, dist::Rng& rng,
                                   bool zero_output) const {
  auto uniform = [&](double bound) {
    return bound * (2.0 * rng.uniform() - 1.0);
  };
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(dim_));
  for (std::size_t h = 0; h < hidden1_; ++h) {
    for (std::uint32_t c : in1_[h]) params[w1_ + h * dim_ + c] = uniform(bound1);
    params[b1_ + h] = uniform(bound1);
  }
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden1_));
  for (std::size_t h = 0; h < hidden2_; ++h) {
    for (std::uint32_t g : in2_[h]) {
      params[w2_ + h * hidden1_ + g] = uniform(bound2);
    }
    params[b2_ + h] = uniform(bound2);
  }
  const double bound3 = 1.0 / std::sqrt(static_cast<double>(hidden2_));
  for (std::size_t c = 0; c < dim_; ++c) {
    for (std::uint32_t h : out_[c]) {
      params[wm_ + c * hidden2_ + h] = zero_output ? 0.0 : uniform(bound3);
      params[wl_ + c * hidden2_ + h] = zero_output ? 0.0 : uniform(bound3);
    }
    params[bm_ + c] = zero_output ? 0.0 : uniform(bound3);
    params[bl_ + c] = zero_output ? 0.0 : uniform(bound3);
  }
}

std::string to_string(SupportKind kind) {
  switch (kind) {
    case SupportKind::kIdentity: return "identity";
    case SupportKind::kPositive: return "exp";
    case SupportKind::kUnitInterval: return "sigmoid";
  }
  return "?";
}

SupportKind support_kind_from_string(const std::string& name) {
  if (name == "identity") return SupportKind::kIdentity;
  if (name == "exp") return SupportKind::kPositive;
  if (name == "sigmoid") return SupportKind::kUnitInterval;
  throw UsageError("unknown support bijection " + name);
}

bool SupportBijection::is_identity() const {
  return std::all_of(kinds_.begin(), kinds_.end(), [](SupportKind k) {
    return k == SupportKind::kIdentity;
  });
}

void SupportBijection::check_in_support(std::span<const double> y) const {
  std::vector<double> copy(y.begin(), y.end());
  std::vector<double> terms;
  inverse<double>(std::span<double>(copy), terms);
}

FlowStack::FlowStack(dist::BaseKind base, std::vector<SupportKind> support,
                     const FlowOptions& options, std::uint64_t init_seed)
    : base_(base, support.size(), options.nu_floor),
      options_(options),
      support_(std::move(support)) {
  const std::size_t d = base_.dim();
  if (options_.hidden == 0) throw UsageError("hidden width must be positive");
  if (!(options_.clamp > 0.0)) throw UsageError("clamp must be positive");
  dist::Rng rng(init_seed);
  for (std::size_t l = 0; l < options_.layers; ++l) {
    std::vector<std::size_t> ordering(d);
    std::iota(ordering.begin(), ordering.end(), std::size_t{0});
    if (l % 2 == 1) std::reverse(ordering.begin(), ordering.end());
    const std::string prefix = "layer" + std::to_string(l) + ".";
    layers_.emplace_back(
        MaskedConditioner(d, options_.hidden, options_.hidden,
                          std::move(ordering), params_, prefix),
        options_.clamp);
  }
  nu_offset_ = params_.add("raw_nu", base_.num_tail_params());
  for (const IafLayer& layer : layers_) {
    layer.conditioner().initialize(params_.values(), rng, true);
  }
  if (nu_count() > 0) set_nu(options_.nu_init);
}

std::vector<double> FlowStack::nu_values() const {
  return nu<double>(params_.values());
}

void FlowStack::set_nu(double nu) {
  const double raw = dist::raw_from_nu(nu, options_.nu_floor);
  for (double& r : params_.block_values("raw_nu")) r = raw;
}

double FlowStack::log_prob(std::span<const double> y) const {
  return log_prob<double>(params_.values(), y);
}

SampleBatch FlowStack::sample(std::size_t n, dist::Rng& rng) const {
  const std::size_t d = dim();
  SampleBatch out{Matrix(n, d), std::vector<double>(n)};
  const std::span<const double> p = params_.values();
  const std::vector<double> nus = nu<double>(p);
  std::vector<double> z(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      z[j] = base_.from_noise(nus, j, base_.draw_noise(rng));
    }
    LayerResult<double> r = transform<double>(p, nus, z);
    std::copy(r.values.begin(), r.values.end(), out.values.row(i).begin());
    out.log_q[i] = r.log_det;
  }
  return out;
}

void FlowStack::copy_flow_weights_from(const FlowStack& other) {
  if (other.dim() != dim() || other.layers_.size() != layers_.size() ||
      other.options_.hidden != options_.hidden) {
    throw UsageError("copy_flow_weights_from: architecture mismatch");
  }
  for (const ParamStore::Block& b : params_.blocks()) {
    if (b.name == "raw_nu") continue;
    const std::span<const double> src = other.params_.block_values(b.name);
    std::copy(src.begin(), src.end(), params_.block_values(b.name).begin());
  }
}

LayerResult<double> iaf_forward(std::span<const double> z, const IafLayer& layer,
                                std::span<const double> params) {
  return layer.forward<double>(params, z);
}

LayerResult<double> iaf_inverse(std::span<const double> x, const IafLayer& layer,
                                std::span<const double> params) {
  return layer.inverse<double>(params, x);
}

LayerResult<double> support_forward(std::span<const double> x,
                                    const SupportBijection& support) {
  LayerResult<double> out{std::vector<double>(x.begin(), x.end()), 0.0};
  std::vector<double> terms;
  support.forward<double>(std::span<double>(out.values), terms);
  out.log_det = ad::sum(terms);
  return out;
}

double flow_log_prob(std::span<const double> y, const FlowStack& stack) {
  return stack.log_prob(y);
}

SampleBatch flow_sample(const FlowStack& stack, std::size_t n, dist::Rng& rng) {
  if (n == 0) throw UsageError("flow_sample needs n >= 1");
  return stack.sample(n, rng);
}

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw UsageError("malformed hex float '" + s + "'");
  }
  return v;
}

nlohmann::json snapshot(const FlowStack& stack) {
  nlohmann::json j;
  j["dim"] = stack.dim();
  j["base"] = dist::to_string(stack.base().kind());
  j["hidden"] = stack.options().hidden;
  j["layers"] = stack.options().layers;
  j["clamp"] = hex_double(stack.options().clamp);
  j["nu_floor"] = hex_double(stack.options().nu_floor);
  nlohmann::json support = nlohmann::json::array();
  for (SupportKind k : stack.support().kinds()) support.push_back(to_string(k));
  j["support"] = support;
  nlohmann::json params = nlohmann::json::object();
  for (const ParamStore::Block& b : stack.params().blocks()) {
    nlohmann::json arr = nlohmann::json::array();
    for (double v : stack.params().block_values(b.name)) {
      arr.push_back(hex_double(v));
    }
    params[b.name] = arr;
  }
  j["params"] = params;
  return j;
}

namespace {

dist::BaseKind base_kind_from_string(const std::string& s) {
  if (s == "gaussian") return dist::BaseKind::kGaussian;
  if (s == "studentt_shared") return dist::BaseKind::kStudentTShared;
  if (s == "studentt_per_dim") return dist::BaseKind::kStudentTPerDim;
  throw UsageError("unknown base kind " + s);
}

}  // namespace

FlowStack restore(const nlohmann::json& j) {
  try {
    FlowOptions opts;
    opts.hidden = j.at("hidden").get<std::size_t>();
    opts.layers = j.at("layers").get<std::size_t>();
    opts.clamp = parse_hex_double(j.at("clamp").get<std::string>());
    opts.nu_floor = parse_hex_double(j.at("nu_floor").get<std::string>());
    std::vector<SupportKind> support;
    for (const auto& s : j.at("support")) {
      support.push_back(support_kind_from_string(s.get<std::string>()));
    }
    if (support.size() != j.at("dim").get<std::size_t>()) {
      throw UsageError("snapshot dim does not match support");
    }
    FlowStack stack(base_kind_from_string(j.at("base").get<std::string>()),
                    std::move(support), opts, 0);
    for (const ParamStore::Block& b : stack.params().blocks()) {
      const auto& arr = j.at("params").at(b.name);
      if (arr.size() != b.size) {
        throw UsageError("parameter block " + b.name + " has wrong size");
      }
      std::span<double> dst = stack.params().block_values(b.name);
      for (std::size_t i = 0; i < b.size; ++i) {
        dst[i] = parse_hex_double(arr[i].get<std::string>());
      }
    }
    return stack;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed parameter snapshot: ") + e.what());
  }
}

}  // namespace ataflow::flows
