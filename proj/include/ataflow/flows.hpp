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

#ifndef ATAFLOW_FLOWS_HPP
#define ATAFLOW_FLOWS_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "ataflow/autodiff.hpp"
#include "ataflow/distributions.hpp"
#include "ataflow/errors.hpp"
#include "ataflow/matrix.hpp"

#include "json.hpp"

namespace ataflow::flows {

// Flat parameter vector with named, contiguous blocks.
class ParamStore {
 public:
  struct Block {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
  };

  // Appends a zero-filled block and returns its offset.
  std::size_t add(std::string name, std::size_t size);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }

  const Block& block(const std::string& name) const;
  std::span<double> block_values(const std::string& name);
  std::span<const double> block_values(const std::string& name) const;

 private:
  std::vector<double> values_;
  std::vector<Block> blocks_;
};

/**
 * Dense two-hidden-layer autoregressive conditioner with ELU activations.
 *
 * Units carry MADE degrees: the input at ordering position q has degree q+1,
 * hidden units have degrees in [1, d-1], a hidden unit sees lower-layer units
 * of degree <= its own, and the (mu, lambda) output for position p sees only
 * hidden units of degree <= p. Output p therefore depends on inputs at
 * positions < p only. Masked connections are never evaluated.
 */
class MaskedConditioner {
 public:
  MaskedConditioner(std::size_t dim, std::size_t hidden1, std::size_t hidden2,
                    std::vector<std::size_t> ordering, ParamStore& store,
                    const std::string& prefix);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t hidden1() const noexcept { return hidden1_; }
  std::size_t hidden2() const noexcept { return hidden2_; }
  // ordering()[p] is the coordinate at autoregressive position p.
  const std::vector<std::size_t>& ordering() const noexcept { return ordering_; }

  // Uniform(+-1/sqrt(fan_in)) on unmasked weights and biases; the output layer
  // is zeroed when zero_output is set so the layer starts as the identity.
  void initialize(std::span<double> params, dist::Rng& rng,
                  bool zero_output) const;

  // Raw (mu, lambda) for every coordinate, indexed by coordinate.
  template <class T>
  void forward(std::span<const T> p, std::span<const T> z, std::span<T> mu,
               std::span<T> lambda) const;

  // Sequential evaluation: `step(pos)` makes every hidden unit of degree pos
  // available, after which outputs for position pos can be read.
  template <class T>
  struct Cursor {
    std::vector<T> a1;
    std::vector<T> a2;
  };
  template <class T>
  void advance(std::span<const T> p, std::span<const T> z, std::size_t pos,
               Cursor<T>& cur) const;
  template <class T>
  std::pair<T, T> output(std::span<const T> p, const Cursor<T>& cur,
                         std::size_t coord) const;

  // Connectivity, exposed for tests.
  const std::vector<std::uint32_t>& inputs_of_hidden1(std::size_t h) const {
    return in1_.at(h);
  }

 private:
  std::size_t dim_;
  std::size_t hidden1_;
  std::size_t hidden2_;
  std::vector<std::size_t> ordering_;
  std::size_t w1_, b1_, w2_, b2_, wm_, bm_, wl_, bl_;
  std::vector<std::vector<std::uint32_t>> in1_;   // coordinates per hidden1 unit
  std::vector<std::vector<std::uint32_t>> in2_;   // hidden1 units per hidden2 unit
  std::vector<std::vector<std::uint32_t>> out_;   // hidden2 units per coordinate
  std::vector<std::vector<std::uint32_t>> by_degree1_;
  std::vector<std::vector<std::uint32_t>> by_degree2_;
};

template <class T>
struct LayerResult {
  std::vector<T> values;
  T log_det;
};

// x_j = z_j * exp(clamp(lambda_j)) + mu_j with clamp(l) = s * tanh(l / s).
class IafLayer {
 public:
  IafLayer(MaskedConditioner conditioner, double clamp)
      : conditioner_(std::move(conditioner)), clamp_(clamp) {}

  const MaskedConditioner& conditioner() const noexcept { return conditioner_; }
  double clamp() const noexcept { return clamp_; }
  std::size_t dim() const noexcept { return conditioner_.dim(); }

  template <class T>
  T clamped(const T& lambda) const {
    return clamp_ * ad::tanh(lambda / clamp_);
  }

  template <class T>
  LayerResult<T> forward(std::span<const T> p, std::span<const T> z) const;

  // Sequential solve in ordering order; log_det is the inverse's (negative of
  // the forward log_det at the solution).
  template <class T>
  LayerResult<T> inverse(std::span<const T> p, std::span<const T> x) const;

 private:
  MaskedConditioner conditioner_;
  double clamp_;
};

enum class SupportKind { kIdentity, kPositive, kUnitInterval };

std::string to_string(SupportKind kind);
SupportKind support_kind_from_string(const std::string& name);

// Coordinate-wise bijection R -> support: identity, exp or logistic sigmoid.
class SupportBijection {
 public:
  explicit SupportBijection(std::vector<SupportKind> kinds)
      : kinds_(std::move(kinds)) {}

  std::size_t dim() const noexcept { return kinds_.size(); }
  const std::vector<SupportKind>& kinds() const noexcept { return kinds_; }
  bool is_identity() const;

  // Maps x -> y in place; returns the forward log|det|, or nothing when every
  // coordinate is the identity.
  template <class T>
  void forward(std::span<T> xy, std::vector<T>& log_det_terms) const;
  // Maps y -> x in place, appending inverse log|det| terms. Throws
  // DomainError naming the coordinate if y lies outside the support.
  template <class T>
  void inverse(std::span<T> yx, std::vector<T>& log_det_terms) const;

  // Range check without transforming.
  void check_in_support(std::span<const double> y) const;

 private:
  std::vector<SupportKind> kinds_;
};

struct FlowOptions {
  std::size_t hidden = 32;
  std::size_t layers = 2;
  double clamp = 5.0;
  double nu_floor = dist::kDefaultNuFloor;
  double nu_init = 5.0;
};

struct SampleBatch {
  Matrix values;                 // n x d draws in the target support
  std::vector<double> log_q;     // log density of each draw
};

/**
 * (support o IAF_L o ... o IAF_1)_* base.
 *
 * All trainable parameters (conditioner weights and raw tail parameters)
 * live in one ParamStore so a single optimizer state covers them.
 */
class FlowStack {
 public:
  FlowStack(dist::BaseKind base, std::vector<SupportKind> support,
            const FlowOptions& options, std::uint64_t init_seed);

  std::size_t dim() const noexcept { return base_.dim(); }
  const dist::BaseDistribution& base() const noexcept { return base_; }
  const std::vector<IafLayer>& layers() const noexcept { return layers_; }
  const SupportBijection& support() const noexcept { return support_; }
  const FlowOptions& options() const noexcept { return options_; }

  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  std::size_t nu_offset() const noexcept { return nu_offset_; }
  std::size_t nu_count() const noexcept { return base_.num_tail_params(); }
  std::vector<double> nu_values() const;  // one per coordinate, empty for Gaussian
  void set_nu(double nu);                 // every tail parameter to nu

  template <class T>
  std::vector<T> nu(std::span<const T> p) const {
    return base_.nu<T>(p.subspan(nu_offset_, nu_count()));
  }

  // Pushes a base draw through the stack: returns y and log q(y).
  template <class T>
  LayerResult<T> transform(std::span<const T> p, std::span<const T> nu,
                           std::span<const T> z) const;

  // log q(y) by inverting the stack (change of variables).
  template <class T>
  T log_prob(std::span<const T> p, std::span<const T> y) const;
  double log_prob(std::span<const double> y) const;

  // Draws n points; log q accumulates along the forward path.
  SampleBatch sample(std::size_t n, dist::Rng& rng) const;

  // Copies conditioner weights (not tail parameters) from a stack with the
  // same architecture.
  void copy_flow_weights_from(const FlowStack& other);

 private:
  dist::BaseDistribution base_;
  FlowOptions options_;
  ParamStore params_;
  std::vector<IafLayer> layers_;
  SupportBijection support_;
  std::size_t nu_offset_ = 0;
};

// Free-function forms over double parameters.
LayerResult<double> iaf_forward(std::span<const double> z, const IafLayer& layer,
                                std::span<const double> params);
LayerResult<double> iaf_inverse(std::span<const double> x, const IafLayer& layer,
                                std::span<const double> params);
LayerResult<double> support_forward(std::span<const double> x,
                                    const SupportBijection& support);
double flow_log_prob(std::span<const double> y, const FlowStack& stack);
SampleBatch flow_sample(const FlowStack& stack, std::size_t n, dist::Rng& rng);

// Parameter snapshot: architecture plus every block as hex-float strings.
nlohmann::json snapshot(const FlowStack& stack);
FlowStack restore(const nlohmann::json& snapshot);
std::string hex_double(double v);
double parse_hex_double(const std::string& s);

// ---------------------------------------------------------------------------
// Template definitions.

template <class T>
void MaskedConditioner::forward(std::span<const T> p, std::span<const T> z,
                                std::span<T> mu, std::span<T> lambda) const {
  Cursor<T> cur;
  cur.a1.resize(hidden1_);
  cur.a2.resize(hidden2_);
  for (std::size_t pos = 1; pos < dim_; ++pos) advance(p, z, pos, cur);
  for (std::size_t j = 0; j < dim_; ++j) {
    auto [m, l] = output(p, cur, j);
    mu[j] = m;
    lambda[j] = l;
  }
}

template <class T>
void MaskedConditioner::advance(std::span<const T> p, std::span<const T> z,
                                std::size_t pos, Cursor<T>& cur) const {
  if (cur.a1.size() != hidden1_) cur.a1.resize(hidden1_);
  if (cur.a2.size() != hidden2_) cur.a2.resize(hidden2_);
  if (pos >= by_degree1_.size()) return;
  const std::span<const T> a1(cur.a1);
  for (std::uint32_t h : by_degree1_[pos]) {
    cur.a1[h] = ad::elu(ad::affine(p[b1_ + h], p.subspan(w1_ + h * dim_, dim_),
                                   z, std::span<const std::uint32_t>(in1_[h])));
  }
  for (std::uint32_t h : by_degree2_[pos]) {
    cur.a2[h] = ad::elu(
        ad::affine(p[b2_ + h], p.subspan(w2_ + h * hidden1_, hidden1_), a1,
                   std::span<const std::uint32_t>(in2_[h])));
  }
}

template <class T>
std::pair<T, T> MaskedConditioner::output(std::span<const T> p,
                                          const Cursor<T>& cur,
                                          std::size_t coord) const {
  const std::span<const T> a2(cur.a2);
  const std::span<const std::uint32_t> idx(out_[coord]);
  T m = ad::affine(p[bm_ + coord], p.subspan(wm_ + coord * hidden2_, hidden2_),
                   a2, idx);
  T l = ad::affine(p[bl_ + coord], p.subspan(wl_ + coord * hidden2_, hidden2_),
                   a2, idx);
  return {m, l};
}

namespace detail {

template <class T>
T total(std::span<const T> terms) {
  if constexpr (std::is_same_v<T, double>) {
    return ad::sum(terms);
  } else {
    return terms.size() == 1 ? terms[0] : ad::sum(terms);
  }
}

}  // namespace detail

template <class T>
LayerResult<T> IafLayer::forward(std::span<const T> p,
                                 std::span<const T> z) const {
  const std::size_t d = dim();
  if (z.size() != d) throw UsageError("iaf_forward: dimension mismatch");
  std::vector<T> mu(d), lambda(d);
  conditioner_.forward(p, z, std::span<T>(mu), std::span<T>(lambda));
  LayerResult<T> out{std::vector<T>(d), T{}};
  std::vector<T> scales(d);
  for (std::size_t j = 0; j < d; ++j) {
    scales[j] = clamped(lambda[j]);
    out.values[j] = z[j] * ad::exp(scales[j]) + mu[j];
  }
  out.log_det = detail::total<T>(scales);
  return out;
}

template <class T>
LayerResult<T> IafLayer::inverse(std::span<const T> p,
                                 std::span<const T> x) const {
  const std::size_t d = dim();
  if (x.size() != d) throw UsageError("iaf_inverse: dimension mismatch");
  LayerResult<T> out{std::vector<T>(d), T{}};
  std::vector<T> neg_scales(d);
  MaskedConditioner::Cursor<T> cur;
  const std::span<const T> z(out.values);
  for (std::size_t pos = 0; pos < d; ++pos) {
    conditioner_.advance(p, z, pos, cur);
    const std::size_t j = conditioner_.ordering()[pos];
    auto [m, l] = conditioner_.output(p, cur, j);
    const T s = clamped(l);
    out.values[j] = (x[j] - m) * ad::exp(-s);
    neg_scales[pos] = -s;
  }
  out.log_det = detail::total<T>(neg_scales);
  return out;
}

template <class T>
void SupportBijection::forward(std::span<T> xy,
                               std::vector<T>& log_det_terms) const {
  for (std::size_t i = 0; i < kinds_.size(); ++i) {
    const T x = xy[i];
    switch (kinds_[i]) {
      case SupportKind::kIdentity:
        break;
      case SupportKind::kPositive:
        xy[i] = ad::exp(x);
        log_det_terms.push_back(x);
        break;
      case SupportKind::kUnitInterval:
        if (ad::value_of(x) >= 0.0) {
          xy[i] = 1.0 / (1.0 + ad::exp(-x));
        } else {
          const T e = ad::exp(x);
          xy[i] = e / (1.0 + e);
        }
        log_det_terms.push_back(-(ad::softplus(-x) + ad::softplus(x)));
        break;
    }
  }
}

template <class T>
void SupportBijection::inverse(std::span<T> yx,
                               std::vector<T>& log_det_terms) const {
  for (std::size_t i = 0; i < kinds_.size(); ++i) {
    const T y = yx[i];
    const double v = ad::value_of(y);
    switch (kinds_[i]) {
      case SupportKind::kIdentity:
        break;
      case SupportKind::kPositive: {
        if (!(v > 0.0)) {
          throw DomainError("coordinate " + std::to_string(i) +
                            " outside positive support");
        }
        const T x = ad::log(y);
        yx[i] = x;
        log_det_terms.push_back(-x);
        break;
      }
      case SupportKind::kUnitInterval: {
        if (!(v > 0.0 && v < 1.0)) {
          throw DomainError("coordinate " + std::to_string(i) +
                            " outside unit-interval support");
        }
        const T log_y = ad::log(y);
        const T log_1my = ad::log(1.0 - y);
        yx[i] = log_y - log_1my;
        log_det_terms.push_back(-(log_y + log_1my));
        break;
      }
    }
  }
}

template <class T>
LayerResult<T> FlowStack::transform(std::span<const T> p,
                                    std::span<const T> nu,
                                    std::span<const T> z) const {
  std::vector<T> terms;
  terms.reserve(layers_.size() + dim() + 1);
  terms.push_back(base_.log_prob<T>(nu, z));
  std::vector<T> cur(z.begin(), z.end());
  for (const IafLayer& layer : layers_) {
    LayerResult<T> r = layer.forward<T>(p, cur);
    terms.push_back(-r.log_det);
    cur = std::move(r.values);
  }
  std::vector<T> support_terms;
  support_.forward<T>(std::span<T>(cur), support_terms);
  for (const T& t : support_terms) terms.push_back(-t);
  return LayerResult<T>{std::move(cur), detail::total<T>(terms)};
}

template <class T>
T FlowStack::log_prob(std::span<const T> p, std::span<const T> y) const {
  if (y.size() != dim()) throw UsageError("log_prob: dimension mismatch");
  std::vector<T> cur(y.begin(), y.end());
  std::vector<T> terms;
  support_.inverse<T>(std::span<T>(cur), terms);
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    LayerResult<T> r = it->inverse<T>(p, cur);
    terms.push_back(r.log_det);
    cur = std::move(r.values);
  }
  const std::vector<T> nus = nu<T>(p);
  terms.push_back(base_.log_prob<T>(nus, cur));
  return detail::total<T>(terms);
}

}  // namespace ataflow::flows

#endif  // ATAFLOW_FLOWS_HPP
