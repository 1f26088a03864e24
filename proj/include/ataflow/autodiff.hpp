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

#ifndef ATAFLOW_AUTODIFF_HPP
#define ATAFLOW_AUTODIFF_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "ataflow/special.hpp"

/**
 * Reverse-mode automatic differentiation over 64-bit scalars.
 *
 * A Tape records every intermediate value together with the local partial
 * derivative of that value with respect to each of its parents. Graphs are
 * built by running ordinary code on Var, so the tape is rebuilt on every
 * evaluation. Node ids grow monotonically and a node only ever references
 * earlier ids, so the recording order is already a topological order and
 * backward() is a single reverse sweep.
 *
 * Every primitive also has a double overload with the same name, so numeric
 * code can be written once as a template over the scalar type.
 */
namespace ataflow::ad {

enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kExp,
  kLog,
  kTanh,
  kElu,
  kSoftplus,
  kLgamma,
  kAtan,
  kSqrt,
  kDot,
  kSum,
  kCustom,
};

const char* op_name(Op op);

struct Edge {
  std::uint32_t parent;
  double partial;
};

class Tape {
 public:
  using Id = std::uint32_t;

  struct Mark {
    std::size_t nodes = 0;
    std::size_t edges = 0;
  };

  Tape();

  Id leaf(double value);

  // Records a node whose parents are the given edges. Throws NumericError
  // naming the would-be node id if the value or any partial is non-finite;
  // the tape is left unchanged in that case.
  Id record(Op op, double value, std::span<const Edge> parents);
  Id record(Op op, double value, Edge a);
  Id record(Op op, double value, Edge a, Edge b);

  // Incremental form for wide nodes: push_edge() any number of times, then
  // commit() closes the node.
  void push_edge(Id parent, double partial) {
    edges_.push_back(Edge{parent, partial});
  }
  Id commit(Op op, double value);

  std::size_t size() const noexcept { return values_.size(); }
  double value(Id id) const { return values_.at(id); }
  Op op(Id id) const { return ops_.at(id); }
  std::span<const Edge> parents(Id id) const;

  Mark mark() const noexcept { return Mark{values_.size(), edges_.size()}; }
  void rewind(Mark m);
  void clear();

  // Adjoint of every node with respect to `output`. Throws UsageError if the
  // id is out of range.
  std::vector<double> backward(Id output) const;
  void backward(Id output, std::vector<double>& adjoints) const;

 private:
  void check_finite(Op op, double value, std::size_t first_edge) const;

  std::vector<double> values_;
  std::vector<Op> ops_;
  // edge_end_[i] is one past the last edge of node i; edge_end_[0] is for the
  // empty prefix so node i owns edges [edge_end_[i], edge_end_[i + 1]).
  std::vector<std::size_t> edge_end_;
  std::vector<Edge> edges_;
};

class Var {
 public:
  Var() = default;
  Var(Tape* tape, Tape::Id id, double value)
      : tape_(tape), id_(id), value_(value) {}

  double value() const noexcept { return value_; }
  Tape::Id id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }

 private:
  Tape* tape_ = nullptr;
  Tape::Id id_ = 0;
  double value_ = 0.0;
};

Var variable(Tape& tape, double value);
std::vector<Var> variables(Tape& tape, std::span<const double> values);

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

// Lift a constant into scalar type T (a fresh leaf for Var).
template <class T>
T lift(double x, Tape* tape);
template <>
inline double lift<double>(double x, Tape*) { return x; }
template <>
inline Var lift<Var>(double x, Tape* tape) { return variable(*tape, x); }

Var operator+(const Var& a, const Var& b);
Var operator+(const Var& a, double b);
Var operator+(double a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator-(const Var& a, double b);
Var operator-(double a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator*(const Var& a, double b);
Var operator*(double a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator/(const Var& a, double b);
Var operator/(double a, const Var& b);
Var operator-(const Var& a);

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator+=(Var& a, double b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator-=(Var& a, double b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator*=(Var& a, double b) { return a = a * b; }

Var exp(const Var& x);
Var log(const Var& x);
Var tanh(const Var& x);
Var elu(const Var& x);
Var softplus(const Var& x);
Var lgamma(const Var& x);
Var atan(const Var& x);
Var sqrt(const Var& x);

inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double tanh(double x) { return std::tanh(x); }
inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}
inline double lgamma(double x) { return special::lgamma(x); }
inline double atan(double x) { return std::atan(x); }
inline double sqrt(double x) { return std::sqrt(x); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// bias + sum_{i in idx} w[i] * x[i], recorded as one node.
double affine(double bias, std::span<const double> w,
              std::span<const double> x, std::span<const std::uint32_t> idx);
Var affine(const Var& bias, std::span<const Var> w, std::span<const Var> x,
           std::span<const std::uint32_t> idx);

// bias + sum_i w[i] * x[i] with constant weights.
double affine(double bias, std::span<const double> w,
              std::span<const double> x);
Var affine(const Var& bias, std::span<const double> w,
           std::span<const Var> x);

double sum(std::span<const double> xs);
Var sum(std::span<const Var> xs);

// A node with caller-supplied value and partials (e.g. an implicit sampler).
Var custom(Tape& tape, double value,
           std::initializer_list<std::pair<Var, double>> parents);

// d output / d input for each input leaf.
std::vector<double> gradient(const Tape& tape, const Var& output,
                             std::span<const Var> inputs);

struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t nonfinite = 0;  // components whose difference quotient was non-finite
};

using ScalarFn = std::function<Var(std::span<const Var>)>;

// Reverse-mode gradient of fn at point against central differences,
// max_i |a - b| / max(1, |a|, |b|).
GradientCheck check_gradient(const ScalarFn& fn, std::span<const double> point,
                             double step = 1e-5);

}  // namespace ataflow::ad

#endif  // ATAFLOW_AUTODIFF_HPP
