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

#include "ataflow/autodiff.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ataflow/errors.hpp"

namespace ataflow::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kNeg: return "neg";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kTanh: return "tanh";
    case Op::kElu: return "elu";
    case Op::kSoftplus: return "softplus";
    case Op::kLgamma: return "lgamma";
    case Op::kAtan: return "atan";
    case Op::kSqrt: return "sqrt";
    case Op::kDot: return "dot";
    case Op::kSum: return "sum";
    case Op::kCustom: return "custom";
  }
  return "?";
}

Tape::Tape() { edge_end_.push_back(0); }

Tape::Id Tape::leaf(double value) {
  if (!std::isfinite(value)) {
    throw NumericError("numeric overflow: non-finite leaf value at node " +
                           std::to_string(values_.size()),
                       values_.size());
  }
  values_.push_back(value);
  ops_.push_back(Op::kLeaf);
  edge_end_.push_back(edges_.size());
  return static_cast<Id>(values_.size() - 1);
}

void Tape::check_finite(Op op, double value, std::size_t first_edge) const {
  bool ok = std::isfinite(value);
  for (std::size_t e = first_edge; ok && e < edges_.size(); ++e) {
    ok = std::isfinite(edges_[e].partial);
  }
  if (!ok) {
    const std::size_t id = values_.size();
    throw NumericError(std::string("numeric overflow: non-finite ") +
                           op_name(op) + " at node " + std::to_string(id),
                       id);
  }
}

Tape::Id Tape::commit(Op op, double value) {
  const std::size_t first = edge_end_.back();
  try {
    check_finite(op, value, first);
  } catch (...) {
    edges_.resize(first);
    throw;
  }
  values_.push_back(value);
  ops_.push_back(op);
  edge_end_.push_back(edges_.size());
  return static_cast<Id>(values_.size() - 1);
}

Tape::Id Tape::record(Op op, double value, std::span<const Edge> parents) {
  edges_.insert(edges_.end(), parents.begin(), parents.end());
  return commit(op, value);
}

Tape::Id Tape::record(Op op, double value, Edge a) {
  edges_.push_back(a);
  return commit(op, value);
}

Tape::Id Tape::record(Op op, double value, Edge a, Edge b) {
  edges_.push_back(a);
  edges_.push_back(b);
  return commit(op, value);
}

std::span<const Edge> Tape::parents(Id id) const {
  if (id >= values_.size()) throw UsageError("node id out of range");
  return std::span<const Edge>(edges_).subspan(
      edge_end_[id], edge_end_[id + 1] - edge_end_[id]);
}

void Tape::rewind(Mark m) {
  if (m.nodes > values_.size() || m.edges > edges_.size()) {
    throw UsageError("rewind past the end of the tape");
  }
  values_.resize(m.nodes);
  ops_.resize(m.nodes);
  edge_end_.resize(m.nodes + 1);
  edges_.resize(m.edges);
}

void Tape::clear() { rewind(Mark{}); }

std::vector<double> Tape::backward(Id output) const {
  std::vector<double> adjoints;
  backward(output, adjoints);
  return adjoints;
}

void Tape::backward(Id output, std::vector<double>& adjoints) const {
  if (output >= values_.size()) {
    throw UsageError("backward: output id " + std::to_string(output) +
                     " out of range (tape has " +
                     std::to_string(values_.size()) + " nodes)");
  }
  adjoints.assign(values_.size(), 0.0);
  adjoints[output] = 1.0;
  for (std::size_t i = output + 1; i-- > 0;) {
    const double a = adjoints[i];
    if (a == 0.0) continue;
    for (std::size_t e = edge_end_[i]; e < edge_end_[i + 1]; ++e) {
      adjoints[edges_[e].parent] += a * edges_[e].partial;
    }
  }
}

Var variable(Tape& tape, double value) {
  return Var(&tape, tape.leaf(value), value);
}

std::vector<Var> variables(Tape& tape, std::span<const double> values) {
  std::vector<Var> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(variable(tape, v));
  return out;
}

namespace {

Var unary(const Var& x, Op op, double value, double partial) {
  Tape* t = x.tape();
  return Var(t, t->record(op, value, Edge{x.id(), partial}), value);
}

Var binary(const Var& a, const Var& b, Op op, double value, double da,
           double db) {
  Tape* t = a.tape();
  return Var(t, t->record(op, value, Edge{a.id(), da}, Edge{b.id(), db}),
             value);
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
  return binary(a, b, Op::kAdd, a.value() + b.value(), 1.0, 1.0);
}
Var operator+(const Var& a, double b) {
  return unary(a, Op::kAdd, a.value() + b, 1.0);
}
Var operator+(double a, const Var& b) { return b + a; }

Var operator-(const Var& a, const Var& b) {
  return binary(a, b, Op::kSub, a.value() - b.value(), 1.0, -1.0);
}
Var operator-(const Var& a, double b) {
  return unary(a, Op::kSub, a.value() - b, 1.0);
}
Var operator-(double a, const Var& b) {
  return unary(b, Op::kSub, a - b.value(), -1.0);
}

Var operator*(const Var& a, const Var& b) {
  return binary(a, b, Op::kMul, a.value() * b.value(), b.value(), a.value());
}
Var operator*(const Var& a, double b) {
  return unary(a, Op::kMul, a.value() * b, b);
}
Var operator*(double a, const Var& b) { return b * a; }

Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.value();
  const double v = a.value() * inv;
  return binary(a, b, Op::kDiv, v, inv, -v * inv);
}
Var operator/(const Var& a, double b) {
  return unary(a, Op::kDiv, a.value() / b, 1.0 / b);
}
Var operator/(double a, const Var& b) {
  const double v = a / b.value();
  return unary(b, Op::kDiv, v, -v / b.value());
}

Var operator-(const Var& a) { return unary(a, Op::kNeg, -a.value(), -1.0); }

Var exp(const Var& x) {
  const double v = std::exp(x.value());
  return unary(x, Op::kExp, v, v);
}

Var log(const Var& x) {
  return unary(x, Op::kLog, std::log(x.value()), 1.0 / x.value());
}

Var tanh(const Var& x) {
  const double v = std::tanh(x.value());
  return unary(x, Op::kTanh, v, 1.0 - v * v);
}

Var elu(const Var& x) {
  const double xv = x.value();
  if (xv > 0.0) return unary(x, Op::kElu, xv, 1.0);
  return unary(x, Op::kElu, std::expm1(xv), std::exp(xv));
}

Var softplus(const Var& x) {
  return unary(x, Op::kSoftplus, softplus(x.value()), sigmoid(x.value()));
}

Var lgamma(const Var& x) {
  return unary(x, Op::kLgamma, special::lgamma(x.value()),
               special::digamma(x.value()));
}

Var atan(const Var& x) {
  const double xv = x.value();
  return unary(x, Op::kAtan, std::atan(xv), 1.0 / (1.0 + xv * xv));
}

Var sqrt(const Var& x) {
  const double v = std::sqrt(x.value());
  return unary(x, Op::kSqrt, v, 0.5 / v);
}

double affine(double bias, std::span<const double> w,
              std::span<const double> x, std::span<const std::uint32_t> idx) {
  double acc = bias;
  for (std::uint32_t i : idx) acc += w[i] * x[i];
  return acc;
}

Var affine(const Var& bias, std::span<const Var> w, std::span<const Var> x,
           std::span<const std::uint32_t> idx) {
  Tape* t = bias.tape();
  double acc = bias.value();
  t->push_edge(bias.id(), 1.0);
  for (std::uint32_t i : idx) {
    const Var& wi = w[i];
    const Var& xi = x[i];
    acc += wi.value() * xi.value();
    t->push_edge(wi.id(), xi.value());
    t->push_edge(xi.id(), wi.value());
  }
  return Var(t, t->commit(Op::kDot, acc), acc);
}

double affine(double bias, std::span<const double> w,
              std::span<const double> x) {
  double acc = bias;
  for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i];
  return acc;
}

Var affine(const Var& bias, std::span<const double> w,
           std::span<const Var> x) {
  Tape* t = bias.tape();
  double acc = bias.value();
  t->push_edge(bias.id(), 1.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += w[i] * x[i].value();
    t->push_edge(x[i].id(), w[i]);
  }
  return Var(t, t->commit(Op::kDot, acc), acc);
}

double sum(std::span<const double> xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc;
}

Var sum(std::span<const Var> xs) {
  if (xs.empty()) throw UsageError("sum of an empty span");
  Tape* t = xs.front().tape();
  double acc = 0.0;
  for (const Var& x : xs) {
    acc += x.value();
    t->push_edge(x.id(), 1.0);
  }
  return Var(t, t->commit(Op::kSum, acc), acc);
}

Var custom(Tape& tape, double value,
           std::initializer_list<std::pair<Var, double>> parents) {
  for (const auto& [v, partial] : parents) tape.push_edge(v.id(), partial);
  return Var(&tape, tape.commit(Op::kCustom, value), value);
}

std::vector<double> gradient(const Tape& tape, const Var& output,
                             std::span<const Var> inputs) {
  const std::vector<double> adj = tape.backward(output.id());
  std::vector<double> g(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) g[i] = adj[inputs[i].id()];
  return g;
}

namespace {

double eval_at(const ScalarFn& fn, std::span<const double> point) {
  Tape tape;
  const std::vector<Var> xs = variables(tape, point);
  return fn(xs).value();
}

}  // namespace

GradientCheck check_gradient(const ScalarFn& fn, std::span<const double> point,
                             double step) {
  Tape tape;
  const std::vector<Var> xs = variables(tape, point);
  const Var out = fn(xs);
  const std::vector<double> g = gradient(tape, out, xs);

  GradientCheck result;
  std::vector<double> probe(point.begin(), point.end());
  for (std::size_t i = 0; i < point.size(); ++i) {
    double up = std::numeric_limits<double>::quiet_NaN();
    double down = up;
    try {
      probe[i] = point[i] + step;
      up = eval_at(fn, probe);
      probe[i] = point[i] - step;
      down = eval_at(fn, probe);
    } catch (const NumericError&) {
    }
    probe[i] = point[i];
    const double fd = (up - down) / (2.0 * step);
    if (!std::isfinite(fd)) {
      ++result.nonfinite;
      continue;
    }
    const double scale = std::max({1.0, std::abs(fd), std::abs(g[i])});
    result.max_rel_error =
        std::max(result.max_rel_error, std::abs(fd - g[i]) / scale);
  }
  return result;
}

}  // namespace ataflow::ad
