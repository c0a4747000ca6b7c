#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "semgest/nd/tensor.hpp"

namespace semgest::nd {

enum class OpKind {
  kLeaf,
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kScale,
  kAddConst,
  kConcat,
  kSlice,
  kReshape,
  kSigmoid,
  kTanh,
  kRelu,
  kExp,
  kLog,
  kSum,
  kMean,
  kSquare,
  kSqrt,
  kMax0,
  kClamp,
  kSqDist,
};

std::string_view op_name(OpKind kind);

class Tape;

// Handle to a node recorded on a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Gradients of one backward pass, indexed by node id.
class Gradients {
 public:
  explicit Gradients(std::vector<std::optional<Tensor>> grads) : grads_(std::move(grads)) {}

  bool has(Var v) const { return v.id < grads_.size() && grads_[v.id].has_value(); }
  // Gradient of `v`, or zeros of its shape when the loss does not depend on it.
  Tensor of(Var v) const;

 private:
  std::vector<std::optional<Tensor>> grads_;
};

// Records primitive applications in topological order and runs reverse-mode
// differentiation over them. Single-threaded; one tape per forward pass.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value);  // differentiable iff value.requires_grad()
  Var constant(Tensor value);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  OpKind kind(std::size_t id) const { return nodes_[id].kind; }
  std::span<const std::size_t> inputs(std::size_t id) const { return nodes_[id].inputs; }

  // Reverse pass from a scalar loss. Every node is visited once, newest first.
  Gradients backward(Var loss) const;

  // Used by the primitive functions below; not meant for direct calls.
  Var record(OpKind kind, std::vector<std::size_t> inputs, Tensor value,
             std::vector<double> aux_real = {}, std::vector<std::size_t> aux_index = {});

 private:
  struct Node {
    OpKind kind;
    std::vector<std::size_t> inputs;
    Tensor value;
    bool requires_grad;
    std::vector<double> aux_real;
    std::vector<std::size_t> aux_index;
  };

  void backprop_node(const Node& node, const Tensor& grad,
                     std::vector<std::optional<Tensor>>& grads) const;

  std::vector<Node> nodes_;
};

// Primitives. Binary ops accept equal shapes, a single-element right operand,
// a 1 x n row operand against m x n (row-wise bias) and, for mul only, an
// m x 1 column operand against m x n (per-row scaling).
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double factor);
Var add_const(Var a, double offset);
// Rank-1 inputs join end to end; rank-2 inputs join along `axis` (0 rows, 1 cols).
Var concat(std::span<const Var> parts, std::size_t axis = 0);
// Half-open [begin, end) along `axis`.
Var slice(Var a, std::size_t begin, std::size_t end, std::size_t axis = 0);
Var reshape(Var a, Shape shape);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var exp(Var a);
Var log(Var a);
Var sum(Var a);
Var mean(Var a);
Var square(Var a);
// Subgradient 0 at exactly 0.
Var sqrt(Var a);
// max(0, x); kept distinct from relu so loss code reads like the formulas.
Var max0(Var a);
Var clamp(Var a, double lo, double hi);
// Pairwise squared Euclidean distances between rows: (m x d, n x d) -> m x n.
Var sq_dist(Var a, Var b);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }

}  // namespace semgest::nd
