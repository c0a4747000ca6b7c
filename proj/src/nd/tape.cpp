#include "semgest/nd/tape.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "semgest/error.hpp"

namespace semgest::nd {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

enum class Broadcast : std::size_t { kSame = 0, kScalar = 1, kRow = 2, kCol = 3 };

[[noreturn]] void shape_fail(OpKind kind, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op_name(kind)) + ": incompatible shapes " + shape_string(a) +
                   " and " + shape_string(b));
}

Tape& tape_of(Var a) {
  if (a.tape == nullptr) throw ValidationError("variable is not bound to a tape");
  return *a.tape;
}

Tape& tape_of(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw ValidationError("operands live on different tapes");
  }
  return *a.tape;
}

// Checks finiteness with the op name in the diagnostic, then records.
Var finish(OpKind kind, Tape& tape, std::vector<std::size_t> inputs, Shape shape,
           std::vector<double> values, std::vector<double> aux_real = {},
           std::vector<std::size_t> aux_index = {}) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite value produced by " + std::string(op_name(kind)));
    }
  }
  return tape.record(kind, std::move(inputs), Tensor(std::move(shape), std::move(values)),
                     std::move(aux_real), std::move(aux_index));
}

Broadcast broadcast_mode(OpKind kind, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (b.size() == 1) return Broadcast::kScalar;
  if (a.rank() == 2) {
    const bool row_shaped = (b.rank() == 2 && b.shape()[0] == 1) || b.rank() == 1;
    if (row_shaped && b.cols() == a.cols()) return Broadcast::kRow;
    if (kind == OpKind::kMul && b.rank() == 2 && b.shape()[1] == 1 && b.shape()[0] == a.rows()) {
      return Broadcast::kCol;
    }
  }
  shape_fail(kind, a.shape(), b.shape());
}

std::size_t rhs_index(Broadcast mode, std::size_t i, std::size_t cols) {
  switch (mode) {
    case Broadcast::kSame:
      return i;
    case Broadcast::kScalar:
      return 0;
    case Broadcast::kRow:
      return i % cols;
    case Broadcast::kCol:
      return i / cols;
  }
  return i;
}

template <class F>
Var binary(OpKind kind, Var a, Var b, F f) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Broadcast mode = broadcast_mode(kind, av, bv);
  const std::size_t cols = av.cols();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[rhs_index(mode, i, cols)]);
  return finish(kind, tape, {a.id, b.id}, av.shape(), std::move(out), {},
                {static_cast<std::size_t>(mode)});
}

template <class F>
Var unary(OpKind kind, Var a, F f, std::vector<double> aux = {}) {
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  return finish(kind, tape, {a.id}, av.shape(), std::move(out), std::move(aux));
}

void accumulate(std::vector<std::optional<Tensor>>& grads, std::size_t id, const Shape& shape,
                const std::vector<double>& delta) {
  if (!grads[id]) {
    grads[id] = Tensor(shape, delta);
    return;
  }
  auto dst = grads[id]->mutable_values();
  for (std::size_t i = 0; i < delta.size(); ++i) dst[i] += delta[i];
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDiv: return "div";
    case OpKind::kScale: return "scale";
    case OpKind::kAddConst: return "add_const";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kReshape: return "reshape";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kTanh: return "tanh";
    case OpKind::kRelu: return "relu";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSquare: return "square";
    case OpKind::kSqrt: return "sqrt";
    case OpKind::kMax0: return "max0";
    case OpKind::kClamp: return "clamp";
    case OpKind::kSqDist: return "sq_dist";
  }
  return "unknown";
}

const Tensor& Var::value() const {
  if (tape == nullptr) throw ValidationError("variable is not bound to a tape");
  return tape->value(id);
}

Tensor Gradients::of(Var v) const {
  if (has(v)) return *grads_[v.id];
  return Tensor::zeros(v.value().shape());
}

Var Tape::leaf(Tensor value) {
  const bool grad = value.requires_grad();
  nodes_.push_back(Node{OpKind::kLeaf, {}, std::move(value), grad, {}, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  value.set_requires_grad(false);
  return leaf(std::move(value));
}

Var Tape::record(OpKind kind, std::vector<std::size_t> inputs, Tensor value,
                 std::vector<double> aux_real, std::vector<std::size_t> aux_index) {
  bool grad = false;
  for (std::size_t id : inputs) grad = grad || nodes_.at(id).requires_grad;
  nodes_.push_back(Node{kind, std::move(inputs), std::move(value), grad, std::move(aux_real),
                        std::move(aux_index)});
  return Var{this, nodes_.size() - 1};
}

Gradients Tape::backward(Var loss) const {
  if (loss.tape != this) throw ValidationError("backward: loss was recorded on another tape");
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " +
                     shape_string(loss.value().shape()));
  }
  std::vector<std::optional<Tensor>> grads(nodes_.size());
  grads[loss.id] = Tensor::filled(loss.value().shape(), 1.0);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (!grads[id] || !node.requires_grad || node.kind == OpKind::kLeaf) continue;
    backprop_node(node, *grads[id], grads);
  }
  // Intermediate gradients are kept; callers pick the ones they need.
  return Gradients(std::move(grads));
}

void Tape::backprop_node(const Node& node, const Tensor& grad,
                         std::vector<std::optional<Tensor>>& grads) const {
  const auto& in = node.inputs;
  const auto g = grad.values();
  const Tensor& y = node.value;
  auto wants = [&](std::size_t k) { return nodes_[in[k]].requires_grad; };
  auto input = [&](std::size_t k) -> const Tensor& { return nodes_[in[k]].value; };

  auto unary_grad = [&](auto dfdx) {
    if (!wants(0)) return;
    const Tensor& x = input(0);
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i] * dfdx(x[i], y[i]);
    accumulate(grads, in[0], x.shape(), d);
  };

  auto binary_grad = [&](auto dfda, auto dfdb) {
    const Tensor& a = input(0);
    const Tensor& b = input(1);
    const auto mode = static_cast<Broadcast>(node.aux_index[0]);
    const std::size_t cols = a.cols();
    std::vector<double> da(wants(0) ? a.size() : 0);
    std::vector<double> db(wants(1) ? b.size() : 0, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::size_t j = rhs_index(mode, i, cols);
      if (!da.empty()) da[i] = g[i] * dfda(a[i], b[j]);
      if (!db.empty()) db[j] += g[i] * dfdb(a[i], b[j]);
    }
    if (!da.empty()) accumulate(grads, in[0], a.shape(), da);
    if (!db.empty()) accumulate(grads, in[1], b.shape(), db);
  };

  switch (node.kind) {
    case OpKind::kLeaf:
      return;
    case OpKind::kMatmul: {
      const Tensor& a = input(0);
      const Tensor& b = input(1);
      ConstMap gm(g.data(), y.rows(), y.cols());
      if (wants(0)) {
        std::vector<double> da(a.size());
        MutMap(da.data(), a.rows(), a.cols()).noalias() =
            gm * ConstMap(b.values().data(), b.rows(), b.cols()).transpose();
        accumulate(grads, in[0], a.shape(), da);
      }
      if (wants(1)) {
        std::vector<double> db(b.size());
        MutMap(db.data(), b.rows(), b.cols()).noalias() =
            ConstMap(a.values().data(), a.rows(), a.cols()).transpose() * gm;
        accumulate(grads, in[1], b.shape(), db);
      }
      return;
    }
    case OpKind::kAdd:
      binary_grad([](double, double) { return 1.0; }, [](double, double) { return 1.0; });
      return;
    case OpKind::kSub:
      binary_grad([](double, double) { return 1.0; }, [](double, double) { return -1.0; });
      return;
    case OpKind::kMul:
      binary_grad([](double, double b) { return b; }, [](double a, double) { return a; });
      return;
    case OpKind::kDiv:
      binary_grad([](double, double b) { return 1.0 / b; },
                  [](double a, double b) { return -a / (b * b); });
      return;
    case OpKind::kScale: {
      const double f = node.aux_real[0];
      unary_grad([f](double, double) { return f; });
      return;
    }
    case OpKind::kAddConst:
    case OpKind::kReshape:
      unary_grad([](double, double) { return 1.0; });
      return;
    case OpKind::kConcat: {
      // aux_index: axis, then the start offset of every part along that axis.
      const std::size_t axis = node.aux_index[0];
      for (std::size_t k = 0; k < in.size(); ++k) {
        if (!wants(k)) continue;
        const Tensor& part = input(k);
        const std::size_t offset = node.aux_index[1 + k];
        std::vector<double> d(part.size());
        if (y.rank() == 1 || axis == 0) {
          const std::size_t start = y.rank() == 1 ? offset : offset * y.cols();
          std::copy_n(g.begin() + start, part.size(), d.begin());
        } else {
          for (std::size_t r = 0; r < part.rows(); ++r) {
            for (std::size_t c = 0; c < part.cols(); ++c) {
              d[r * part.cols() + c] = g[r * y.cols() + offset + c];
            }
          }
        }
        accumulate(grads, in[k], part.shape(), d);
      }
      return;
    }
    case OpKind::kSlice: {
      if (!wants(0)) return;
      const Tensor& x = input(0);
      const std::size_t begin = node.aux_index[0];
      const std::size_t axis = node.aux_index[1];
      std::vector<double> d(x.size(), 0.0);
      if (x.rank() == 1 || axis == 0) {
        const std::size_t start = x.rank() == 1 ? begin : begin * x.cols();
        std::copy(g.begin(), g.end(), d.begin() + start);
      } else {
        for (std::size_t r = 0; r < y.rows(); ++r) {
          for (std::size_t c = 0; c < y.cols(); ++c) {
            d[r * x.cols() + begin + c] = g[r * y.cols() + c];
          }
        }
      }
      accumulate(grads, in[0], x.shape(), d);
      return;
    }
    case OpKind::kSigmoid:
      unary_grad([](double, double s) { return s * (1.0 - s); });
      return;
    case OpKind::kTanh:
      unary_grad([](double, double t) { return 1.0 - t * t; });
      return;
    case OpKind::kRelu:
    case OpKind::kMax0:
      unary_grad([](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
      return;
    case OpKind::kExp:
      unary_grad([](double, double e) { return e; });
      return;
    case OpKind::kLog:
      unary_grad([](double x, double) { return 1.0 / x; });
      return;
    case OpKind::kSquare:
      unary_grad([](double x, double) { return 2.0 * x; });
      return;
    case OpKind::kSqrt:
      unary_grad([](double, double r) { return r > 0.0 ? 0.5 / r : 0.0; });
      return;
    case OpKind::kClamp: {
      const double lo = node.aux_real[0];
      const double hi = node.aux_real[1];
      unary_grad([lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
      return;
    }
    case OpKind::kSum:
    case OpKind::kMean: {
      if (!wants(0)) return;
      const Tensor& x = input(0);
      const double per = node.kind == OpKind::kSum ? g[0] : g[0] / static_cast<double>(x.size());
      accumulate(grads, in[0], x.shape(), std::vector<double>(x.size(), per));
      return;
    }
    case OpKind::kSqDist: {
      const Tensor& a = input(0);
      const Tensor& b = input(1);
      const std::size_t m = a.rows(), n = b.rows(), d = a.cols();
      std::vector<double> da(wants(0) ? a.size() : 0, 0.0);
      std::vector<double> db(wants(1) ? b.size() : 0, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double gij = g[i * n + j];
          if (gij == 0.0) continue;
          for (std::size_t k = 0; k < d; ++k) {
            const double diff = 2.0 * gij * (a[i * d + k] - b[j * d + k]);
            if (!da.empty()) da[i * d + k] += diff;
            if (!db.empty()) db[j * d + k] -= diff;
          }
        }
      }
      if (!da.empty()) accumulate(grads, in[0], a.shape(), da);
      if (!db.empty()) accumulate(grads, in[1], b.shape(), db);
      return;
    }
  }
}

Var matmul(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
    shape_fail(OpKind::kMatmul, av.shape(), bv.shape());
  }
  std::vector<double> out(av.rows() * bv.cols());
  MutMap(out.data(), av.rows(), bv.cols()).noalias() =
      ConstMap(av.values().data(), av.rows(), av.cols()) *
      ConstMap(bv.values().data(), bv.rows(), bv.cols());
  return finish(OpKind::kMatmul, tape, {a.id, b.id}, {av.rows(), bv.cols()}, std::move(out));
}

Var add(Var a, Var b) {
  return binary(OpKind::kAdd, a, b, [](double x, double y) { return x + y; });
}
Var sub(Var a, Var b) {
  return binary(OpKind::kSub, a, b, [](double x, double y) { return x - y; });
}
Var mul(Var a, Var b) {
  return binary(OpKind::kMul, a, b, [](double x, double y) { return x * y; });
}
Var div(Var a, Var b) {
  return binary(OpKind::kDiv, a, b, [](double x, double y) { return x / y; });
}

Var scale(Var a, double factor) {
  return unary(OpKind::kScale, a, [factor](double x) { return x * factor; }, {factor});
}

Var add_const(Var a, double offset) {
  return unary(OpKind::kAddConst, a, [offset](double x) { return x + offset; }, {offset});
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Tape& tape = tape_of(parts[0]);
  const Tensor& first = parts[0].value();
  const std::size_t rank = first.rank();
  if (rank == 0 || rank > 2 || (rank == 1 && axis != 0) || axis > 1) {
    throw ShapeError("concat: unsupported rank/axis for shape " + shape_string(first.shape()));
  }
  std::vector<std::size_t> ids;
  std::vector<std::size_t> aux{axis};
  std::size_t extent = 0;
  for (Var p : parts) {
    tape_of(parts[0], p);
    const Tensor& t = p.value();
    const bool fits = t.rank() == rank &&
                      (rank == 1 || (axis == 0 ? t.cols() == first.cols() : t.rows() == first.rows()));
    if (!fits) shape_fail(OpKind::kConcat, first.shape(), t.shape());
    ids.push_back(p.id);
    aux.push_back(extent);
    extent += rank == 1 ? t.size() : t.shape()[axis];
  }
  Shape shape = rank == 1 ? Shape{extent}
                          : (axis == 0 ? Shape{extent, first.cols()} : Shape{first.rows(), extent});
  std::vector<double> out(shape_size(shape));
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& t = parts[k].value();
    const std::size_t offset = aux[1 + k];
    if (rank == 1 || axis == 0) {
      const std::size_t start = rank == 1 ? offset : offset * first.cols();
      std::copy(t.values().begin(), t.values().end(), out.begin() + start);
    } else {
      for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.cols(); ++c) out[r * extent + offset + c] = t.at(r, c);
      }
    }
  }
  return finish(OpKind::kConcat, tape, std::move(ids), std::move(shape), std::move(out), {},
                std::move(aux));
}

Var slice(Var a, std::size_t begin, std::size_t end, std::size_t axis) {
  Tape& tape = tape_of(a);
  const Tensor& x = a.value();
  const std::size_t rank = x.rank();
  if (rank == 0 || rank > 2 || (rank == 1 && axis != 0) || axis > 1) {
    throw ShapeError("slice: unsupported rank/axis for shape " + shape_string(x.shape()));
  }
  const std::size_t extent = rank == 1 ? x.size() : x.shape()[axis];
  if (begin >= end || end > extent) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of bounds for shape " + shape_string(x.shape()));
  }
  const std::size_t len = end - begin;
  Shape shape = rank == 1 ? Shape{len} : (axis == 0 ? Shape{len, x.cols()} : Shape{x.rows(), len});
  std::vector<double> out;
  out.reserve(shape_size(shape));
  if (rank == 1) {
    out.assign(x.values().begin() + begin, x.values().begin() + end);
  } else if (axis == 0) {
    out.assign(x.values().begin() + begin * x.cols(), x.values().begin() + end * x.cols());
  } else {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = begin; c < end; ++c) out.push_back(x.at(r, c));
    }
  }
  return finish(OpKind::kSlice, tape, {a.id}, std::move(shape), std::move(out), {}, {begin, axis});
}

Var reshape(Var a, Shape shape) {
  Tape& tape = tape_of(a);
  const Tensor& x = a.value();
  if (shape_size(shape) != x.size()) shape_fail(OpKind::kReshape, x.shape(), shape);
  return finish(OpKind::kReshape, tape, {a.id}, std::move(shape), x.storage());
}

Var sigmoid(Var a) { return unary(OpKind::kSigmoid, a, sigmoid_scalar); }
Var tanh(Var a) { return unary(OpKind::kTanh, a, [](double x) { return std::tanh(x); }); }
Var relu(Var a) { return unary(OpKind::kRelu, a, [](double x) { return x > 0.0 ? x : 0.0; }); }
Var max0(Var a) { return unary(OpKind::kMax0, a, [](double x) { return x > 0.0 ? x : 0.0; }); }
Var exp(Var a) { return unary(OpKind::kExp, a, [](double x) { return std::exp(x); }); }
Var square(Var a) { return unary(OpKind::kSquare, a, [](double x) { return x * x; }); }

Var log(Var a) {
  for (double v : a.value().values()) {
    if (!(v > 0.0)) throw NumericError("log: non-positive input " + std::to_string(v));
  }
  return unary(OpKind::kLog, a, [](double x) { return std::log(x); });
}

Var sqrt(Var a) {
  for (double v : a.value().values()) {
    if (v < 0.0) throw NumericError("sqrt: negative input " + std::to_string(v));
  }
  return unary(OpKind::kSqrt, a, [](double x) { return std::sqrt(x); });
}

Var clamp(Var a, double lo, double hi) {
  if (!(lo <= hi)) throw ValidationError("clamp: empty interval");
  return unary(OpKind::kClamp, a, [lo, hi](double x) { return std::clamp(x, lo, hi); }, {lo, hi});
}

Var sum(Var a) {
  Tape& tape = tape_of(a);
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return finish(OpKind::kSum, tape, {a.id}, {1}, {s});
}

Var mean(Var a) {
  Tape& tape = tape_of(a);
  const Tensor& x = a.value();
  if (x.size() == 0) throw ShapeError("mean: empty tensor");
  double s = 0.0;
  for (double v : x.values()) s += v;
  return finish(OpKind::kMean, tape, {a.id}, {1}, {s / static_cast<double>(x.size())});
}

Var sq_dist(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.cols()) {
    shape_fail(OpKind::kSqDist, av.shape(), bv.shape());
  }
  const std::size_t m = av.rows(), n = bv.rows(), d = av.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = av[i * d + k] - bv[j * d + k];
        s += diff * diff;
      }
      out[i * n + j] = s;
    }
  }
  return finish(OpKind::kSqDist, tape, {a.id, b.id}, {m, n}, std::move(out));
}

}  // namespace semgest::nd
