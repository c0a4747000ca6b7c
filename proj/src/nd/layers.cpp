#include "semgest/nd/layers.hpp"

#include <cmath>
#include <vector>

#include "semgest/error.hpp"

namespace semgest::nd {
namespace {

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor(std::move(shape), std::move(v));
}

}  // namespace

void init_linear(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t out,
                 Rng& rng, bool bias) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  params.insert_or_assign(prefix + ".w", uniform_tensor({in, out}, bound, rng));
  if (bias) params.insert_or_assign(prefix + ".b", uniform_tensor({1, out}, bound, rng));
}

Var linear(const Bound& p, const std::string& prefix, Var x) {
  Var y = matmul(x, p[prefix + ".w"]);
  if (p.has(prefix + ".b")) y = add(y, p[prefix + ".b"]);
  return y;
}

void init_lstm(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t hidden,
               Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  params.insert_or_assign(prefix + ".wx", uniform_tensor({in, 4 * hidden}, bound, rng));
  params.insert_or_assign(prefix + ".wh", uniform_tensor({hidden, 4 * hidden}, bound, rng));
  params.insert_or_assign(prefix + ".b", uniform_tensor({1, 4 * hidden}, bound, rng));
}

LstmState lstm_zero_state(Tape& tape, std::size_t hidden) {
  return {tape.constant(Tensor::zeros({1, hidden})), tape.constant(Tensor::zeros({1, hidden}))};
}

LstmState lstm_step(const Bound& p, const std::string& prefix, Var x, LstmState state,
                    std::size_t hidden) {
  Var gates = matmul(x, p[prefix + ".wx"]) + matmul(state.h, p[prefix + ".wh"]);
  gates = add(gates, p[prefix + ".b"]);
  const std::size_t h = hidden;
  Var in_gate = sigmoid(slice(gates, 0, h, 1));
  Var forget = sigmoid(slice(gates, h, 2 * h, 1));
  Var cand = tanh(slice(gates, 2 * h, 3 * h, 1));
  Var out_gate = sigmoid(slice(gates, 3 * h, 4 * h, 1));
  Var c = forget * state.c + in_gate * cand;
  return {out_gate * tanh(c), c};
}

void init_bilstm(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t hidden,
                 Rng& rng) {
  init_lstm(params, prefix + ".fwd", in, hidden, rng);
  init_lstm(params, prefix + ".bwd", in, hidden, rng);
}

Var bilstm_encode(const Bound& p, const std::string& prefix, Var seq, std::size_t hidden) {
  const std::size_t n = seq.value().rows();
  if (seq.value().rank() != 2 || n == 0) {
    throw ShapeError("bilstm_encode: expected a non-empty n x d sequence, got " +
                     shape_string(seq.shape()));
  }
  Tape& tape = p.tape();
  LstmState fwd = lstm_zero_state(tape, hidden);
  LstmState bwd = lstm_zero_state(tape, hidden);
  for (std::size_t t = 0; t < n; ++t) {
    fwd = lstm_step(p, prefix + ".fwd", slice(seq, t, t + 1, 0), fwd, hidden);
    bwd = lstm_step(p, prefix + ".bwd", slice(seq, n - 1 - t, n - t, 0), bwd, hidden);
  }
  const Var both[] = {fwd.h, bwd.h};
  return concat(both, 1);
}

void init_lstm_decoder(ParamSet& params, const std::string& prefix, std::size_t cond,
                       std::size_t hidden, std::size_t out, Rng& rng) {
  init_lstm(params, prefix + ".cell", cond, hidden, rng);
  init_linear(params, prefix + ".out", hidden, out, rng);
}

Var lstm_decode(const Bound& p, const std::string& prefix, Var cond, std::size_t steps,
                std::size_t hidden) {
  if (steps == 0) throw ValidationError("lstm_decode: zero steps");
  LstmState state = lstm_zero_state(p.tape(), hidden);
  std::vector<Var> hs;
  hs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    state = lstm_step(p, prefix + ".cell", cond, state, hidden);
    hs.push_back(state.h);
  }
  return linear(p, prefix + ".out", concat(hs, 0));
}

}  // namespace semgest::nd
