#include "semgest/nd/adam.hpp"

#include <cmath>

#include "semgest/error.hpp"

namespace semgest::nd {

AdamState make_adam(const ParamSet& params, AdamOptions options) {
  AdamState state{options, 0, {}, {}};
  for (const auto& [name, t] : params) {
    state.first_moment.emplace(name, Tensor::zeros(t.shape()));
    state.second_moment.emplace(name, Tensor::zeros(t.shape()));
  }
  return state;
}

void adam_step(AdamState& state, ParamSet& params, const ParamSet& grads) {
  const AdamOptions& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(o.beta1, t);
  const double bc2 = 1.0 - std::pow(o.beta2, t);
  for (const auto& [name, g] : grads) {
    auto p = params.find(name);
    auto m = state.first_moment.find(name);
    auto v = state.second_moment.find(name);
    if (p == params.end() || m == state.first_moment.end() || v == state.second_moment.end()) {
      throw ShapeError("adam_step: gradient for unknown parameter '" + name + "'");
    }
    if (p->second.shape() != g.shape() || m->second.shape() != g.shape()) {
      throw ShapeError("adam_step: shape mismatch for '" + name + "': param " +
                       shape_string(p->second.shape()) + ", grad " + shape_string(g.shape()));
    }
    auto pv = p->second.mutable_values();
    auto mv = m->second.mutable_values();
    auto vv = v->second.mutable_values();
    const auto gv = g.values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      mv[i] = o.beta1 * mv[i] + (1.0 - o.beta1) * gv[i];
      vv[i] = o.beta2 * vv[i] + (1.0 - o.beta2) * gv[i] * gv[i];
      const double mhat = mv[i] / bc1;
      const double vhat = vv[i] / bc2;
      pv[i] -= o.lr * mhat / (std::sqrt(vhat) + o.eps);
    }
    p->second.check_finite("adam_step on '" + name + "'");
  }
}

}  // namespace semgest::nd
