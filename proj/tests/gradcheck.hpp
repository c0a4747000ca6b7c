#pragma once

// Central finite-difference oracle for gradient checks. Independent of the
// tape: it only ever evaluates the forward loss.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "semgest/nd/params.hpp"
#include "semgest/nd/rng.hpp"

namespace semgest::testing {

// Builds the loss on `tape` from `params` (bound as trainable) and returns it.
using LossBuilder = std::function<nd::Var(nd::Tape& tape, const nd::Bound& params)>;

struct GradCheckResult {
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  std::size_t coordinates = 0;
  double analytic_norm = 0.0;
};

inline double evaluate_loss(const LossBuilder& build, const nd::ParamSet& params) {
  nd::Tape tape;
  nd::Bound bound(tape, params, false);
  return build(tape, bound).value().item();
}

// Checks up to `max_per_tensor` coordinates of every parameter tensor, chosen
// with `seed`. h = 1e-5 central differences.
inline GradCheckResult grad_check(const LossBuilder& build, const nd::ParamSet& params,
                                  std::uint64_t seed, std::size_t max_per_tensor = 12,
                                  double h = 1e-5) {
  nd::Tape tape;
  nd::Bound bound(tape, params, true);
  const nd::Var loss = build(tape, bound);
  const nd::ParamSet analytic = bound.gradients(tape.backward(loss));

  nd::Rng rng(seed);
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  std::size_t count = 0;
  for (const auto& [name, tensor] : params) {
    const std::size_t size = tensor.size();
    std::vector<std::size_t> coords;
    if (size <= max_per_tensor) {
      for (std::size_t i = 0; i < size; ++i) coords.push_back(i);
    } else {
      for (std::size_t k = 0; k < max_per_tensor; ++k) coords.push_back(rng.below(size));
    }
    for (std::size_t i : coords) {
      nd::ParamSet plus = params, minus = params;
      plus.at(name).mutable_values()[i] += h;
      minus.at(name).mutable_values()[i] -= h;
      const double numeric = (evaluate_loss(build, plus) - evaluate_loss(build, minus)) / (2 * h);
      const double a = analytic.at(name)[i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
      ++count;
    }
  }
  const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-300});
  return {std::sqrt(diff2) / denom, count, std::sqrt(a2)};
}

}  // namespace semgest::testing
