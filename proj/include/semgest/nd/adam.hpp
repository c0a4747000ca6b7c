#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "semgest/nd/params.hpp"

namespace semgest::nd {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::uint64_t step = 0;
  ParamSet first_moment;
  ParamSet second_moment;
};

AdamState make_adam(const ParamSet& params, AdamOptions options = {});

// One bias-corrected Adam update. Parameters without a gradient entry are
// left alone; a gradient for an unknown parameter is a ShapeError.
void adam_step(AdamState& state, ParamSet& params, const ParamSet& grads);

}  // namespace semgest::nd
