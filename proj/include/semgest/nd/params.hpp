#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "semgest/nd/tape.hpp"
#include "semgest/nd/tensor.hpp"

namespace semgest::nd {

// Named trainable tensors. std::map keeps iteration order stable, which the
// optimizer and the persisted format rely on.
using ParamSet = std::map<std::string, Tensor>;

// Parameters placed on a tape for one forward/backward pass.
class Bound {
 public:
  Bound(Tape& tape, const ParamSet& params, bool trainable);

  Var operator[](const std::string& name) const;
  bool has(const std::string& name) const { return vars_.count(name) != 0; }
  Tape& tape() const { return *tape_; }
  // Gradients for every bound parameter (zeros where the loss does not reach).
  ParamSet gradients(const Gradients& grads) const;

 private:
  Tape* tape_;
  std::map<std::string, Var> vars_;
};

// Element-wise accumulate `src` into `dst` (same names and shapes).
void accumulate(ParamSet& dst, const ParamSet& src, double weight = 1.0);

// Versioned JSON encoding; tensor payloads are base64 of little-endian
// float64 so the round trip is bit-exact.
nlohmann::json params_to_json(const ParamSet& params);
ParamSet params_from_json(const nlohmann::json& doc);

std::string base64_encode(const std::string& bytes);
std::string base64_decode(const std::string& text);

}  // namespace semgest::nd
