#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "semgest/motion/motion.hpp"
#include "semgest/nd/params.hpp"

namespace semgest::contrastive {

struct GestureEncoderConfig {
  std::size_t feature_dim = 32;
  std::size_t hidden = 64;
  std::size_t min_len = 5;
  std::size_t max_len = 12;

  friend bool operator==(const GestureEncoderConfig&, const GestureEncoderConfig&) = default;
};

// Parameters: "g.enc" bi-LSTM over key poses, "g.head" linear map to f_g,
// "g.dec" recurrent decoder from f_g back to key poses.
struct GestureModel {
  GestureEncoderConfig config;
  nd::ParamSet params;
};

GestureModel init_gesture_model(const GestureEncoderConfig& config, std::uint64_t seed);

// f_g (1 x feature_dim) from an n x 24 key-pose matrix.
nd::Var gesture_feature_graph(const nd::Bound& p, const GestureEncoderConfig& config, nd::Var seq);
// n x 24 reconstruction from f_g.
nd::Var gesture_decode_graph(const nd::Bound& p, const GestureEncoderConfig& config,
                             nd::Var feature, std::size_t n);

std::vector<double> encode_gesture(const GestureModel& model, std::span<const motion::Pose> poses);

nlohmann::json gesture_model_to_json(const GestureModel& model);
GestureModel gesture_model_from_json(const nlohmann::json& doc);

}  // namespace semgest::contrastive
