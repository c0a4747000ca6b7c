#include "semgest/contrastive/gesture_encoder.hpp"

#include "semgest/error.hpp"
#include "semgest/nd/layers.hpp"
#include "semgest/nd/rng.hpp"
#include "semgest/vae/gesture_vae.hpp"

namespace semgest::contrastive {

using nd::Bound;
using nd::Var;

namespace {

constexpr int kGestureFormatVersion = 1;

void check_length(const GestureEncoderConfig& config, std::size_t n) {
  if (n < config.min_len || n > config.max_len) {
    throw ValidationError("gesture encoder: key-pose count " + std::to_string(n) + " outside [" +
                          std::to_string(config.min_len) + ", " + std::to_string(config.max_len) +
                          "]");
  }
}

}  // namespace

GestureModel init_gesture_model(const GestureEncoderConfig& config, std::uint64_t seed) {
  if (config.feature_dim == 0 || config.hidden == 0 || config.min_len == 0 ||
      config.min_len > config.max_len) {
    throw ValidationError("init_gesture_model: invalid configuration");
  }
  nd::Rng rng(seed);
  GestureModel model{config, {}};
  nd::init_bilstm(model.params, "g.enc", motion::kPoseDim, config.hidden, rng);
  nd::init_linear(model.params, "g.head", 2 * config.hidden, config.feature_dim, rng);
  nd::init_lstm_decoder(model.params, "g.dec", config.feature_dim, config.hidden, motion::kPoseDim,
                        rng);
  return model;
}

Var gesture_feature_graph(const Bound& p, const GestureEncoderConfig& config, Var seq) {
  check_length(config, seq.value().rows());
  return nd::linear(p, "g.head", nd::bilstm_encode(p, "g.enc", seq, config.hidden));
}

Var gesture_decode_graph(const Bound& p, const GestureEncoderConfig& config, Var feature,
                         std::size_t n) {
  check_length(config, n);
  return nd::lstm_decode(p, "g.dec", feature, n, config.hidden);
}

std::vector<double> encode_gesture(const GestureModel& model, std::span<const motion::Pose> poses) {
  nd::Tape tape;
  Bound p(tape, model.params, false);
  const nd::Tensor f =
      gesture_feature_graph(p, model.config, tape.constant(vae::pose_matrix(poses))).value();
  return {f.values().begin(), f.values().end()};
}

nlohmann::json gesture_model_to_json(const GestureModel& model) {
  const GestureEncoderConfig& c = model.config;
  return {{"format", "semgest-gesture"},
          {"version", kGestureFormatVersion},
          {"config",
           {{"feature_dim", c.feature_dim},
            {"hidden", c.hidden},
            {"min_len", c.min_len},
            {"max_len", c.max_len}}},
          {"params", nd::params_to_json(model.params)}};
}

GestureModel gesture_model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "semgest-gesture" || doc.at("version") != kGestureFormatVersion) {
      throw ValidationError("gesture model document: unexpected format or version");
    }
    const auto& c = doc.at("config");
    GestureEncoderConfig config{c.at("feature_dim").get<std::size_t>(),
                                c.at("hidden").get<std::size_t>(),
                                c.at("min_len").get<std::size_t>(),
                                c.at("max_len").get<std::size_t>()};
    GestureModel model{config, nd::params_from_json(doc.at("params"))};
    const GestureModel reference = init_gesture_model(config, 0);
    for (const auto& [name, t] : reference.params) {
      auto it = model.params.find(name);
      if (it == model.params.end() || it->second.shape() != t.shape()) {
        throw ValidationError("gesture model document: parameter '" + name +
                              "' missing or misshapen");
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("gesture model document: ") + e.what());
  }
}

}  // namespace semgest::contrastive
