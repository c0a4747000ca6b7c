#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "semgest/contrastive/gesture_encoder.hpp"
#include "semgest/text/text_encoder.hpp"

namespace semgest::contrastive {

// Both trained encoders of the multimodal space, tagged with the hash of the
// pipeline configuration that produced them.
struct Checkpoint {
  std::string config_hash;
  text::TextModel text;
  GestureModel gesture;
};

nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws ConfigMismatchError naming `what` when the hashes differ.
void require_config(const std::string& expected, const std::string& actual, const std::string& what);

}  // namespace semgest::contrastive
