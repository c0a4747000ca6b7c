#include "semgest/contrastive/checkpoint.hpp"

#include "semgest/error.hpp"
#include "semgest/json_file.hpp"

namespace semgest::contrastive {

namespace {
constexpr int kCheckpointFormatVersion = 1;
}

nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint) {
  return {{"format", "semgest-checkpoint"},
          {"version", kCheckpointFormatVersion},
          {"config_hash", checkpoint.config_hash},
          {"text", text::text_model_to_json(checkpoint.text)},
          {"gesture", gesture_model_to_json(checkpoint.gesture)}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "semgest-checkpoint" || doc.at("version") != kCheckpointFormatVersion) {
      throw ValidationError("checkpoint document: unexpected format or version");
    }
    Checkpoint c{doc.at("config_hash").get<std::string>(), text::text_model_from_json(doc.at("text")),
                 gesture_model_from_json(doc.at("gesture"))};
    if (c.text.config.feature_dim != c.gesture.config.feature_dim) {
      throw ValidationError("checkpoint document: text and gesture feature sizes differ");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint document: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_json_file(checkpoint_to_json(checkpoint), path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_json_file(path));
}

void require_config(const std::string& expected, const std::string& actual,
                    const std::string& what) {
  if (expected != actual) {
    throw ConfigMismatchError(what + " was built under config " + actual + ", expected " +
                              expected);
  }
}

}  // namespace semgest::contrastive
