#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semgest/motion/motion.hpp"
#include "semgest/text/embedding.hpp"

namespace semgest::ingest {

struct AnnotatedSample {
  std::string text_id;
  std::string text;
  std::vector<int> labels;  // one 0/1 per word
  std::string clip;         // motion file, relative to the dataset root
  std::optional<std::string> gesture_type;  // beat | representational | non-gesture
  std::optional<std::size_t> family;        // ground truth, synthetic data only

  friend bool operator==(const AnnotatedSample&, const AnnotatedSample&) = default;
};

inline const std::vector<std::string> kSplitNames = {"train", "val", "test"};

// `motions` runs parallel to `samples`.
struct Dataset {
  std::uint64_t seed = 0;
  std::string embeddings_file = "embeddings.txt";
  std::string annotations_file = "annotations.jsonl";
  std::map<std::string, std::vector<std::string>> splits;  // name -> text ids
  std::vector<AnnotatedSample> samples;
  std::vector<motion::MotionClip> motions;
  text::EmbeddingProvider embeddings;

  std::size_t index_of(const std::string& text_id) const;
  // Sample indices of one split, in split order.
  std::vector<std::size_t> split(const std::string& name) const;
};

// Reads `<root>/manifest.json` and everything it references. Every violation
// found is listed in a single ValidationError; nothing is returned partially.
Dataset load_dataset(const std::filesystem::path& manifest);
// Writes manifest.json, the annotation lines, the embedding table and the
// motion files under `root`.
void save_dataset(const Dataset& dataset, const std::filesystem::path& root);

// Same checks as load_dataset, on an in-memory dataset.
void validate_dataset(const Dataset& dataset);

nlohmann::json annotation_json(const AnnotatedSample& sample);
AnnotatedSample annotation_from_json(const nlohmann::json& doc);

}  // namespace semgest::ingest
