#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "semgest/contrastive/checkpoint.hpp"
#include "semgest/motion/motion.hpp"

namespace semgest::retrieval {

struct LibraryEntry {
  std::string clip_id;
  std::vector<double> feature;  // f_g
  std::size_t cluster = 0;
};

// Training gestures with their positions in the multimodal space. `clips`
// runs parallel to `entries`.
struct GestureLibrary {
  std::string config_hash;
  std::vector<LibraryEntry> entries;
  std::vector<motion::MotionClip> clips;

  std::size_t size() const { return entries.size(); }
  std::size_t feature_dim() const { return entries.empty() ? 0 : entries.front().feature.size(); }
  // Index of `clip_id`; throws ValidationError when absent.
  std::size_t find(const std::string& clip_id) const;
};

struct LibrarySource {
  motion::MotionClip clip;
  std::vector<motion::Pose> keyposes;
  std::size_t cluster = 0;
};

GestureLibrary build_library(const std::vector<LibrarySource>& sources,
                             const contrastive::Checkpoint& checkpoint);

// `dir/library.json` holds the index; clips go to `dir/motions/<clip_id>.json`.
void save_library(const GestureLibrary& library, const std::filesystem::path& dir);
GestureLibrary load_library(const std::filesystem::path& dir);
nlohmann::json library_index_json(const GestureLibrary& library);

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
  double probability = 0.0;
};

// The k nearest entries by L2 distance, closest first (ties by index), with
// sampling weights softmax(-d / tau), tau = mean of the k distances. When all
// k distances are zero the weights are uniform.
std::vector<Neighbor> nearest(const std::vector<double>& query, const GestureLibrary& library,
                              std::size_t k);

// One neighbor drawn from `nearest(query, library, k)` with a seeded stream.
Neighbor retrieve(const std::vector<double>& query, const GestureLibrary& library, std::size_t k,
                  std::uint64_t seed);

}  // namespace semgest::retrieval
