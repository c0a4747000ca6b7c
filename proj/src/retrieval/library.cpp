#include "semgest/retrieval/library.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "semgest/contrastive/gesture_encoder.hpp"
#include "semgest/error.hpp"
#include "semgest/json_file.hpp"
#include "semgest/nd/rng.hpp"

namespace semgest::retrieval {

namespace {

constexpr int kLibraryFormatVersion = 1;

// Clip ids become file names, so they are restricted to a portable set.
void check_clip_id(const std::string& id) {
  const bool ok = !id.empty() && id.front() != '.' && std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-' || c == '.';
  });
  if (!ok) throw ValidationError("library: clip id '" + id + "' is not a portable file name");
}

void check_entries(const GestureLibrary& library) {
  if (library.entries.empty()) throw ValidationError("library: no entries");
  if (library.clips.size() != library.entries.size()) {
    throw ValidationError("library: clip list does not match the entries");
  }
  std::set<std::string> seen;
  const std::size_t dim = library.feature_dim();
  for (std::size_t i = 0; i < library.entries.size(); ++i) {
    const LibraryEntry& e = library.entries[i];
    check_clip_id(e.clip_id);
    if (!seen.insert(e.clip_id).second) {
      throw ValidationError("library: duplicate clip id '" + e.clip_id + "'");
    }
    if (e.feature.empty() || e.feature.size() != dim) {
      throw ValidationError("library: entry '" + e.clip_id + "' has feature size " +
                            std::to_string(e.feature.size()) + ", expected " +
                            std::to_string(dim));
    }
    for (double v : e.feature) {
      if (!std::isfinite(v)) throw NumericError("library: entry '" + e.clip_id + "' not finite");
    }
    if (library.clips[i].clip_id != e.clip_id) {
      throw ValidationError("library: motion for '" + e.clip_id + "' carries id '" +
                            library.clips[i].clip_id + "'");
    }
  }
}

std::filesystem::path motion_path(const std::string& clip_id) {
  return std::filesystem::path("motions") / (clip_id + ".json");
}

}  // namespace

std::size_t GestureLibrary::find(const std::string& clip_id) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].clip_id == clip_id) return i;
  }
  throw ValidationError("library: no clip '" + clip_id + "'");
}

GestureLibrary build_library(const std::vector<LibrarySource>& sources,
                             const contrastive::Checkpoint& checkpoint) {
  if (sources.empty()) throw ValidationError("build_library: empty dataset");
  GestureLibrary library;
  library.config_hash = checkpoint.config_hash;
  for (const LibrarySource& s : sources) {
    s.clip.validate();
    library.entries.push_back(
        {s.clip.clip_id, contrastive::encode_gesture(checkpoint.gesture, s.keyposes), s.cluster});
    library.clips.push_back(s.clip);
  }
  check_entries(library);
  return library;
}

nlohmann::json library_index_json(const GestureLibrary& library) {
  nlohmann::json entries = nlohmann::json::array();
  for (const LibraryEntry& e : library.entries) {
    entries.push_back({{"clip_id", e.clip_id},
                       {"cluster", e.cluster},
                       {"motion", motion_path(e.clip_id).generic_string()},
                       {"feature", e.feature}});
  }
  return {{"format", "semgest-library"},
          {"version", kLibraryFormatVersion},
          {"config_hash", library.config_hash},
          {"entries", std::move(entries)}};
}

void save_library(const GestureLibrary& library, const std::filesystem::path& dir) {
  check_entries(library);
  std::filesystem::create_directories(dir / "motions");
  for (const motion::MotionClip& clip : library.clips) {
    motion::save_motion(clip, dir / motion_path(clip.clip_id));
  }
  write_json_file(library_index_json(library), dir / "library.json");
}

GestureLibrary load_library(const std::filesystem::path& dir) {
  const nlohmann::json doc = read_json_file(dir / "library.json");
  GestureLibrary library;
  try {
    if (doc.at("format") != "semgest-library" || doc.at("version") != kLibraryFormatVersion) {
      throw ValidationError("library index: unexpected format or version");
    }
    library.config_hash = doc.at("config_hash").get<std::string>();
    for (const auto& e : doc.at("entries")) {
      LibraryEntry entry{e.at("clip_id").get<std::string>(),
                         e.at("feature").get<std::vector<double>>(),
                         e.at("cluster").get<std::size_t>()};
      check_clip_id(entry.clip_id);
      const std::string rel = e.at("motion").get<std::string>();
      if (rel != motion_path(entry.clip_id).generic_string()) {
        throw ValidationError("library index: entry '" + entry.clip_id +
                              "' points at unexpected motion file " + rel);
      }
      library.clips.push_back(motion::load_motion(dir / rel));
      library.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("library index: ") + e.what());
  }
  check_entries(library);
  return library;
}

std::vector<Neighbor> nearest(const std::vector<double>& query, const GestureLibrary& library,
                              std::size_t k) {
  if (library.entries.empty()) throw ValidationError("retrieve: empty library");
  if (k == 0) throw ValidationError("retrieve: k must be at least 1");
  if (query.size() != library.feature_dim()) {
    throw ShapeError("retrieve: query has " + std::to_string(query.size()) +
                     " values, library features have " + std::to_string(library.feature_dim()));
  }
  std::vector<Neighbor> all(library.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < query.size(); ++d) {
      const double diff = query[d] - library.entries[i].feature[d];
      s += diff * diff;
    }
    all[i] = {i, std::sqrt(s), 0.0};
  }
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    [](const Neighbor& a, const Neighbor& b) {
                      return a.distance != b.distance ? a.distance < b.distance
                                                      : a.index < b.index;
                    });
  all.resize(k);

  double tau = 0.0;
  for (const Neighbor& n : all) tau += n.distance;
  tau /= static_cast<double>(k);
  double total = 0.0;
  for (Neighbor& n : all) {
    // Shifted by the closest distance; the shift cancels in the normalization.
    n.probability = tau > 0.0 ? std::exp(-(n.distance - all.front().distance) / tau) : 1.0;
    total += n.probability;
  }
  for (Neighbor& n : all) n.probability /= total;
  return all;
}

Neighbor retrieve(const std::vector<double>& query, const GestureLibrary& library, std::size_t k,
                  std::uint64_t seed) {
  const std::vector<Neighbor> candidates = nearest(query, library, k);
  nd::Rng rng(nd::derive_seed(seed, "retrieve"));
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (const Neighbor& n : candidates) {
    cumulative += n.probability;
    if (u < cumulative) return n;
  }
  return candidates.back();
}

}  // namespace semgest::retrieval
