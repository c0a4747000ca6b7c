#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semgest/contrastive/checkpoint.hpp"
#include "semgest/motion/motion.hpp"
#include "semgest/retrieval/library.hpp"
#include "semgest/text/embedding.hpp"

namespace semgest::retrieval {

inline constexpr std::size_t kSegmentWords = 8;

struct GenerationRequest {
  std::string text;
  // Word indices into the whole tokenized text with raw weights in (0, 1).
  text::AttentionOverride attention_override;
  std::optional<double> target_duration_s;
  std::uint64_t seed = 0;
  std::size_t k = 8;
  double override_others = 0.1;
};

struct SegmentDiagnostics {
  std::vector<std::string> tokens;
  std::size_t first_word = 0;  // index of tokens[0] in the whole text
  bool overridden = false;
  std::vector<double> raw_attention;  // one per token
  std::vector<double> attention;      // one per token, normalized over all slots
  std::vector<double> feature;        // f_t
  std::string clip_id;
  std::size_t cluster = 0;
  double distance = 0.0;
  double probability = 0.0;
  motion::FrameRange frames;  // where the clip landed in the output
};

struct Generation {
  motion::MotionClip motion;
  std::vector<SegmentDiagnostics> segments;
};

// Tokenize, split into groups of 8 words, attend (or apply the override),
// retrieve one library clip per group, optionally retime each clip to its
// share of the target duration, and stitch.
Generation generate(const GenerationRequest& request, const contrastive::Checkpoint& checkpoint,
                    const text::EmbeddingProvider& provider, const GestureLibrary& library);

nlohmann::json diagnostics_json(const Generation& generation);

}  // namespace semgest::retrieval
