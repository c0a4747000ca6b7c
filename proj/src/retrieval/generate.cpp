#include "semgest/retrieval/generate.hpp"

#include <cmath>
#include <set>

#include "semgest/error.hpp"
#include "semgest/nd/rng.hpp"
#include "semgest/text/text_encoder.hpp"
#include "semgest/text/tokenizer.hpp"

namespace semgest::retrieval {

namespace {

void check_request(const GenerationRequest& request, std::size_t token_count) {
  if (request.k == 0) throw ValidationError("generate: k must be at least 1");
  if (request.target_duration_s &&
      !(*request.target_duration_s > 0.0 && std::isfinite(*request.target_duration_s))) {
    throw ValidationError("generate: target duration must be positive");
  }
  std::set<std::size_t> seen;
  for (const auto& [index, weight] : request.attention_override) {
    if (index >= token_count) {
      throw ValidationError("generate: override index " + std::to_string(index) + " outside the " +
                            std::to_string(token_count) + " words");
    }
    if (!(weight > 0.0 && weight < 1.0)) {
      throw ValidationError("generate: override weights must be in (0, 1)");
    }
    if (!seen.insert(index).second) {
      throw ValidationError("generate: word " + std::to_string(index) + " overridden twice");
    }
  }
}

std::vector<double> head(const std::vector<double>& values, std::size_t n) {
  return {values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n)};
}

}  // namespace

Generation generate(const GenerationRequest& request, const contrastive::Checkpoint& checkpoint,
                    const text::EmbeddingProvider& provider, const GestureLibrary& library) {
  contrastive::require_config(checkpoint.config_hash, library.config_hash, "gesture library");
  const text::TokenizedText all = text::tokenize(request.text);
  check_request(request, all.size());

  Generation out;
  std::vector<motion::MotionClip> clips;
  std::size_t first = 0;
  const auto groups = text::segment(all.tokens, kSegmentWords);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& words = groups[g];
    text::TokenizedText seg{words, std::vector<bool>(text::kMaxTokens, false), all.text_id};
    for (std::size_t i = 0; i < words.size(); ++i) seg.mask[i] = true;

    text::AttentionOverride local;
    for (const auto& [index, weight] : request.attention_override) {
      if (index >= first && index < first + words.size()) local.emplace_back(index - first, weight);
    }
    std::optional<std::vector<double>> raw;
    if (!local.empty()) {
      raw = text::override_raw(checkpoint.text, words.size(), local, request.override_others);
    }
    const text::AttendedText attended = text::attend(checkpoint.text, provider, seg, raw);
    const Neighbor pick = retrieve(attended.feature, library, request.k,
                                   nd::derive_seed(request.seed, "segment#" + std::to_string(g)));

    motion::MotionClip clip = library.clips[pick.index];
    if (request.target_duration_s) {
      const double share =
          static_cast<double>(words.size()) / static_cast<double>(all.size());
      clip = motion::speed_adjust(clip, *request.target_duration_s * share);
    }
    clips.push_back(std::move(clip));

    const LibraryEntry& entry = library.entries[pick.index];
    out.segments.push_back({words, first, !local.empty(), head(attended.raw_attention, words.size()),
                            head(attended.attention, words.size()), attended.feature,
                            entry.clip_id, entry.cluster, pick.distance, pick.probability, {}});
    first += words.size();
  }

  motion::StitchedMotion stitched = motion::stitch(clips);
  for (std::size_t g = 0; g < out.segments.size(); ++g) {
    out.segments[g].frames = stitched.segments[g];
  }
  out.motion = std::move(stitched.clip);
  out.motion.clip_id = "generated";
  return out;
}

nlohmann::json diagnostics_json(const Generation& generation) {
  nlohmann::json segments = nlohmann::json::array();
  for (const SegmentDiagnostics& s : generation.segments) {
    segments.push_back({{"tokens", s.tokens},
                        {"first_word", s.first_word},
                        {"overridden", s.overridden},
                        {"raw_attention", s.raw_attention},
                        {"attention", s.attention},
                        {"feature", s.feature},
                        {"clip_id", s.clip_id},
                        {"cluster", s.cluster},
                        {"distance", s.distance},
                        {"probability", s.probability},
                        {"frames", {{"begin", s.frames.begin}, {"end", s.frames.end}}}});
  }
  return {{"fps", generation.motion.fps},
          {"frame_count", generation.motion.frames.size()},
          {"segments", std::move(segments)}};
}

}  // namespace semgest::retrieval
