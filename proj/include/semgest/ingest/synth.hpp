#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "semgest/ingest/dataset.hpp"

namespace semgest::ingest {

struct SynthOptions {
  std::size_t families = 4;
  std::size_t per_family = 50;
  double noise = 0.02;  // waypoint jitter in meters
};

// Seeded toy corpus. Family f pairs a keyword, placed among filler words and
// labeled 1, with an arm trajectory through family-specific waypoints. In the
// embedding table coordinate 0 separates keywords from fillers and
// coordinate 1 + f marks the keyword of family f. Splits are 80/10/10 within
// each family.
Dataset synth_dataset(std::uint64_t seed, const SynthOptions& options = {});

// Keyword of family `f` in datasets from synth_dataset.
std::string family_keyword(std::size_t f);
const std::vector<std::string>& filler_words();

// Dynamic time warping over per-frame pose distances (mean joint L2),
// normalized by the summed clip lengths.
double dtw_distance(const motion::MotionClip& a, const motion::MotionClip& b);

}  // namespace semgest::ingest
