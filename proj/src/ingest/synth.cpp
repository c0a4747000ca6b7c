#include "semgest/ingest/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "semgest/error.hpp"
#include "semgest/nd/rng.hpp"
#include "semgest/text/embedding.hpp"

namespace semgest::ingest {

namespace {

using Vec3 = std::array<double, 3>;

constexpr std::size_t kWaypoints = 3;
constexpr double kFamilySeparation = 0.35;

const std::vector<std::string> kKeywords = {"ball", "wave",  "circle", "point", "stack", "spin",
                                            "clap", "lift",  "push",   "pull",  "throw", "open"};
const std::vector<std::string> kFillers = {"the", "a",    "we",   "then", "see",  "it",  "there",
                                           "and", "so",   "look", "this", "that", "here", "now",
                                           "very", "just", "you", "they", "was",  "with"};

const Vec3 kHead{0.0, 0.25, 0.0};
const Vec3 kRightShoulder{-0.2, -0.05, 0.0};
const Vec3 kLeftShoulder{0.2, -0.05, 0.0};
const Vec3 kRightWristRest{-0.25, -0.55, 0.05};
const Vec3 kLeftWristRest{0.25, -0.55, 0.05};

// Wrist positions (right, left) at each waypoint.
struct Template {
  std::array<std::array<Vec3, 2>, kWaypoints> wrists;
};

Vec3 lerp3(const Vec3& a, const Vec3& b, double t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

double dist3(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

Vec3 random_wrist(nd::Rng& rng, double side) {
  return {side * rng.uniform(0.05, 0.55), rng.uniform(-0.5, 0.35), rng.uniform(0.0, 0.45)};
}

double template_distance(const Template& a, const Template& b) {
  double total = 0.0;
  for (std::size_t k = 0; k < kWaypoints; ++k) {
    for (std::size_t arm = 0; arm < 2; ++arm) total += dist3(a.wrists[k][arm], b.wrists[k][arm]);
  }
  return total / (2.0 * kWaypoints);
}

std::vector<Template> family_templates(std::size_t families, std::uint64_t seed) {
  nd::Rng rng(nd::derive_seed(seed, "family-templates"));
  std::vector<Template> out;
  while (out.size() < families) {
    Template t;
    for (auto& w : t.wrists) w = {random_wrist(rng, -1.0), random_wrist(rng, 1.0)};
    const bool distinct = std::all_of(out.begin(), out.end(), [&](const Template& o) {
      return template_distance(o, t) >= kFamilySeparation;
    });
    if (distinct) out.push_back(t);
  }
  return out;
}

motion::Pose body_pose(const Vec3& right_wrist, const Vec3& left_wrist) {
  motion::Pose p;
  auto put = [&](std::size_t joint, const Vec3& v) {
    for (std::size_t a = 0; a < 3; ++a) p.at(joint, a) = v[a];
  };
  auto elbow = [](const Vec3& shoulder, const Vec3& wrist) {
    Vec3 e = lerp3(shoulder, wrist, 0.5);
    e[1] -= 0.08;
    e[2] -= 0.03;
    return e;
  };
  put(1, kHead);
  put(2, kRightShoulder);
  put(3, elbow(kRightShoulder, right_wrist));
  put(4, right_wrist);
  put(5, kLeftShoulder);
  put(6, elbow(kLeftShoulder, left_wrist));
  put(7, left_wrist);
  return p;
}

// Rest, the jittered waypoints, rest; smoothstep easing between stops and a
// short hold at each waypoint so every stop is a clear speed minimum.
motion::MotionClip family_clip(const Template& t, const std::string& id, double noise,
                               nd::Rng& rng) {
  std::vector<std::array<Vec3, 2>> stops;
  stops.push_back({kRightWristRest, kLeftWristRest});
  const double scale = rng.uniform(0.9, 1.1);
  for (const auto& w : t.wrists) {
    std::array<Vec3, 2> s;
    for (std::size_t arm = 0; arm < 2; ++arm) {
      const Vec3& rest = arm == 0 ? kRightWristRest : kLeftWristRest;
      for (std::size_t a = 0; a < 3; ++a) {
        s[arm][a] = rest[a] + scale * (w[arm][a] - rest[a]) + rng.normal(0.0, noise);
      }
    }
    stops.push_back(s);
  }
  stops.push_back({kRightWristRest, kLeftWristRest});

  motion::MotionClip clip;
  clip.clip_id = id;
  clip.frames.push_back(body_pose(stops[0][0], stops[0][1]));
  for (std::size_t k = 1; k < stops.size(); ++k) {
    const std::size_t steps = 10 + rng.below(7);
    for (std::size_t i = 1; i <= steps; ++i) {
      const double u = static_cast<double>(i) / static_cast<double>(steps);
      const double s = u * u * (3.0 - 2.0 * u);
      clip.frames.push_back(body_pose(lerp3(stops[k - 1][0], stops[k][0], s),
                                      lerp3(stops[k - 1][1], stops[k][1], s)));
    }
    if (k + 1 < stops.size()) {
      for (int h = 0; h < 2; ++h) clip.frames.push_back(clip.frames.back());
    }
  }
  return clip;
}

std::vector<double> word_vector(nd::Rng& rng, bool keyword, std::optional<std::size_t> family) {
  std::vector<double> v(text::kEmbeddingDim);
  for (double& x : v) x = rng.normal() * 0.5 / std::sqrt(static_cast<double>(text::kEmbeddingDim));
  v[0] += keyword ? 0.6 : -0.6;
  if (family) v[1 + *family] += 0.6;
  return v;
}

}  // namespace

std::string family_keyword(std::size_t f) {
  return f < kKeywords.size() ? kKeywords[f] : "gesture" + std::to_string(f);
}

const std::vector<std::string>& filler_words() { return kFillers; }

Dataset synth_dataset(std::uint64_t seed, const SynthOptions& options) {
  if (options.families < 2) throw ValidationError("synth_dataset: need at least 2 families");
  if (options.families + 1 > text::kEmbeddingDim) {
    throw ValidationError("synth_dataset: too many families for the embedding size");
  }
  if (options.per_family == 0) throw ValidationError("synth_dataset: per_family must be positive");
  if (!(options.noise >= 0.0)) throw ValidationError("synth_dataset: noise must be non-negative");

  Dataset d;
  d.seed = seed;
  d.embeddings = text::EmbeddingProvider(seed);
  {
    nd::Rng rng(nd::derive_seed(seed, "embeddings"));
    for (std::size_t f = 0; f < options.families; ++f) {
      d.embeddings.add(family_keyword(f), word_vector(rng, true, f));
    }
    for (const auto& w : kFillers) d.embeddings.add(w, word_vector(rng, false, std::nullopt));
  }

  const auto templates = family_templates(options.families, seed);
  nd::Rng split_rng(nd::derive_seed(seed, "splits"));
  for (std::size_t f = 0; f < options.families; ++f) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < options.per_family; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "f%zus%03zu", f, i);
      nd::Rng rng(nd::derive_seed(seed, std::string("sample#") + id));
      const std::size_t length = 4 + rng.below(5);
      const std::size_t slot = rng.below(length);
      std::vector<std::string> words;
      AnnotatedSample s{id, "", std::vector<int>(length, 0), std::string("motions/") + id + ".json",
                        "representational", f};
      for (std::size_t w = 0; w < length; ++w) {
        words.push_back(w == slot ? family_keyword(f) : kFillers[rng.below(kFillers.size())]);
      }
      s.labels[slot] = 1;
      s.text = text::join(words);
      d.motions.push_back(family_clip(templates[f], id, options.noise, rng));
      d.samples.push_back(std::move(s));
      ids.emplace_back(id);
    }
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[split_rng.below(i)]);
    const auto n = static_cast<double>(ids.size());
    const auto train = static_cast<std::size_t>(std::lround(0.8 * n));
    const auto val = std::min(ids.size() - train, static_cast<std::size_t>(std::lround(0.1 * n)));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      d.splits[i < train ? "train" : i < train + val ? "val" : "test"].push_back(ids[i]);
    }
  }
  for (const auto& name : kSplitNames) d.splits[name];
  validate_dataset(d);
  return d;
}

double dtw_distance(const motion::MotionClip& a, const motion::MotionClip& b) {
  const std::size_t n = a.frames.size(), m = b.frames.size();
  if (n == 0 || m == 0) throw ValidationError("dtw_distance: empty clip");
  auto cost = [&](std::size_t i, std::size_t j) {
    double total = 0.0;
    for (std::size_t k = 0; k < motion::kJointCount; ++k) {
      double s = 0.0;
      for (std::size_t ax = 0; ax < 3; ++ax) {
        const double diff = a.frames[i].at(k, ax) - b.frames[j].at(k, ax);
        s += diff * diff;
      }
      total += std::sqrt(s);
    }
    return total / static_cast<double>(motion::kJointCount);
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = cost(i - 1, j - 1) + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m] / static_cast<double>(n + m);
}

}  // namespace semgest::ingest
