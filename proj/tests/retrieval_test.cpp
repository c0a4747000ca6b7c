#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "semgest/contrastive/losses.hpp"
#include "semgest/error.hpp"
#include "semgest/nd/rng.hpp"
#include "semgest/retrieval/generate.hpp"
#include "test_files.hpp"

using namespace semgest;
using namespace semgest::retrieval;

namespace {

motion::MotionClip line_clip(const std::string& id, double offset, std::size_t frames = 20) {
  motion::MotionClip clip;
  clip.clip_id = id;
  for (std::size_t t = 0; t < frames; ++t) {
    motion::Pose p;
    for (std::size_t i = 3; i < motion::kPoseDim; ++i) {
      p.coords[i] = 0.1 * std::sin(offset + 0.3 * static_cast<double>(i)) +
                    0.01 * static_cast<double>(t) * std::cos(offset * static_cast<double>(i));
    }
    clip.frames.push_back(p);
  }
  return clip;
}

// Library with hand-set features; clips are placeholders.
GestureLibrary feature_library(const std::vector<std::vector<double>>& features) {
  GestureLibrary lib;
  lib.config_hash = "test";
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::string id = "c" + std::to_string(i);
    lib.entries.push_back({id, features[i], i % 3});
    lib.clips.push_back(line_clip(id, static_cast<double>(i)));
  }
  return lib;
}

std::vector<std::vector<double>> random_features(std::size_t n, std::size_t dim, nd::Rng& rng) {
  std::vector<std::vector<double>> out(n, std::vector<double>(dim));
  for (auto& f : out) {
    for (double& x : f) x = rng.normal();
  }
  return out;
}

double l2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

contrastive::Checkpoint small_checkpoint(const std::string& hash = "test") {
  return {hash, text::init_text_model({.feature_dim = 8, .hidden = 8}, 3),
          contrastive::init_gesture_model({.feature_dim = 8, .hidden = 8}, 4)};
}

std::vector<LibrarySource> sources(std::size_t n) {
  std::vector<LibrarySource> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto clip = line_clip("clip" + std::to_string(i), 0.7 * static_cast<double>(i), 24 + i);
    auto keys = motion::extract_keyposes(clip).poses;
    out.push_back({std::move(clip), std::move(keys), i % 2});
  }
  return out;
}

}  // namespace

TEST_CASE("k=1 retrieval is the exhaustive nearest neighbor") {
  nd::Rng rng(11);
  const auto lib = feature_library(random_features(40, 8, rng));
  for (int trial = 0; trial < 200; ++trial) {
    const auto q = random_features(1, 8, rng).front();
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lib.size(); ++i) {
      const double d = l2(q, lib.entries[i].feature);
      if (d < best_d) best_d = d, best = i;
    }
    const Neighbor n = retrieve(q, lib, 1, static_cast<std::uint64_t>(trial));
    CHECK(n.index == best);
    CHECK(n.distance == doctest::Approx(best_d).epsilon(1e-12));
    CHECK(n.probability == 1.0);
  }
}

TEST_CASE("neighbor weights follow softmax of negative distance over the mean distance") {
  nd::Rng rng(12);
  const auto lib = feature_library(random_features(30, 8, rng));
  const auto q = random_features(1, 8, rng).front();
  const auto ns = nearest(q, lib, 5);
  REQUIRE(ns.size() == 5);
  double tau = 0.0;
  for (const auto& n : ns) tau += n.distance;
  tau /= 5.0;
  double z = 0.0;
  for (const auto& n : ns) z += std::exp(-n.distance / tau);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (i > 0) CHECK(ns[i - 1].distance <= ns[i].distance);
    CHECK(ns[i].probability == doctest::Approx(std::exp(-ns[i].distance / tau) / z).epsilon(1e-12));
  }
}

TEST_CASE("sampled frequencies match the softmax weights within three standard errors") {
  nd::Rng rng(13);
  const auto lib = feature_library(random_features(12, 4, rng));
  const auto q = random_features(1, 4, rng).front();
  const auto ns = nearest(q, lib, 3);
  const int draws = 10000;
  std::vector<int> counts(ns.size(), 0);
  for (int s = 0; s < draws; ++s) {
    const Neighbor n = retrieve(q, lib, 3, static_cast<std::uint64_t>(s));
    const auto it = std::find_if(ns.begin(), ns.end(), [&](const Neighbor& c) {
      return c.index == n.index;
    });
    REQUIRE(it != ns.end());
    ++counts[static_cast<std::size_t>(it - ns.begin())];
  }
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double p = ns[i].probability;
    const double se = std::sqrt(p * (1.0 - p) / draws);
    CHECK(std::abs(counts[i] / double(draws) - p) < 3.0 * se);
  }
}

TEST_CASE("retrieval edge cases") {
  nd::Rng rng(14);
  const auto one = feature_library(random_features(1, 4, rng));
  for (std::uint64_t s = 0; s < 20; ++s) {
    CHECK(retrieve(random_features(1, 4, rng).front(), one, 8, s).index == 0);
  }
  const auto lib = feature_library(random_features(20, 4, rng));
  const auto q = random_features(1, 4, rng).front();
  const auto all = nearest(q, lib, 20);
  for (std::uint64_t s = 0; s < 50; ++s) {
    CHECK(retrieve(q, lib, 5, s).distance <= all[5].distance);
  }
  CHECK(nearest(q, lib, 100).size() == 20);
  CHECK_THROWS_AS(nearest(q, lib, 0), ValidationError);
  CHECK_THROWS_AS(nearest({1.0}, lib, 1), ShapeError);
  CHECK_THROWS_AS(nearest(q, GestureLibrary{}, 1), ValidationError);

  const auto same = feature_library({{1.0, 1.0}, {1.0, 1.0}});
  for (const auto& n : nearest({1.0, 1.0}, same, 2)) CHECK(n.probability == 0.5);
}

TEST_CASE("build_library embeds every clip with the gesture encoder") {
  const auto ck = small_checkpoint();
  const auto src = sources(6);
  const auto lib = build_library(src, ck);
  REQUIRE(lib.size() == 6);
  CHECK(lib.config_hash == "test");
  std::vector<double> stacked;
  for (std::size_t i = 0; i < src.size(); ++i) {
    CHECK(lib.entries[i].clip_id == src[i].clip.clip_id);
    CHECK(lib.entries[i].cluster == src[i].cluster);
    CHECK(lib.entries[i].feature == contrastive::encode_gesture(ck.gesture, src[i].keyposes));
    stacked.insert(stacked.end(), lib.entries[i].feature.begin(), lib.entries[i].feature.end());
  }
  const auto m = nd::Tensor::matrix(6, 8, stacked);
  const auto d = contrastive::distance_matrix(m, m);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(l2(lib.entries[i].feature, lib.entries[j].feature) ==
            doctest::Approx(d[i * 6 + j]).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(build_library({}, ck), ValidationError);
  auto dup = sources(2);
  dup[1].clip.clip_id = dup[0].clip.clip_id;
  CHECK_THROWS_AS(build_library(dup, ck), ValidationError);
  auto bad = sources(1);
  bad[0].clip.clip_id = "../escape";
  CHECK_THROWS_AS(build_library(bad, ck), ValidationError);
}

TEST_CASE("library files round-trip byte-identically") {
  const auto lib = build_library(sources(5), small_checkpoint());
  const auto a = testing::scratch_dir("retrieval_lib_a");
  const auto b = testing::scratch_dir("retrieval_lib_b");
  save_library(lib, a);
  const auto loaded = load_library(a);
  CHECK(loaded.config_hash == lib.config_hash);
  REQUIRE(loaded.size() == lib.size());
  for (std::size_t i = 0; i < lib.size(); ++i) {
    CHECK(loaded.entries[i].feature == lib.entries[i].feature);
    CHECK(loaded.clips[i] == lib.clips[i]);
  }
  save_library(loaded, b);
  CHECK(testing::same_tree(a, b));

  std::filesystem::remove(a / "motions" / "clip2.json");
  CHECK_THROWS_AS(load_library(a), ValidationError);
}

TEST_CASE("single segment with k=1 returns the nearest library clip") {
  const auto ck = small_checkpoint();
  const text::EmbeddingProvider provider(5);
  const auto lib = build_library(sources(6), ck);
  const GenerationRequest req{.text = "show me the big round ball", .seed = 3, .k = 1};
  const Generation g = generate(req, ck, provider, lib);
  REQUIRE(g.segments.size() == 1);
  const auto attended = text::attend(ck.text, provider, text::tokenize(req.text));
  const Neighbor n = nearest(attended.feature, lib, 1).front();
  CHECK(g.segments[0].clip_id == lib.entries[n.index].clip_id);
  CHECK(g.motion.frames == lib.clips[n.index].frames);
  CHECK(g.segments[0].feature == attended.feature);
}

TEST_CASE("generate stitches one library clip per eight words") {
  const auto ck = small_checkpoint();
  const text::EmbeddingProvider provider(5);
  const auto lib = build_library(sources(6), ck);
  GenerationRequest req{.text = "one two three four five six seven eight nine ten eleven twelve "
                                "thirteen fourteen fifteen sixteen seventeen",
                        .seed = 9};
  const Generation g = generate(req, ck, provider, lib);
  REQUIRE(g.segments.size() == 3);
  CHECK(g.segments[0].tokens.size() == 8);
  CHECK(g.segments[2].tokens.size() == 1);
  CHECK(g.segments[2].first_word == 16);
  // Every segment's frames are the retrieved clip, untouched.
  for (const auto& s : g.segments) {
    const auto& clip = lib.clips[lib.find(s.clip_id)];
    REQUIRE(s.frames.end - s.frames.begin == clip.frames.size());
    for (std::size_t t = 0; t < clip.frames.size(); ++t) {
      CHECK(g.motion.frames[s.frames.begin + t] == clip.frames[t]);
    }
  }

  req.target_duration_s = 3.4;
  const Generation timed = generate(req, ck, provider, lib);
  for (const auto& s : timed.segments) {
    const double share = 3.4 * static_cast<double>(s.tokens.size()) / 17.0;
    const double got = static_cast<double>(s.frames.end - s.frames.begin - 1) / 30.0;
    CHECK(std::abs(got - share) <= 1.0 / 30.0 + 1e-12);
  }
}

TEST_CASE("generate is deterministic in the seed") {
  const auto ck = small_checkpoint();
  const text::EmbeddingProvider provider(5);
  const auto lib = build_library(sources(8), ck);
  GenerationRequest req{.text = "a b c d e f g h i j k l m n o p q r s t u v", .seed = 1, .k = 8};
  const Generation a = generate(req, ck, provider, lib);
  const Generation b = generate(req, ck, provider, lib);
  CHECK(a.motion == b.motion);
  CHECK(diagnostics_json(a).dump() == diagnostics_json(b).dump());
  bool differs = false;
  for (std::uint64_t s = 2; s < 30 && !differs; ++s) {
    req.seed = s;
    differs = diagnostics_json(generate(req, ck, provider, lib)) != diagnostics_json(a);
  }
  CHECK(differs);
}

TEST_CASE("overriding with the model's own attention changes nothing") {
  const auto ck = small_checkpoint();
  const text::EmbeddingProvider provider(5);
  const auto lib = build_library(sources(8), ck);
  const std::string sentence = "these two large balls roll";
  const auto own = text::attend(ck.text, provider, text::tokenize(sentence));
  GenerationRequest plain{.text = sentence, .seed = 4, .k = 4};
  GenerationRequest same = plain;
  for (std::size_t i = 0; i < 5; ++i) same.attention_override.emplace_back(i, own.raw_attention[i]);
  for (std::uint64_t s = 0; s < 20; ++s) {
    plain.seed = same.seed = s;
    const Generation a = generate(plain, ck, provider, lib);
    const Generation b = generate(same, ck, provider, lib);
    CHECK(a.motion == b.motion);
    CHECK(a.segments[0].attention == b.segments[0].attention);
    CHECK(b.segments[0].overridden);
  }

  GenerationRequest stressed = plain;
  stressed.attention_override = {{2, 0.5}};
  const Generation g = generate(stressed, ck, provider, lib);
  const auto& a = g.segments[0].attention;
  CHECK(a[2] > a[0]);
  CHECK(a[0] == doctest::Approx(a[1]).epsilon(1e-15));
  CHECK(a[2] / a[0] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("generate rejects bad requests") {
  const auto ck = small_checkpoint();
  const text::EmbeddingProvider provider(5);
  const auto lib = build_library(sources(3), ck);
  const auto run = [&](GenerationRequest r) { return generate(r, ck, provider, lib); };
  CHECK_THROWS_AS(run({.text = " ,. "}), ValidationError);
  CHECK_THROWS_AS(run({.text = "two words", .attention_override = {{2, 0.5}}}), ValidationError);
  CHECK_THROWS_AS(run({.text = "two words", .attention_override = {{0, 1.0}}}), ValidationError);
  CHECK_THROWS_AS(run({.text = "two words", .attention_override = {{0, 0.5}, {0, 0.4}}}),
                  ValidationError);
  CHECK_THROWS_AS(run({.text = "two words", .target_duration_s = 0.0}), ValidationError);
  CHECK_THROWS_AS(run({.text = "two words", .k = 0}), ValidationError);
  CHECK_THROWS_AS(generate({.text = "two words"}, small_checkpoint("other"), provider, lib),
                  ConfigMismatchError);
}
