#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "semgest/error.hpp"
#include "semgest/motion/motion.hpp"
#include "semgest/nd/rng.hpp"

using namespace semgest;
using namespace semgest::motion;

namespace {

Pose rest_pose() {
  Pose p;
  const double xyz[kJointCount][3] = {{0, 0, 0},        {0, 0.2, 0},      {-0.18, -0.02, 0},
                                      {-0.22, -0.3, 0}, {-0.22, -0.55, 0}, {0.18, -0.02, 0},
                                      {0.22, -0.3, 0},  {0.22, -0.55, 0}};
  for (std::size_t j = 0; j < kJointCount; ++j) {
    for (std::size_t a = 0; a < 3; ++a) p.at(j, a) = xyz[j][a];
  }
  return p;
}

// Every joint but the neck follows x(t) = f(t), t in seconds.
template <class F>
MotionClip analytic_clip(std::size_t frames, double fps, F f) {
  MotionClip clip{fps, {}, "analytic"};
  for (std::size_t t = 0; t < frames; ++t) {
    Pose p = rest_pose();
    for (std::size_t j = 0; j < kJointCount; ++j) p.at(j, 0) += f(static_cast<double>(t) / fps);
    clip.frames.push_back(p);
  }
  return clip;
}

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3 - 2 * x);
}

// Oracle: independent speed series and exhaustive minima scan.
std::vector<double> oracle_speed(const MotionClip& c) {
  std::vector<double> s(c.frames.size());
  for (std::size_t t = 0; t < s.size(); ++t) {
    const std::size_t a = t == 0 ? 0 : t - 1, b = std::min(t + 1, s.size() - 1);
    double total = 0;
    for (std::size_t j = 0; j < kJointCount; ++j) {
      const double dx = c.frames[b].at(j, 0) - c.frames[a].at(j, 0);
      const double dy = c.frames[b].at(j, 1) - c.frames[a].at(j, 1);
      const double dz = c.frames[b].at(j, 2) - c.frames[a].at(j, 2);
      total += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    s[t] = total / 8.0 / static_cast<double>(b - a);
  }
  return s;
}

std::vector<std::size_t> oracle_top_minima(const std::vector<double>& s, std::size_t keep) {
  std::vector<std::size_t> mins;
  for (std::size_t t = 1; t + 1 < s.size(); ++t) {
    bool ok = s[t] < s[t - 1] && s[t] < s[t + 1];
    for (std::size_t k = (t >= 2 ? t - 2 : 0); ok && k <= std::min(t + 2, s.size() - 1); ++k) {
      ok = s[k] >= s[t];
    }
    if (ok) mins.push_back(t);
  }
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < mins.size(); ++i) {
    const std::size_t lb = i == 0 ? 0 : mins[i - 1], rb = i + 1 == mins.size() ? s.size() - 1 : mins[i + 1];
    double lp = 0, rp = 0;
    for (std::size_t k = lb; k <= mins[i]; ++k) lp = std::max(lp, s[k]);
    for (std::size_t k = mins[i]; k <= rb; ++k) rp = std::max(rp, s[k]);
    ranked.push_back({std::min(lp, rp) - s[mins[i]], mins[i]});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](auto a, auto b) { return a.first > b.first; });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(keep, ranked.size()); ++i) out.push_back(ranked[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

MotionClip random_clip(nd::Rng& rng, std::size_t frames) {
  MotionClip clip{30.0, {}, "random"};
  Pose p = rest_pose();
  std::array<double, kPoseDim> vel{};
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 3; i < kPoseDim; ++i) {
      vel[i] = 0.8 * vel[i] + rng.normal(0.0, 0.005);
      p.coords[i] = std::clamp(p.coords[i] + vel[i], -0.9, 0.9);
    }
    clip.frames.push_back(p);
  }
  return clip;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("clip validation") {
  MotionClip one{30, {rest_pose()}, "x"};
  CHECK_THROWS_AS(one.validate(), ValidationError);
  MotionClip far{30, {rest_pose(), rest_pose()}, "x"};
  far.frames[1].at(4, 1) = 3.5;
  CHECK_THROWS_AS(far.validate(), ValidationError);
  MotionClip bad_fps{0, {rest_pose(), rest_pose()}, "x"};
  CHECK_THROWS_AS(bad_fps.validate(), ValidationError);
}

TEST_CASE("key poses of a constant clip are endpoints plus even fill") {
  MotionClip clip = analytic_clip(100, 30, [](double) { return 0.0; });
  KeyPoseSequence kp = extract_keyposes(clip);
  CHECK(kp.size() == 5);
  CHECK(kp.source_indices == std::vector<std::size_t>{0, 24, 49, 74, 99});
}

TEST_CASE("key poses of an arm raise include the apex hold") {
  MotionClip clip{30, {}, "raise"};
  for (std::size_t t = 0; t < 60; ++t) {
    Pose p = rest_pose();
    const double lift = t <= 25 ? smoothstep(t / 25.0) : (t <= 34 ? 1.0 : 1.0 - smoothstep((t - 34) / 25.0));
    p.at(4, 1) += 0.8 * lift;
    p.at(3, 1) += 0.4 * lift;
    clip.frames.push_back(p);
  }
  const auto speed = oracle_speed(clip);
  // The zero-speed run of the hold, found by exhaustive scan.
  std::size_t first = 0, last = 0;
  for (std::size_t t = 1; t + 1 < speed.size(); ++t) {
    if (speed[t] == 0.0) {
      if (first == 0) first = t;
      last = t;
    }
  }
  REQUIRE(first > 0);
  KeyPoseSequence kp = extract_keyposes(clip);
  CHECK(kp.size() == 5);
  CHECK(kp.source_indices.front() == 0);
  CHECK(kp.source_indices.back() == 59);
  CHECK(std::count(kp.source_indices.begin(), kp.source_indices.end(), (first + last) / 2) == 1);
}

TEST_CASE("oscillating clip yields max_n poses at the most salient minima") {
  const std::size_t frames = 400;
  MotionClip clip = analytic_clip(frames, 30, [&](double t) {
    const double u = t * 30.0 / (frames - 1);
    return (0.05 + 0.25 * u) * std::sin(2 * std::numbers::pi * 20 * u);
  });
  KeyPoseSequence kp = extract_keyposes(clip, 5, 12);
  CHECK(kp.size() == 12);
  std::vector<std::size_t> expected = oracle_top_minima(oracle_speed(clip), 10);
  expected.insert(expected.begin(), 0);
  expected.push_back(frames - 1);
  CHECK(kp.source_indices == expected);
}

TEST_CASE("key pose invariants hold on random clips") {
  nd::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t frames = 5 + rng.below(200);
    MotionClip clip = random_clip(rng, frames);
    KeyPoseSequence kp = extract_keyposes(clip);
    CHECK_NOTHROW(kp.validate(frames, 5, 12));
    CHECK(kp.source_indices.front() == 0);
    CHECK(kp.source_indices.back() == frames - 1);
    for (std::size_t i = 0; i < kp.size(); ++i) CHECK(kp.poses[i] == clip.frames[kp.source_indices[i]]);
  }
}

TEST_CASE("short clip is rejected by key pose extraction") {
  MotionClip clip = analytic_clip(4, 30, [](double) { return 0.0; });
  CHECK_THROWS_AS(extract_keyposes(clip), ValidationError);
}

TEST_CASE("speed_adjust identity and stretching") {
  nd::Rng rng(3);
  MotionClip clip = random_clip(rng, 40);
  CHECK(speed_adjust(clip, clip.duration()) == clip);

  MotionClip two{30, {rest_pose(), rest_pose()}, "two"};
  two.frames[1].at(4, 0) += 0.3;
  MotionClip stretched = speed_adjust(two, 2 * two.duration());
  REQUIRE(stretched.frames.size() == 3);
  CHECK(stretched.frames[1] == lerp(two.frames[0], two.frames[1], 0.5));
  CHECK(stretched.frames.front() == two.frames.front());
  CHECK(stretched.frames.back() == two.frames.back());

  CHECK_THROWS_AS(speed_adjust(clip, 0.0), ValidationError);
  CHECK_THROWS_AS(speed_adjust(clip, -1.0), ValidationError);
}

TEST_CASE("speed_adjust lands within one frame of the target") {
  nd::Rng rng(5);
  MotionClip clip = random_clip(rng, 37);
  for (double target : {0.05, 0.4, 1.0, 2.345, 7.9}) {
    MotionClip out = speed_adjust(clip, target);
    CHECK(std::abs(out.duration() - target) <= 1.0 / clip.fps);
    CHECK(out.frames.front() == clip.frames.front());
    CHECK(out.frames.back() == clip.frames.back());
  }
}

TEST_CASE("speed_adjust round trip on linear motion") {
  MotionClip clip = analytic_clip(31, 30, [](double t) { return 0.4 * t - 0.2; });
  const double T = clip.duration();
  MotionClip back = speed_adjust(speed_adjust(clip, 2 * T), T);
  REQUIRE(back.frames.size() == clip.frames.size());
  for (std::size_t t = 0; t < clip.frames.size(); ++t) {
    for (std::size_t i = 0; i < kPoseDim; ++i) {
      CHECK(std::abs(back.frames[t].coords[i] - clip.frames[t].coords[i]) < 1e-9);
    }
  }
}

TEST_CASE("stitching a single segment returns it unchanged") {
  nd::Rng rng(9);
  MotionClip clip = random_clip(rng, 20);
  CHECK(spline_stitch({clip}) == clip);
  CHECK_THROWS_AS(spline_stitch({}), ValidationError);
}

TEST_CASE("stitching constant segments stays constant") {
  MotionClip c = analytic_clip(10, 30, [](double) { return 0.1; });
  MotionClip out = spline_stitch({c, c, c});
  for (const Pose& p : out.frames) CHECK(p == c.frames[0]);
}

TEST_CASE("stitched linear segments join C1 and transition monotonically") {
  MotionClip a = analytic_clip(31, 30, [](double t) { return 0.3 * t; });
  MotionClip b = analytic_clip(31, 30, [](double t) { return 0.5 + 0.3 * t; });
  StitchedMotion out = stitch({a, b});
  const std::size_t blend = 8;  // round(0.25 s * 30 fps)
  REQUIRE(out.clip.frames.size() == a.frames.size() + b.frames.size() + blend);
  CHECK(out.segments[1].begin == a.frames.size() + blend);
  // The join spans the blend frames plus one interval on each side.
  CHECK(out.clip.duration() - (a.duration() + b.duration()) ==
        doctest::Approx((blend + 1) / 30.0).epsilon(1e-12));

  // Blend region is monotone in x for every moving joint.
  for (std::size_t t = a.frames.size() - 1; t < out.segments[1].begin; ++t) {
    CHECK(out.clip.frames[t + 1].at(4, 0) > out.clip.frames[t].at(4, 0));
  }

  // C1: finite-difference derivative of the blend curve at both ends equals the
  // adjacent segment's velocity (m/frame).
  const double gap = blend + 1.0;
  Pose va, vb;
  for (std::size_t i = 0; i < kPoseDim; ++i) {
    va.coords[i] = a.frames[30].coords[i] - a.frames[29].coords[i];
    vb.coords[i] = b.frames[1].coords[i] - b.frames[0].coords[i];
  }
  const double h = 1e-7;
  const Pose p0 = hermite_blend(a.frames.back(), va, b.frames.front(), vb, gap, 0.0);
  const Pose p0h = hermite_blend(a.frames.back(), va, b.frames.front(), vb, gap, h);
  const Pose p1 = hermite_blend(a.frames.back(), va, b.frames.front(), vb, gap, 1.0);
  const Pose p1h = hermite_blend(a.frames.back(), va, b.frames.front(), vb, gap, 1.0 - h);
  for (std::size_t i = 0; i < kPoseDim; ++i) {
    const double left_jump = (p0h.coords[i] - p0.coords[i]) / h / gap - va.coords[i];
    const double right_jump = (p1.coords[i] - p1h.coords[i]) / h / gap - vb.coords[i];
    CHECK(std::abs(left_jump) < 1e-6);
    CHECK(std::abs(right_jump) < 1e-6);
    CHECK(p0.coords[i] == doctest::Approx(a.frames.back().coords[i]).epsilon(1e-15));
    CHECK(p1.coords[i] == doctest::Approx(b.frames.front().coords[i]).epsilon(1e-15));
  }
  // Sampled frames are the curve.
  const Pose mid = hermite_blend(a.frames.back(), va, b.frames.front(), vb, gap, 4.0 / gap);
  CHECK(out.clip.frames[a.frames.size() + 3] == mid);
}

TEST_CASE("stitching rejects mixed frame rates") {
  MotionClip a = analytic_clip(10, 30, [](double) { return 0.0; });
  MotionClip b = analytic_clip(10, 25, [](double) { return 0.0; });
  CHECK_THROWS_AS(spline_stitch({a, b}), ValidationError);
}

TEST_CASE("jerk of analytic trajectories") {
  CHECK(jerk(analytic_clip(30, 30, [](double) { return 0.2; })) == 0.0);
  CHECK(jerk(analytic_clip(30, 30, [](double t) { return 0.5 * t; })) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(std::abs(jerk(analytic_clip(31, 30, [](double t) { return t * t * t; })) - 6.0) < 1e-6);
  CHECK_THROWS_AS(jerk(analytic_clip(3, 30, [](double) { return 0.0; })), ValidationError);
}

TEST_CASE("jerk is translation invariant and scales with time compression cubed") {
  MotionClip c = analytic_clip(40, 30, [](double t) { return 0.3 * std::sin(3 * t); });
  MotionClip moved = c;
  for (Pose& p : moved.frames) {
    for (std::size_t j = 0; j < kJointCount; ++j) p.at(j, 2) += 0.25;
  }
  CHECK(jerk(moved) == doctest::Approx(jerk(c)).epsilon(1e-12));
  MotionClip fast = c;
  fast.fps = 2.0 * c.fps;
  CHECK(jerk(fast) == doctest::Approx(8.0 * jerk(c)).epsilon(1e-12));
}

TEST_CASE("motion files round-trip byte-identically") {
  nd::Rng rng(12);
  const auto dir = std::filesystem::temp_directory_path() / "semgest_motion_test";
  std::filesystem::create_directories(dir);
  for (int trial = 0; trial < 5; ++trial) {
    MotionClip clip = random_clip(rng, 10 + rng.below(30));
    clip.fps = 29.97;
    save_motion(clip, dir / "a.json");
    MotionClip back = load_motion(dir / "a.json");
    CHECK(back == clip);
    save_motion(back, dir / "b.json");
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  }
  CHECK_THROWS_AS(load_motion(dir / "missing.json"), ValidationError);
  CHECK_THROWS_AS(motion_from_json(nlohmann::json::parse(R"({"fps":30,"clip_id":"x","frames":[[[0,0,0]]]})")),
                  ValidationError);
}
