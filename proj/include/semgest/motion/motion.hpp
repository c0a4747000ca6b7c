#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace semgest::motion {

inline constexpr std::size_t kJointCount = 8;
inline constexpr std::size_t kPoseDim = kJointCount * 3;
inline constexpr double kMaxJointDistance = 3.0;  // meters from the neck

// Joint order of every pose. Positions are relative to the neck (joint 0).
inline constexpr std::array<std::string_view, kJointCount> kJointNames = {
    "neck", "head", "r_shoulder", "r_elbow", "r_wrist", "l_shoulder", "l_elbow", "l_wrist"};

// Eight joints, xyz each, flattened joint-major.
struct Pose {
  std::array<double, kPoseDim> coords{};

  double& at(std::size_t joint, std::size_t axis) { return coords[joint * 3 + axis]; }
  double at(std::size_t joint, std::size_t axis) const { return coords[joint * 3 + axis]; }
  void validate() const;

  friend bool operator==(const Pose&, const Pose&) = default;
};

Pose lerp(const Pose& a, const Pose& b, double t);

struct MotionClip {
  double fps = 30.0;
  std::vector<Pose> frames;
  std::string clip_id;

  // Seconds between first and last frame.
  double duration() const { return static_cast<double>(frames.size() - 1) / fps; }
  void validate() const;

  friend bool operator==(const MotionClip&, const MotionClip&) = default;
};

struct KeyPoseSequence {
  std::vector<Pose> poses;
  std::vector<std::size_t> source_indices;
  std::string clip_id;

  std::size_t size() const { return poses.size(); }
  void validate(std::size_t source_frames, std::size_t min_n = 5, std::size_t max_n = 12) const;
};

// `{"fps": f, "clip_id": s, "frames": [[[x,y,z] x 8] ...]}`
nlohmann::json motion_to_json(const MotionClip& clip);
MotionClip motion_from_json(const nlohmann::json& doc);
void save_motion(const MotionClip& clip, const std::filesystem::path& path);
MotionClip load_motion(const std::filesystem::path& path);

// Per-frame mean joint speed (meters per frame), central differences inside,
// one-sided at the ends.
std::vector<double> mean_joint_speed(const MotionClip& clip);

// Key poses at the rests of the motion: both endpoints plus the most salient
// local minima of mean joint speed (window of 5 frames). Salience is the depth
// of the speed valley, i.e. the lower of the two speed peaks separating the
// minimum from its neighbouring minima, minus the minimum itself. If fewer than
// min_n poses result, the widest gaps are split at their midpoints.
KeyPoseSequence extract_keyposes(const MotionClip& clip, std::size_t min_n = 5,
                                 std::size_t max_n = 12);

// Linear time resampling to `frame_count` frames; endpoints are copied exactly.
MotionClip resample(const MotionClip& clip, std::size_t frame_count);
// Resamples so the duration is within one frame of `target_duration_s`.
MotionClip speed_adjust(const MotionClip& clip, double target_duration_s);

inline constexpr double kBlendWindowSeconds = 0.25;

// Cubic Hermite join between the last pose of one segment and the first pose
// of the next. Tangents are the segments' own boundary velocities (finite
// differences over neighbouring frames, meters per frame), so the curve is C1
// with both sides. `gap_frames` is the number of frame intervals spanned and
// `s` in [0, 1] is the curve parameter.
Pose hermite_blend(const Pose& from, const Pose& from_velocity, const Pose& to,
                   const Pose& to_velocity, double gap_frames, double s);

struct FrameRange {
  std::size_t begin = 0;  // first frame of the segment in the stitched clip
  std::size_t end = 0;    // one past its last frame
};

struct StitchedMotion {
  MotionClip clip;
  std::vector<FrameRange> segments;
};

// Concatenates segments, inserting round(0.25 s * fps) blended frames at
// every join. All segments must share one fps.
StitchedMotion stitch(const std::vector<MotionClip>& segments);
MotionClip spline_stitch(const std::vector<MotionClip>& segments);

// Mean over joints and frames of |third finite difference| * fps^3 (m/s^3).
double jerk(const MotionClip& clip);

}  // namespace semgest::motion
