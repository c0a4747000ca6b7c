#include "semgest/motion/motion.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "semgest/error.hpp"

namespace semgest::motion {

void Pose::validate() const {
  for (std::size_t j = 0; j < kJointCount; ++j) {
    double norm2 = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      const double v = at(j, a);
      if (!std::isfinite(v)) {
        throw ValidationError("pose: non-finite coordinate on joint " +
                              std::string(kJointNames[j]));
      }
      norm2 += v * v;
    }
    if (std::sqrt(norm2) > kMaxJointDistance) {
      throw ValidationError("pose: joint " + std::string(kJointNames[j]) +
                            " is farther than 3 m from the neck");
    }
  }
}

Pose lerp(const Pose& a, const Pose& b, double t) {
  Pose out;
  for (std::size_t i = 0; i < kPoseDim; ++i) out.coords[i] = a.coords[i] + t * (b.coords[i] - a.coords[i]);
  return out;
}

void MotionClip::validate() const {
  if (!(fps > 0.0) || !std::isfinite(fps)) {
    throw ValidationError("clip '" + clip_id + "': fps must be positive");
  }
  if (frames.size() < 2) {
    throw ValidationError("clip '" + clip_id + "': needs at least 2 frames");
  }
  for (std::size_t t = 0; t < frames.size(); ++t) {
    try {
      frames[t].validate();
    } catch (const ValidationError& e) {
      throw ValidationError("clip '" + clip_id + "' frame " + std::to_string(t) + ": " + e.what());
    }
  }
}

void KeyPoseSequence::validate(std::size_t source_frames, std::size_t min_n,
                               std::size_t max_n) const {
  if (poses.size() < min_n || poses.size() > max_n) {
    throw ValidationError("key poses of '" + clip_id + "': count " + std::to_string(poses.size()) +
                          " outside [" + std::to_string(min_n) + ", " + std::to_string(max_n) +
                          "]");
  }
  if (source_indices.size() != poses.size()) {
    throw ValidationError("key poses of '" + clip_id + "': index count differs from pose count");
  }
  for (std::size_t i = 0; i < source_indices.size(); ++i) {
    if (source_indices[i] >= source_frames || (i > 0 && source_indices[i] <= source_indices[i - 1])) {
      throw ValidationError("key poses of '" + clip_id + "': indices must increase strictly within the clip");
    }
  }
}

nlohmann::json motion_to_json(const MotionClip& clip) {
  nlohmann::json frames = nlohmann::json::array();
  for (const Pose& p : clip.frames) {
    nlohmann::json joints = nlohmann::json::array();
    for (std::size_t j = 0; j < kJointCount; ++j) {
      joints.push_back({p.at(j, 0), p.at(j, 1), p.at(j, 2)});
    }
    frames.push_back(std::move(joints));
  }
  return {{"fps", clip.fps}, {"clip_id", clip.clip_id}, {"frames", std::move(frames)}};
}

MotionClip motion_from_json(const nlohmann::json& doc) {
  MotionClip clip;
  try {
    clip.fps = doc.at("fps").get<double>();
    clip.clip_id = doc.at("clip_id").get<std::string>();
    for (const auto& frame : doc.at("frames")) {
      if (frame.size() != kJointCount) {
        throw ValidationError("clip '" + clip.clip_id + "': every frame needs 8 joints");
      }
      Pose p;
      for (std::size_t j = 0; j < kJointCount; ++j) {
        if (frame[j].size() != 3) {
          throw ValidationError("clip '" + clip.clip_id + "': joints are [x, y, z] triples");
        }
        for (std::size_t a = 0; a < 3; ++a) p.at(j, a) = frame[j][a].get<double>();
      }
      clip.frames.push_back(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("motion document: ") + e.what());
  }
  clip.validate();
  return clip;
}

void save_motion(const MotionClip& clip, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write motion file " + path.string());
  out << motion_to_json(clip).dump() << '\n';
}

MotionClip load_motion(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("missing motion file " + path.string());
  try {
    return motion_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("motion file " + path.string() + ": " + e.what());
  }
}

double jerk(const MotionClip& clip) {
  const std::size_t n = clip.frames.size();
  if (n < 4) throw ValidationError("jerk: clip '" + clip.clip_id + "' needs at least 4 frames");
  double total = 0.0;
  for (std::size_t t = 0; t + 3 < n; ++t) {
    const Pose& p0 = clip.frames[t];
    const Pose& p1 = clip.frames[t + 1];
    const Pose& p2 = clip.frames[t + 2];
    const Pose& p3 = clip.frames[t + 3];
    for (std::size_t j = 0; j < kJointCount; ++j) {
      double norm2 = 0.0;
      for (std::size_t a = 0; a < 3; ++a) {
        const double d = (p3.at(j, a) - p0.at(j, a)) - 3.0 * (p2.at(j, a) - p1.at(j, a));
        norm2 += d * d;
      }
      total += std::sqrt(norm2);
    }
  }
  const double count = static_cast<double>((n - 3) * kJointCount);
  return total / count * clip.fps * clip.fps * clip.fps;
}

}  // namespace semgest::motion
