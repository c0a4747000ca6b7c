#include <cmath>

#include "semgest/error.hpp"
#include "semgest/motion/motion.hpp"

namespace semgest::motion {
namespace {

Pose difference(const Pose& a, const Pose& b) {
  Pose d;
  for (std::size_t i = 0; i < kPoseDim; ++i) d.coords[i] = a.coords[i] - b.coords[i];
  return d;
}

Pose end_velocity(const MotionClip& clip) {
  const auto& f = clip.frames;
  return f.size() < 2 ? Pose{} : difference(f[f.size() - 1], f[f.size() - 2]);
}

Pose start_velocity(const MotionClip& clip) {
  const auto& f = clip.frames;
  return f.size() < 2 ? Pose{} : difference(f[1], f[0]);
}

}  // namespace

MotionClip resample(const MotionClip& clip, std::size_t frame_count) {
  clip.validate();
  if (frame_count < 2) throw ValidationError("resample: need at least 2 output frames");
  const std::size_t n = clip.frames.size();
  MotionClip out{clip.fps, {}, clip.clip_id};
  out.frames.reserve(frame_count);
  const double step = static_cast<double>(n - 1) / static_cast<double>(frame_count - 1);
  for (std::size_t j = 0; j < frame_count; ++j) {
    if (j + 1 == frame_count) {
      out.frames.push_back(clip.frames.back());
      continue;
    }
    const double u = static_cast<double>(j) * step;
    const auto base = std::min(static_cast<std::size_t>(std::floor(u)), n - 2);
    const double frac = u - static_cast<double>(base);
    out.frames.push_back(frac == 0.0 ? clip.frames[base]
                                     : lerp(clip.frames[base], clip.frames[base + 1], frac));
  }
  return out;
}

MotionClip speed_adjust(const MotionClip& clip, double target_duration_s) {
  if (!(target_duration_s > 0.0) || !std::isfinite(target_duration_s)) {
    throw ValidationError("speed_adjust: target duration must be positive");
  }
  clip.validate();
  const auto frames = std::max<long long>(2, std::llround(target_duration_s * clip.fps) + 1);
  return resample(clip, static_cast<std::size_t>(frames));
}

Pose hermite_blend(const Pose& from, const Pose& from_velocity, const Pose& to,
                   const Pose& to_velocity, double gap_frames, double s) {
  const double s2 = s * s, s3 = s2 * s;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  Pose out;
  for (std::size_t i = 0; i < kPoseDim; ++i) {
    out.coords[i] = from.coords[i] + h01 * (to.coords[i] - from.coords[i]) +
                    gap_frames * (h10 * from_velocity.coords[i] + h11 * to_velocity.coords[i]);
  }
  return out;
}

StitchedMotion stitch(const std::vector<MotionClip>& segments) {
  if (segments.empty()) throw ValidationError("spline_stitch: no segments");
  for (const MotionClip& s : segments) {
    s.validate();
    if (s.fps != segments.front().fps) {
      throw ValidationError("spline_stitch: mixed frame rates (" + std::to_string(s.fps) + " vs " +
                            std::to_string(segments.front().fps) + ")");
    }
  }
  StitchedMotion out;
  out.clip.fps = segments.front().fps;
  if (segments.size() == 1) {
    out.clip = segments.front();
    out.segments.push_back({0, out.clip.frames.size()});
    return out;
  }
  const auto blend = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(kBlendWindowSeconds * out.clip.fps)));
  const double gap = static_cast<double>(blend + 1);
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const MotionClip& seg = segments[k];
    if (k > 0) {
      const MotionClip& prev = segments[k - 1];
      const Pose v0 = end_velocity(prev);
      const Pose v1 = start_velocity(seg);
      for (std::size_t j = 1; j <= blend; ++j) {
        out.clip.frames.push_back(hermite_blend(prev.frames.back(), v0, seg.frames.front(), v1, gap,
                                                static_cast<double>(j) / gap));
      }
      out.clip.clip_id += '+';
    }
    const std::size_t begin = out.clip.frames.size();
    out.clip.frames.insert(out.clip.frames.end(), seg.frames.begin(), seg.frames.end());
    out.segments.push_back({begin, out.clip.frames.size()});
    out.clip.clip_id += seg.clip_id;
  }
  return out;
}

MotionClip spline_stitch(const std::vector<MotionClip>& segments) {
  return stitch(segments).clip;
}

}  // namespace semgest::motion
