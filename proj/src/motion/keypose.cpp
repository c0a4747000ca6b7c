#include <algorithm>
#include <cmath>

#include "semgest/error.hpp"
#include "semgest/motion/motion.hpp"

namespace semgest::motion {
namespace {

constexpr std::size_t kMinimaHalfWindow = 2;  // 5-frame window

struct Valley {
  std::size_t first = 0;  // plateau run [first, last]
  std::size_t last = 0;
  double depth = 0.0;
  std::size_t index() const { return (first + last) / 2; }
};

double joint_distance(const Pose& a, const Pose& b, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double d = a.at(j, k) - b.at(j, k);
    s += d * d;
  }
  return std::sqrt(s);
}

// Interior plateau runs whose value is the minimum of the surrounding window
// and strictly below both neighbours.
std::vector<Valley> find_valleys(const std::vector<double>& speed, double tol) {
  const std::size_t n = speed.size();
  std::vector<Valley> out;
  std::size_t t = 1;
  while (t + 1 < n) {
    std::size_t last = t;
    while (last + 2 < n && std::abs(speed[last + 1] - speed[t]) <= tol) ++last;
    const double v = speed[t];
    const bool below_neighbours = speed[t - 1] > v + tol && speed[last + 1] > v + tol;
    bool window_min = below_neighbours;
    const std::size_t lo = t >= kMinimaHalfWindow ? t - kMinimaHalfWindow : 0;
    const std::size_t hi = std::min(n - 1, last + kMinimaHalfWindow);
    for (std::size_t k = lo; window_min && k <= hi; ++k) window_min = speed[k] >= v - tol;
    if (window_min) out.push_back({t, last, 0.0});
    t = last + 1;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t left_begin = i == 0 ? 0 : out[i - 1].last;
    const std::size_t right_end = i + 1 == out.size() ? n - 1 : out[i + 1].first;
    const double left_peak =
        *std::max_element(speed.begin() + left_begin, speed.begin() + out[i].first + 1);
    const double right_peak =
        *std::max_element(speed.begin() + out[i].last, speed.begin() + right_end + 1);
    out[i].depth = std::min(left_peak, right_peak) - speed[out[i].first];
  }
  return out;
}

}  // namespace

std::vector<double> mean_joint_speed(const MotionClip& clip) {
  const std::size_t n = clip.frames.size();
  std::vector<double> speed(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t a = t == 0 ? 0 : t - 1;
    const std::size_t b = t + 1 == n ? n - 1 : t + 1;
    double s = 0.0;
    for (std::size_t j = 0; j < kJointCount; ++j) {
      s += joint_distance(clip.frames[a], clip.frames[b], j);
    }
    speed[t] = s / static_cast<double>(kJointCount) / static_cast<double>(b - a);
  }
  return speed;
}

KeyPoseSequence extract_keyposes(const MotionClip& clip, std::size_t min_n, std::size_t max_n) {
  if (min_n < 2 || min_n > max_n) throw ValidationError("extract_keyposes: invalid count range");
  clip.validate();
  const std::size_t n = clip.frames.size();
  if (n < min_n) {
    throw ValidationError("extract_keyposes: clip '" + clip.clip_id + "' has " +
                          std::to_string(n) + " frames, fewer than " + std::to_string(min_n));
  }
  const std::vector<double> speed = mean_joint_speed(clip);
  const double peak = *std::max_element(speed.begin(), speed.end());
  const double tol = 1e-12 * std::max(1.0, peak);

  std::vector<Valley> valleys = find_valleys(speed, tol);
  std::erase_if(valleys, [tol](const Valley& v) { return v.depth <= tol; });
  std::stable_sort(valleys.begin(), valleys.end(),
                   [](const Valley& a, const Valley& b) { return a.depth > b.depth; });

  std::vector<std::size_t> picked{0, n - 1};
  for (const Valley& v : valleys) {
    if (picked.size() >= max_n) break;
    picked.push_back(v.index());
  }
  std::sort(picked.begin(), picked.end());

  while (picked.size() < min_n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i + 1 < picked.size(); ++i) {
      if (picked[i + 1] - picked[i] > picked[best + 1] - picked[best]) best = i;
    }
    picked.insert(picked.begin() + static_cast<std::ptrdiff_t>(best) + 1,
                  picked[best] + (picked[best + 1] - picked[best]) / 2);
  }

  KeyPoseSequence out;
  out.clip_id = clip.clip_id;
  out.source_indices = picked;
  for (std::size_t idx : picked) out.poses.push_back(clip.frames[idx]);
  out.validate(n, min_n, max_n);
  return out;
}

}  // namespace semgest::motion
