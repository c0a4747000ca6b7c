#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semgest/motion/motion.hpp"
#include "semgest/vae/gesture_vae.hpp"

namespace semgest::metrics {

using Rows = std::vector<std::vector<double>>;

// Sum of L1 distances over unordered pairs, divided by N * ceil(N / 2).
double diversity(const Rows& latent_means);

struct Gaussian {
  std::vector<double> mean;
  std::vector<double> covariance;  // d x d row-major, unbiased (N - 1)

  std::size_t dim() const { return mean.size(); }
};

Gaussian fit_gaussian(const Rows& features);

// |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2). Square roots
// come from symmetric eigendecompositions. Eigenvalues below the numerical
// rank tolerance count as zero; clearly negative ones raise NumericError.
double frechet_distance(const Gaussian& a, const Gaussian& b);

double fgd(const Rows& features_a, const Rows& features_b);

// Feature extractor for FGD: a gesture VAE with a 256-d latent over key-pose
// sequences padded to a fixed length.
struct FgdFeatureModel {
  vae::VaeModel vae;
  std::size_t padded_length = 12;
};

inline constexpr std::size_t kFgdLatentDim = 256;

// Repeats the last pose up to `length`; longer inputs are rejected.
std::vector<motion::Pose> pad_keyposes(const std::vector<motion::Pose>& poses, std::size_t length);

FgdFeatureModel train_fgd_model(const std::vector<motion::MotionClip>& clips, std::size_t epochs,
                                std::uint64_t seed);
Rows fgd_features(const FgdFeatureModel& model, const std::vector<motion::MotionClip>& clips);
double fgd(const FgdFeatureModel& model, const std::vector<motion::MotionClip>& a,
           const std::vector<motion::MotionClip>& b);

nlohmann::json fgd_model_to_json(const FgdFeatureModel& model);
FgdFeatureModel fgd_model_from_json(const nlohmann::json& doc);

// Resamples `generated` to the reference frame count, then averages the
// per-joint L1 position difference (|dx| + |dy| + |dz|) over joints and frames.
double l1_metric(const motion::MotionClip& generated, const motion::MotionClip& reference);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Probability that a random positive outscores a random negative; ties count half.
double roc_auc(const std::vector<double>& scores, const std::vector<bool>& labels);

struct SetSummary {
  std::string name;
  std::size_t clips = 0;
  std::optional<double> diversity;  // needs a gesture VAE
  double jerk = 0.0;                // mean over clips
};

struct MetricReport {
  std::vector<SetSummary> sets;
  std::optional<double> fgd;  // first set against the second
  std::optional<double> l1;   // mean over clips paired by position
  std::map<std::string, double> correlations;  // metric name -> Pearson r vs scores
};

nlohmann::json report_json(const MetricReport& report);
std::string report_table(const MetricReport& report);

}  // namespace semgest::metrics
