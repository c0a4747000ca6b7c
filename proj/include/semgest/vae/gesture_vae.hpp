#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "semgest/motion/motion.hpp"
#include "semgest/nd/params.hpp"

namespace semgest::vae {

struct VaeConfig {
  std::size_t latent_dim = 32;
  std::size_t hidden = 64;
  std::size_t min_len = 5;
  std::size_t max_len = 12;

  friend bool operator==(const VaeConfig&, const VaeConfig&) = default;
};

// Parameter names: "enc" bi-LSTM, "mu" and "log_sigma" heads, "dec" decoder.
struct VaeModel {
  VaeConfig config;
  nd::ParamSet params;
};

struct LatentCode {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> z;  // equals mu until reparameterized
};

VaeModel init_vae(const VaeConfig& config, std::uint64_t seed);

// Key poses as an n x 24 matrix, one pose per row.
nd::Tensor pose_matrix(std::span<const motion::Pose> poses);
std::vector<motion::Pose> poses_from_matrix(const nd::Tensor& m);

// Graph-level pieces, shared with training and gradient checks.
struct PosteriorVars {
  nd::Var mu;         // 1 x latent
  nd::Var log_sigma;  // 1 x latent
};
PosteriorVars encode_graph(const nd::Bound& p, const VaeConfig& config, nd::Var seq);
nd::Var decode_graph(const nd::Bound& p, const VaeConfig& config, nd::Var z, std::size_t n);

struct ElboTerms {
  nd::Var total;
  nd::Var reconstruction;  // sum of squared coordinate errors
  nd::Var kl;              // KL(q || N(0, I)) in closed form
};
// Negative ELBO with a unit-variance Gaussian observation model.
ElboTerms elbo_loss(nd::Var target, nd::Var reconstructed, nd::Var mu, nd::Var log_sigma);

// Closed-form KL divergence of N(mu, diag(sigma^2)) from N(0, I).
double kl_divergence(std::span<const double> mu, std::span<const double> sigma);

LatentCode encode(const VaeModel& model, std::span<const motion::Pose> poses);
LatentCode encode(const VaeModel& model, const motion::KeyPoseSequence& kp);
// z = mu + sigma * eps with eps drawn from the seed.
std::vector<double> reparameterize(const LatentCode& code, std::uint64_t seed);
// n x 24 reconstruction.
nd::Tensor decode(const VaeModel& model, std::span<const double> z, std::size_t n);

struct VaeTrainOptions {
  std::size_t epochs = 200;
  std::size_t batch = 16;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct EpochLoss {
  double total = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
};

struct VaeTrainResult {
  VaeModel model;
  std::vector<EpochLoss> trace;  // per-sample means, one entry per epoch
};

VaeTrainResult train_vae(const std::vector<std::vector<motion::Pose>>& dataset,
                         const VaeConfig& config, const VaeTrainOptions& options);

nlohmann::json vae_to_json(const VaeModel& model);
VaeModel vae_from_json(const nlohmann::json& doc);

}  // namespace semgest::vae
