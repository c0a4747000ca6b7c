#include "semgest/vae/gesture_vae.hpp"

#include <cmath>
#include <numeric>

#include "semgest/error.hpp"
#include "semgest/nd/adam.hpp"
#include "semgest/nd/layers.hpp"
#include "semgest/nd/rng.hpp"

namespace semgest::vae {

using nd::Bound;
using nd::Tape;
using nd::Tensor;
using nd::Var;

namespace {

constexpr int kVaeFormatVersion = 1;

void check_length(const VaeConfig& config, std::size_t n, const char* what) {
  if (n < config.min_len || n > config.max_len) {
    throw ValidationError(std::string(what) + ": key-pose count " + std::to_string(n) +
                          " outside [" + std::to_string(config.min_len) + ", " +
                          std::to_string(config.max_len) + "]");
  }
}

std::vector<double> row_values(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

VaeModel init_vae(const VaeConfig& config, std::uint64_t seed) {
  if (config.latent_dim == 0 || config.hidden == 0 || config.min_len == 0 ||
      config.min_len > config.max_len) {
    throw ValidationError("init_vae: invalid configuration");
  }
  nd::Rng rng(seed);
  VaeModel model{config, {}};
  nd::init_bilstm(model.params, "enc", motion::kPoseDim, config.hidden, rng);
  nd::init_linear(model.params, "mu", 2 * config.hidden, config.latent_dim, rng);
  nd::init_linear(model.params, "log_sigma", 2 * config.hidden, config.latent_dim, rng);
  nd::init_lstm_decoder(model.params, "dec", config.latent_dim, config.hidden, motion::kPoseDim,
                        rng);
  return model;
}

Tensor pose_matrix(std::span<const motion::Pose> poses) {
  std::vector<double> values;
  values.reserve(poses.size() * motion::kPoseDim);
  for (const motion::Pose& p : poses) values.insert(values.end(), p.coords.begin(), p.coords.end());
  return Tensor::matrix(poses.size(), motion::kPoseDim, std::move(values));
}

std::vector<motion::Pose> poses_from_matrix(const Tensor& m) {
  if (m.rank() != 2 || m.cols() != motion::kPoseDim) {
    throw ShapeError("poses_from_matrix: expected n x 24, got " + nd::shape_string(m.shape()));
  }
  std::vector<motion::Pose> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t i = 0; i < motion::kPoseDim; ++i) out[r].coords[i] = m.at(r, i);
  }
  return out;
}

PosteriorVars encode_graph(const Bound& p, const VaeConfig& config, Var seq) {
  check_length(config, seq.value().rows(), "vae encode");
  Var h = nd::bilstm_encode(p, "enc", seq, config.hidden);
  return {nd::linear(p, "mu", h), nd::linear(p, "log_sigma", h)};
}

Var decode_graph(const Bound& p, const VaeConfig& config, Var z, std::size_t n) {
  check_length(config, n, "vae decode");
  return nd::lstm_decode(p, "dec", z, n, config.hidden);
}

ElboTerms elbo_loss(Var target, Var reconstructed, Var mu, Var log_sigma) {
  if (target.shape() != reconstructed.shape()) {
    throw ShapeError("elbo_loss: target " + nd::shape_string(target.shape()) +
                     " vs reconstruction " + nd::shape_string(reconstructed.shape()));
  }
  Var recon = nd::sum(nd::square(reconstructed - target));
  // 0.5 * (mu^2 + sigma^2 - 1 - 2 log sigma), summed over dimensions.
  Var per_dim = nd::square(mu) + nd::exp(nd::scale(log_sigma, 2.0)) - nd::scale(log_sigma, 2.0);
  Var kl = nd::scale(nd::add_const(per_dim, -1.0), 0.5);
  kl = nd::sum(kl);
  return {recon + kl, recon, kl};
}

double kl_divergence(std::span<const double> mu, std::span<const double> sigma) {
  if (mu.size() != sigma.size()) throw ShapeError("kl_divergence: mu and sigma lengths differ");
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!(sigma[i] > 0.0)) throw ValidationError("kl_divergence: sigma must be positive");
    kl += 0.5 * (mu[i] * mu[i] + sigma[i] * sigma[i] - 1.0 - 2.0 * std::log(sigma[i]));
  }
  return kl;
}

LatentCode encode(const VaeModel& model, std::span<const motion::Pose> poses) {
  Tape tape;
  Bound p(tape, model.params, false);
  PosteriorVars post = encode_graph(p, model.config, tape.constant(pose_matrix(poses)));
  LatentCode code;
  code.mu = row_values(post.mu.value());
  for (double ls : post.log_sigma.value().values()) code.sigma.push_back(std::exp(ls));
  code.z = code.mu;
  return code;
}

LatentCode encode(const VaeModel& model, const motion::KeyPoseSequence& kp) {
  return encode(model, std::span<const motion::Pose>(kp.poses));
}

std::vector<double> reparameterize(const LatentCode& code, std::uint64_t seed) {
  if (code.mu.size() != code.sigma.size()) throw ShapeError("reparameterize: mu/sigma lengths differ");
  nd::Rng rng(nd::derive_seed(seed, "reparameterize"));
  std::vector<double> z(code.mu.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = code.mu[i] + code.sigma[i] * rng.normal();
  return z;
}

Tensor decode(const VaeModel& model, std::span<const double> z, std::size_t n) {
  if (z.size() != model.config.latent_dim) {
    throw ShapeError("vae decode: z has " + std::to_string(z.size()) + " dims, expected " +
                     std::to_string(model.config.latent_dim));
  }
  Tape tape;
  Bound p(tape, model.params, false);
  Var zv = tape.constant(Tensor::row({z.begin(), z.end()}));
  return decode_graph(p, model.config, zv, n).value();
}

VaeTrainResult train_vae(const std::vector<std::vector<motion::Pose>>& dataset,
                         const VaeConfig& config, const VaeTrainOptions& options) {
  if (dataset.empty()) throw ValidationError("train_vae: empty dataset");
  if (options.batch == 0) throw ValidationError("train_vae: batch size must be positive");
  for (const auto& seq : dataset) check_length(config, seq.size(), "train_vae");

  VaeTrainResult result{init_vae(config, nd::derive_seed(options.seed, "vae-init")), {}};
  nd::AdamState adam = nd::make_adam(result.model.params, {.lr = options.lr});
  nd::Rng rng(nd::derive_seed(options.seed, "vae-train"));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    EpochLoss sums;
    for (std::size_t start = 0; start < order.size(); start += options.batch) {
      const std::size_t stop = std::min(order.size(), start + options.batch);
      Tape tape;
      Bound p(tape, result.model.params, true);
      std::vector<Var> losses;
      for (std::size_t b = start; b < stop; ++b) {
        const auto& seq = dataset[order[b]];
        Var target = tape.constant(pose_matrix(seq));
        PosteriorVars post = encode_graph(p, config, target);
        std::vector<double> eps(config.latent_dim);
        for (double& e : eps) e = rng.normal();
        Var z = post.mu + nd::exp(post.log_sigma) * tape.constant(Tensor::row(std::move(eps)));
        ElboTerms terms = elbo_loss(target, decode_graph(p, config, z, seq.size()), post.mu,
                                    post.log_sigma);
        sums.total += terms.total.value().item();
        sums.reconstruction += terms.reconstruction.value().item();
        sums.kl += terms.kl.value().item();
        losses.push_back(terms.total);
      }
      Var loss = nd::scale(nd::sum(nd::concat(losses)), 1.0 / static_cast<double>(losses.size()));
      nd::adam_step(adam, result.model.params, p.gradients(tape.backward(loss)));
    }
    const double n = static_cast<double>(dataset.size());
    result.trace.push_back({sums.total / n, sums.reconstruction / n, sums.kl / n});
  }
  return result;
}

nlohmann::json vae_to_json(const VaeModel& model) {
  const VaeConfig& c = model.config;
  return {{"format", "semgest-vae"},
          {"version", kVaeFormatVersion},
          {"config",
           {{"latent_dim", c.latent_dim},
            {"hidden", c.hidden},
            {"min_len", c.min_len},
            {"max_len", c.max_len}}},
          {"params", nd::params_to_json(model.params)}};
}

VaeModel vae_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "semgest-vae" || doc.at("version") != kVaeFormatVersion) {
      throw ValidationError("vae document: unexpected format or version");
    }
    const auto& c = doc.at("config");
    VaeConfig config{c.at("latent_dim").get<std::size_t>(), c.at("hidden").get<std::size_t>(),
                     c.at("min_len").get<std::size_t>(), c.at("max_len").get<std::size_t>()};
    VaeModel model{config, nd::params_from_json(doc.at("params"))};
    const VaeModel reference = init_vae(config, 0);
    for (const auto& [name, t] : reference.params) {
      auto it = model.params.find(name);
      if (it == model.params.end() || it->second.shape() != t.shape()) {
        throw ValidationError("vae document: parameter '" + name + "' missing or misshapen");
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("vae document: ") + e.what());
  }
}

}  // namespace semgest::vae
