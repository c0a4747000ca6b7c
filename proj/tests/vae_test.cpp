#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gradcheck.hpp"
#include "semgest/error.hpp"
#include "semgest/nd/rng.hpp"
#include "semgest/vae/gesture_vae.hpp"

using namespace semgest;
using namespace semgest::vae;
using motion::Pose;
using nd::Tensor;
using nd::Var;

namespace {

std::vector<Pose> random_poses(nd::Rng& rng, std::size_t n) {
  std::vector<Pose> out(n);
  for (Pose& p : out) {
    for (double& c : p.coords) c = rng.uniform(-0.5, 0.5);
  }
  return out;
}

const VaeConfig kSmall{.latent_dim = 3, .hidden = 4, .min_len = 5, .max_len = 12};

}  // namespace

TEST_CASE("encode gives positive sigma and is deterministic") {
  nd::Rng rng(1);
  const VaeModel model = init_vae({}, 7);
  const auto poses = random_poses(rng, 7);
  const LatentCode a = encode(model, poses);
  const LatentCode b = encode(model, poses);
  REQUIRE(a.mu.size() == 32);
  for (double s : a.sigma) CHECK(s > 0.0);
  CHECK(a.mu == b.mu);
  CHECK(a.sigma == b.sigma);
  CHECK(a.z == a.mu);
}

TEST_CASE("encode uses temporal order") {
  nd::Rng rng(2);
  const VaeModel model = init_vae({}, 3);
  auto poses = random_poses(rng, 8);
  const LatentCode fwd = encode(model, poses);
  std::reverse(poses.begin(), poses.end());
  CHECK(encode(model, poses).mu != fwd.mu);
}

TEST_CASE("sequence length limits are enforced") {
  nd::Rng rng(3);
  const VaeModel model = init_vae({}, 3);
  CHECK_THROWS_AS(encode(model, random_poses(rng, 4)), ValidationError);
  CHECK_THROWS_AS(encode(model, random_poses(rng, 13)), ValidationError);
  const std::vector<double> z(32, 0.1);
  CHECK_THROWS_AS(decode(model, z, 4), ValidationError);
  CHECK_THROWS_AS(decode(model, z, 13), ValidationError);
  CHECK_THROWS_AS(decode(model, std::vector<double>(31, 0.0), 6), ShapeError);
}

TEST_CASE("decode output shape and determinism") {
  const VaeModel model = init_vae({}, 5);
  const std::vector<double> z(32, 0.3);
  for (std::size_t n = 5; n <= 12; ++n) {
    const Tensor out = decode(model, z, n);
    CHECK(out.shape() == nd::Shape{n, 24});
    CHECK(out == decode(model, z, n));
  }
}

TEST_CASE("KL closed form special values") {
  const std::vector<double> zeros(32, 0.0), ones(32, 1.0);
  CHECK(kl_divergence(zeros, ones) == 0.0);
  std::vector<double> e1 = zeros;
  e1[0] = 1.0;
  CHECK(kl_divergence(e1, ones) == doctest::Approx(0.5).epsilon(1e-15));

  nd::Tape tape;
  Var mu = tape.constant(Tensor::row(std::vector<double>(32, 0.0)));
  Var ls = tape.constant(Tensor::row(std::vector<double>(32, 0.0)));
  Var x = tape.constant(Tensor::matrix(1, 2, {0.5, -1.0}));
  const ElboTerms t = elbo_loss(x, x, mu, ls);
  CHECK(t.kl.value().item() == 0.0);
  CHECK(t.reconstruction.value().item() == 0.0);
}

TEST_CASE("KL closed form is non-negative on random posteriors") {
  nd::Rng rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> mu(6), sigma(6);
    for (std::size_t i = 0; i < 6; ++i) {
      mu[i] = rng.normal();
      sigma[i] = std::exp(rng.uniform(-2, 2));
    }
    CHECK(kl_divergence(mu, sigma) >= 0.0);
  }
}

TEST_CASE("KL closed form agrees with a Monte-Carlo estimate") {
  nd::Rng rng(2024);
  const std::vector<double> mu{0.7, -1.2, 0.1, 0.4};
  const std::vector<double> sigma{0.5, 1.3, 0.8, 2.0};
  const std::size_t draws = 1000000;
  double acc = 0.0;
  for (std::size_t s = 0; s < draws; ++s) {
    double log_ratio = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double eps = rng.normal();
      const double z = mu[i] + sigma[i] * eps;
      // log q(z) - log p(z); the 2 pi terms cancel.
      log_ratio += -0.5 * eps * eps - std::log(sigma[i]) + 0.5 * z * z;
    }
    acc += log_ratio;
  }
  const double mc = acc / static_cast<double>(draws);
  const double closed = kl_divergence(mu, sigma);
  CHECK(std::abs(mc - closed) / closed < 0.01);
}

TEST_CASE("reparameterization: tiny sigma, seeding, sample mean") {
  LatentCode code{{0.5, -2.0, 1.0}, {1e-300, 1e-300, 1e-300}, {}};
  CHECK(reparameterize(code, 4) == code.mu);

  code.sigma = {0.3, 1.0, 2.5};
  CHECK(reparameterize(code, 11) == reparameterize(code, 11));
  CHECK(reparameterize(code, 11) != reparameterize(code, 12));

  const std::size_t draws = 100000;
  std::vector<double> mean(3, 0.0);
  for (std::size_t s = 0; s < draws; ++s) {
    const auto z = reparameterize(code, s);
    for (std::size_t i = 0; i < 3; ++i) mean[i] += z[i] / static_cast<double>(draws);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(mean[i] - code.mu[i]) < 3.0 * code.sigma[i] / std::sqrt(double(draws)));
  }
}

TEST_CASE("ELBO gradient check through encoder, sampling and decoder") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    nd::Rng rng(seed);
    const VaeModel model = init_vae(kSmall, seed + 100);
    const auto poses = random_poses(rng, 6);
    std::vector<double> eps(kSmall.latent_dim);
    for (double& e : eps) e = rng.normal();
    auto loss = [&](nd::Tape& tape, const nd::Bound& p) {
      Var target = tape.constant(pose_matrix(poses));
      PosteriorVars post = encode_graph(p, kSmall, target);
      Var z = post.mu + nd::exp(post.log_sigma) * tape.constant(Tensor::row(eps));
      return elbo_loss(target, decode_graph(p, kSmall, z, poses.size()), post.mu, post.log_sigma)
          .total;
    };
    const auto r = testing::grad_check(loss, model.params, seed);
    CHECK(r.relative_error < 1e-4);
  }
}

TEST_CASE("training memorizes a single sequence") {
  nd::Rng rng(4);
  const std::vector<std::vector<Pose>> data{random_poses(rng, 6)};
  const VaeTrainResult r =
      train_vae(data, {.latent_dim = 8, .hidden = 16}, {.epochs = 600, .batch = 1, .lr = 1e-2, .seed = 1});
  CHECK(r.trace.back().reconstruction < 0.01 * r.trace.front().reconstruction);
  CHECK(r.trace.back().total < 0.5 * r.trace.front().total);
}

TEST_CASE("training is seed-deterministic and rejects empty data") {
  nd::Rng rng(5);
  std::vector<std::vector<Pose>> data;
  for (int i = 0; i < 3; ++i) data.push_back(random_poses(rng, 5 + i));
  const VaeTrainOptions opts{.epochs = 3, .batch = 2, .lr = 1e-3, .seed = 9};
  const auto a = train_vae(data, kSmall, opts);
  const auto b = train_vae(data, kSmall, opts);
  CHECK(a.model.params == b.model.params);
  CHECK(a.trace.size() == 3);
  CHECK_THROWS_AS(train_vae({}, kSmall, opts), ValidationError);
}

TEST_CASE("VAE document round-trips bit-exactly") {
  const VaeModel model = init_vae(kSmall, 77);
  const std::string text = vae_to_json(model).dump();
  const VaeModel back = vae_from_json(nlohmann::json::parse(text));
  CHECK(back.config == model.config);
  CHECK(back.params == model.params);
  CHECK(vae_to_json(back).dump() == text);

  auto doc = vae_to_json(model);
  doc["config"]["hidden"] = 5;
  CHECK_THROWS_AS(vae_from_json(doc), ValidationError);
}
