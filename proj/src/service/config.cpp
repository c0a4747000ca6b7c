#include "semgest/service/config.hpp"

#include <cstdio>
#include <set>

#include "semgest/error.hpp"
#include "semgest/json_file.hpp"
#include "semgest/nd/rng.hpp"

namespace semgest::service {

namespace {

// Hashed keys, in canonical order.
nlohmann::json hashed_json(const PipelineConfig& c) {
  return {{"seed", c.seed},
          {"latent_dim", c.latent_dim},
          {"vae_hidden", c.vae_hidden},
          {"vae_epochs", c.vae_epochs},
          {"vae_batch", c.vae_batch},
          {"vae_lr", c.vae_lr},
          {"clusters", c.clusters},
          {"feature_dim", c.feature_dim},
          {"text_hidden", c.text_hidden},
          {"padding_floor", c.padding_floor},
          {"pretrain_epochs", c.pretrain_epochs},
          {"pretrain_batch", c.pretrain_batch},
          {"pretrain_lr", c.pretrain_lr},
          {"gesture_hidden", c.gesture_hidden},
          {"margin", c.margin},
          {"margin_warmup", c.margin_warmup},
          {"override_rate", c.override_rate},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"batch", c.batch},
          {"epochs", c.epochs},
          {"lr", c.lr}};
}

template <typename T>
void take(const nlohmann::json& doc, const char* key, T& field) {
  if (doc.contains(key)) field = doc.at(key).get<T>();
}

}  // namespace

PipelineConfig toy_config() {
  PipelineConfig c;
  c.clusters = 4;
  c.vae_epochs = 60;
  c.pretrain_epochs = 20;
  c.pretrain_lr = 1e-2;
  c.margin_warmup = 50;
  c.override_rate = 0.5;
  return c;
}

nlohmann::json config_to_json(const PipelineConfig& config) {
  nlohmann::json doc = hashed_json(config);
  doc["data_dir"] = config.data_dir.generic_string();
  doc["work_dir"] = config.work_dir.generic_string();
  doc["k_neighbors"] = config.k_neighbors;
  return doc;
}

PipelineConfig config_from_json(const nlohmann::json& doc) {
  PipelineConfig c;
  if (!doc.is_object()) throw ValidationError("config: expected a JSON object");
  const nlohmann::json known = config_to_json(c);
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw ValidationError("config: unknown key '" + key + "'");
  }
  try {
    std::string data_dir = c.data_dir.string(), work_dir = c.work_dir.string();
    take(doc, "data_dir", data_dir);
    take(doc, "work_dir", work_dir);
    c.data_dir = data_dir;
    c.work_dir = work_dir;
    take(doc, "seed", c.seed);
    take(doc, "latent_dim", c.latent_dim);
    take(doc, "vae_hidden", c.vae_hidden);
    take(doc, "vae_epochs", c.vae_epochs);
    take(doc, "vae_batch", c.vae_batch);
    take(doc, "vae_lr", c.vae_lr);
    take(doc, "clusters", c.clusters);
    take(doc, "feature_dim", c.feature_dim);
    take(doc, "text_hidden", c.text_hidden);
    take(doc, "padding_floor", c.padding_floor);
    take(doc, "pretrain_epochs", c.pretrain_epochs);
    take(doc, "pretrain_batch", c.pretrain_batch);
    take(doc, "pretrain_lr", c.pretrain_lr);
    take(doc, "gesture_hidden", c.gesture_hidden);
    take(doc, "margin", c.margin);
    take(doc, "margin_warmup", c.margin_warmup);
    take(doc, "override_rate", c.override_rate);
    take(doc, "alpha", c.alpha);
    take(doc, "beta", c.beta);
    take(doc, "batch", c.batch);
    take(doc, "epochs", c.epochs);
    take(doc, "lr", c.lr);
    take(doc, "k_neighbors", c.k_neighbors);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  validate_config(c);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json_file(path));
}

void save_config(const PipelineConfig& config, const std::filesystem::path& path) {
  write_json_file(config_to_json(config), path);
}

std::string config_hash(const PipelineConfig& config) {
  char out[17];
  std::snprintf(out, sizeof out, "%016llx",
                static_cast<unsigned long long>(nd::fnv1a(hashed_json(config).dump())));
  return out;
}

void validate_config(const PipelineConfig& c) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ValidationError(std::string("config: ") + name + " must be positive");
  };
  for (const auto& [value, name] :
       {std::pair{c.latent_dim, "latent_dim"}, {c.vae_hidden, "vae_hidden"},
        {c.vae_epochs, "vae_epochs"}, {c.vae_batch, "vae_batch"}, {c.clusters, "clusters"},
        {c.feature_dim, "feature_dim"}, {c.text_hidden, "text_hidden"},
        {c.pretrain_epochs, "pretrain_epochs"}, {c.pretrain_batch, "pretrain_batch"},
        {c.gesture_hidden, "gesture_hidden"}, {c.epochs, "epochs"}, {c.k_neighbors, "k_neighbors"}}) {
    if (value == 0) throw ValidationError(std::string("config: ") + name + " must be positive");
  }
  if (c.batch < 2) throw ValidationError("config: batch must be at least 2");
  positive(c.vae_lr, "vae_lr");
  positive(c.pretrain_lr, "pretrain_lr");
  positive(c.lr, "lr");
  positive(c.padding_floor, "padding_floor");
  if (!(c.margin >= 0.0)) throw ValidationError("config: margin must be non-negative");
  if (!(c.override_rate >= 0.0 && c.override_rate <= 1.0)) {
    throw ValidationError("config: override_rate must be in [0, 1]");
  }
  if (c.margin_warmup > c.epochs) {
    throw ValidationError("config: margin_warmup must not exceed epochs");
  }
  if (!(c.alpha >= 0.0) || !(c.beta >= 0.0)) {
    throw ValidationError("config: loss weights must be non-negative");
  }
}

}  // namespace semgest::service
