#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace semgest::service {

// Paths and hyperparameters of every pipeline stage. Defaults are the
// published constants; toy_config() scales the schedule down for the
// synthetic corpus.
struct PipelineConfig {
  std::filesystem::path data_dir = "data";
  std::filesystem::path work_dir = "work";
  std::uint64_t seed = 0;

  // gesture VAE
  std::size_t latent_dim = 32;
  std::size_t vae_hidden = 64;
  std::size_t vae_epochs = 200;
  std::size_t vae_batch = 16;
  double vae_lr = 1e-3;

  std::size_t clusters = 40;

  // text encoder and attention pre-training
  std::size_t feature_dim = 32;
  std::size_t text_hidden = 64;
  double padding_floor = 1e-4;
  std::size_t pretrain_epochs = 50;
  std::size_t pretrain_batch = 16;
  double pretrain_lr = 1e-3;

  // joint training
  std::size_t gesture_hidden = 64;
  double margin = 20.0;
  std::size_t margin_warmup = 0;  // epochs of linear margin ramp-up
  double override_rate = 0.0;     // share of joint-training samples encoded with override attention
  double alpha = 10.0;
  double beta = 2.0;
  std::size_t batch = 16;
  std::size_t epochs = 100;
  double lr = 1e-3;

  // generation; not part of the hash
  std::size_t k_neighbors = 8;
};

PipelineConfig toy_config();

nlohmann::json config_to_json(const PipelineConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& doc);
PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

// FNV-1a over the canonical JSON of everything that shapes trained
// artifacts (paths and generation settings excluded), as 16 hex digits.
std::string config_hash(const PipelineConfig& config);

void validate_config(const PipelineConfig& config);

}  // namespace semgest::service
