#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "semgest/cluster/kmeans.hpp"
#include "semgest/contrastive/checkpoint.hpp"
#include "semgest/contrastive/trainer.hpp"
#include "semgest/ingest/dataset.hpp"
#include "semgest/ingest/synth.hpp"
#include "semgest/metrics/metrics.hpp"
#include "semgest/retrieval/generate.hpp"
#include "semgest/service/config.hpp"
#include "semgest/vae/gesture_vae.hpp"

namespace semgest::service {

// Artifact locations. The dataset lives in data_dir; everything trained goes
// to work_dir.
struct Paths {
  std::filesystem::path manifest;
  std::filesystem::path vae;
  std::filesystem::path clusters;
  std::filesystem::path pretrained;
  std::filesystem::path checkpoint;
  std::filesystem::path library;
};
Paths paths_for(const PipelineConfig& config);

// Every stage returns a JSON summary (printed by the CLI) and writes its
// artifact, tagged with config_hash(config). Stages that read an earlier
// artifact throw ConfigMismatchError when its hash differs.
nlohmann::json run_synth_data(const PipelineConfig& config, const ingest::SynthOptions& options);
nlohmann::json run_train_vae(const PipelineConfig& config);
nlohmann::json run_cluster(const PipelineConfig& config);
nlohmann::json run_pretrain_attention(const PipelineConfig& config);
nlohmann::json run_train(const PipelineConfig& config);
nlohmann::json run_build_library(const PipelineConfig& config);

// Hash-checked readers for the stage artifacts.
vae::VaeModel load_vae_artifact(const std::filesystem::path& path, const std::string& hash);
cluster::ClusterModel load_cluster_artifact(const std::filesystem::path& path,
                                            const std::string& hash);
text::TextModel load_pretrained_artifact(const std::filesystem::path& path,
                                         const std::string& hash);

// Joint-training samples for one split. Clusters come from the stored
// assignment for training ids and from the nearest centroid of the VAE mean
// otherwise.
std::vector<contrastive::PairedSample> paired_samples(const ingest::Dataset& dataset,
                                                      const std::string& split,
                                                      const vae::VaeModel& vae,
                                                      const cluster::ClusterModel& clusters);
text::AttentionSample attention_sample(const ingest::Dataset& dataset, std::size_t index);
// ROC-AUC of raw attention against the word labels over the test split
// (validation when there is no test split).
double held_out_auc(const text::TextModel& model, const ingest::Dataset& dataset);

// Everything generation needs, loaded once and checked against one hash.
struct Runtime {
  PipelineConfig config;
  std::string config_hash;
  contrastive::Checkpoint checkpoint;
  retrieval::GestureLibrary library;
  text::EmbeddingProvider embeddings;
};
Runtime load_runtime(const PipelineConfig& config);

// Writes the motion clip to `out` and the diagnostics next to it as
// <stem>.diagnostics.json.
retrieval::Generation run_generate(const Runtime& runtime, const retrieval::GenerationRequest& request,
                                   const std::filesystem::path& out);

// A clip set is a directory of motion JSON files, read in file-name order.
std::vector<motion::MotionClip> load_clip_set(const std::filesystem::path& dir);

struct EvalOptions {
  std::vector<std::filesystem::path> sets;
  std::filesystem::path fgd_model;  // trained from the first set when absent
  std::size_t fgd_epochs = 30;
  std::uint64_t seed = 0;
  std::vector<double> scores;  // optional, one per set, for correlations
};
// Diversity (on VAE means when a VAE artifact exists) and jerk per set, FGD
// and L1 of each later set against the first.
metrics::MetricReport run_eval(const PipelineConfig& config, const EvalOptions& options);

}  // namespace semgest::service
