#include "semgest/service/pipeline.hpp"

#include <algorithm>

#include "semgest/error.hpp"
#include "semgest/json_file.hpp"
#include "semgest/nd/rng.hpp"
#include "semgest/text/tokenizer.hpp"

namespace semgest::service {

namespace fs = std::filesystem;

namespace {

constexpr int kStageFormatVersion = 1;

nlohmann::json stage_document(const std::string& format, const std::string& hash,
                              nlohmann::json body) {
  body["format"] = format;
  body["version"] = kStageFormatVersion;
  body["config_hash"] = hash;
  return body;
}

nlohmann::json read_stage(const fs::path& path, const std::string& format, const std::string& hash) {
  const nlohmann::json doc = read_json_file(path);
  try {
    if (doc.at("format") != format || doc.at("version") != kStageFormatVersion) {
      throw ValidationError(path.string() + ": not a " + format + " document");
    }
    contrastive::require_config(hash, doc.at("config_hash").get<std::string>(), path.string());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return doc;
}

ingest::Dataset load_data(const PipelineConfig& config) {
  return ingest::load_dataset(paths_for(config).manifest);
}

vae::VaeConfig vae_config(const PipelineConfig& c) {
  return {.latent_dim = c.latent_dim, .hidden = c.vae_hidden};
}

text::TextEncoderConfig text_config(const PipelineConfig& c) {
  return {.feature_dim = c.feature_dim, .hidden = c.text_hidden, .padding_floor = c.padding_floor};
}

std::vector<motion::Pose> keyposes_of(const motion::MotionClip& clip) {
  return motion::extract_keyposes(clip).poses;
}

std::vector<std::size_t> require_split(const ingest::Dataset& d, const std::string& name) {
  std::vector<std::size_t> indices = d.split(name);
  if (indices.empty()) throw ValidationError("dataset has no samples in split '" + name + "'");
  return indices;
}

// Held-out evaluation uses the test split, falling back to validation.
std::vector<std::size_t> held_out(const ingest::Dataset& d) {
  std::vector<std::size_t> indices = d.split("test");
  return indices.empty() ? d.split("val") : indices;
}

}  // namespace

Paths paths_for(const PipelineConfig& config) {
  const fs::path& w = config.work_dir;
  return {config.data_dir / "manifest.json", w / "vae.json",        w / "clusters.json",
          w / "pretrained.json",              w / "checkpoint.json", w / "library"};
}

text::AttentionSample attention_sample(const ingest::Dataset& dataset, std::size_t index) {
  const ingest::AnnotatedSample& s = dataset.samples.at(index);
  const text::TokenizedText tt = text::tokenize(s.text, s.text_id);
  std::vector<double> labels(text::kMaxTokens, 0.0);
  for (std::size_t i = 0; i < s.labels.size() && i < labels.size(); ++i) labels[i] = s.labels[i];
  return {text::embed(tt, dataset.embeddings), std::move(labels), tt.mask};
}

std::vector<contrastive::PairedSample> paired_samples(const ingest::Dataset& dataset,
                                                      const std::string& split,
                                                      const vae::VaeModel& vae,
                                                      const cluster::ClusterModel& clusters) {
  std::vector<contrastive::PairedSample> out;
  for (std::size_t i : dataset.split(split)) {
    const ingest::AnnotatedSample& s = dataset.samples[i];
    std::vector<motion::Pose> kp = keyposes_of(dataset.motions[i]);
    const auto it = clusters.assignments.find(s.text_id);
    const std::size_t c = it != clusters.assignments.end()
                              ? it->second
                              : cluster::nearest_centroid(clusters, vae::encode(vae, kp).mu);
    out.push_back({s.text_id, attention_sample(dataset, i), std::move(kp), c});
  }
  return out;
}

nlohmann::json run_synth_data(const PipelineConfig& config, const ingest::SynthOptions& options) {
  validate_config(config);
  const ingest::Dataset d = ingest::synth_dataset(config.seed, options);
  ingest::save_dataset(d, config.data_dir);
  return {{"stage", "synth-data"},
          {"samples", d.samples.size()},
          {"families", options.families},
          {"manifest", paths_for(config).manifest.generic_string()}};
}

nlohmann::json run_train_vae(const PipelineConfig& config) {
  validate_config(config);
  const ingest::Dataset d = load_data(config);
  std::vector<std::vector<motion::Pose>> data;
  for (std::size_t i : require_split(d, "train")) data.push_back(keyposes_of(d.motions[i]));
  const vae::VaeTrainResult r =
      vae::train_vae(data, vae_config(config),
                     {.epochs = config.vae_epochs,
                      .batch = std::min(config.vae_batch, data.size()),
                      .lr = config.vae_lr,
                      .seed = nd::derive_seed(config.seed, "vae")});
  nlohmann::json trace = nlohmann::json::array();
  for (const vae::EpochLoss& e : r.trace) trace.push_back(e.total);
  const std::string hash = config_hash(config);
  fs::create_directories(config.work_dir);
  write_json_file(stage_document("semgest-vae-stage", hash,
                                 {{"model", vae::vae_to_json(r.model)}, {"trace", trace}}),
                  paths_for(config).vae);
  return {{"stage", "train-vae"},
          {"config_hash", hash},
          {"samples", data.size()},
          {"initial_loss", r.trace.front().total},
          {"final_loss", r.trace.back().total}};
}

vae::VaeModel load_vae_artifact(const fs::path& path, const std::string& hash) {
  return vae::vae_from_json(read_stage(path, "semgest-vae-stage", hash).at("model"));
}

cluster::ClusterModel load_cluster_artifact(const fs::path& path, const std::string& hash) {
  return cluster::cluster_from_json(read_stage(path, "semgest-cluster-stage", hash).at("model"));
}

text::TextModel load_pretrained_artifact(const fs::path& path, const std::string& hash) {
  return text::text_model_from_json(read_stage(path, "semgest-pretrain-stage", hash).at("model"));
}

nlohmann::json run_cluster(const PipelineConfig& config) {
  validate_config(config);
  const std::string hash = config_hash(config);
  const Paths paths = paths_for(config);
  const vae::VaeModel vae = load_vae_artifact(paths.vae, hash);
  const ingest::Dataset d = load_data(config);
  std::vector<cluster::LabeledPoint> points;
  const std::vector<std::size_t> train = require_split(d, "train");
  for (std::size_t i : train) {
    points.emplace_back(d.samples[i].text_id, vae::encode(vae, keyposes_of(d.motions[i])).mu);
  }
  const cluster::ClusterModel model =
      cluster::kmeans(points, config.clusters, nd::derive_seed(config.seed, "kmeans"));
  write_json_file(
      stage_document("semgest-cluster-stage", hash, {{"model", cluster::cluster_to_json(model)}}),
      paths.clusters);

  nlohmann::json report = {{"stage", "cluster"},
                           {"config_hash", hash},
                           {"k", model.k},
                           {"sse", model.sse_trace.empty() ? 0.0 : model.sse_trace.back()}};
  std::vector<std::size_t> assigned, families;
  for (std::size_t i : train) {
    if (!d.samples[i].family) break;
    assigned.push_back(model.assignments.at(d.samples[i].text_id));
    families.push_back(*d.samples[i].family);
  }
  if (assigned.size() == train.size()) report["purity"] = cluster::purity(assigned, families);
  return report;
}

double held_out_auc(const text::TextModel& model, const ingest::Dataset& d) {
  std::vector<double> scores;
  std::vector<bool> labels;
  for (std::size_t i : held_out(d)) {
    const text::AttentionSample s = attention_sample(d, i);
    const text::TokenizedText tt = text::tokenize(d.samples[i].text);
    const text::AttendedText a = text::attend(model, d.embeddings, tt);
    for (std::size_t t = 0; t < tt.tokens.size(); ++t) {
      scores.push_back(a.raw_attention[t]);
      labels.push_back(s.labels[t] == 1.0);
    }
  }
  return metrics::roc_auc(scores, labels);
}

nlohmann::json run_pretrain_attention(const PipelineConfig& config) {
  validate_config(config);
  const std::string hash = config_hash(config);
  const ingest::Dataset d = load_data(config);
  std::vector<text::AttentionSample> data;
  for (std::size_t i : require_split(d, "train")) data.push_back(attention_sample(d, i));
  const text::PretrainResult r = text::pretrain_attention(
      data, text::init_text_model(text_config(config), nd::derive_seed(config.seed, "text-init")),
      {.epochs = config.pretrain_epochs,
       .batch = std::min(config.pretrain_batch, data.size()),
       .lr = config.pretrain_lr,
       .seed = nd::derive_seed(config.seed, "pretrain")});
  const double auc = held_out_auc(r.model, d);
  fs::create_directories(config.work_dir);
  write_json_file(stage_document("semgest-pretrain-stage", hash,
                                 {{"model", text::text_model_to_json(r.model)}, {"auc", auc}}),
                  paths_for(config).pretrained);
  return {{"stage", "pretrain-attention"},
          {"config_hash", hash},
          {"initial_bce", r.trace.front()},
          {"final_bce", r.trace.back()},
          {"held_out_auc", auc}};
}

nlohmann::json run_train(const PipelineConfig& config) {
  validate_config(config);
  const std::string hash = config_hash(config);
  const Paths paths = paths_for(config);
  const vae::VaeModel vae = load_vae_artifact(paths.vae, hash);
  const cluster::ClusterModel clusters = load_cluster_artifact(paths.clusters, hash);
  const text::TextModel pretrained = load_pretrained_artifact(paths.pretrained, hash);
  const ingest::Dataset d = load_data(config);
  const std::vector<contrastive::PairedSample> train = paired_samples(d, "train", vae, clusters);
  if (train.empty()) throw ValidationError("dataset has no samples in split 'train'");

  contrastive::JointTrainOptions options{
      .epochs = config.epochs,
      .batch = std::min(config.batch, train.size()),
      .lr = config.lr,
      .seed = nd::derive_seed(config.seed, "joint"),
      .margin = config.margin,
      .margin_warmup = config.margin_warmup,
      .override_rate = config.override_rate,
      .alpha = config.alpha,
      .beta = config.beta,
      .gesture = {.feature_dim = config.feature_dim, .hidden = config.gesture_hidden}};
  contrastive::JointTrainResult r = contrastive::train_joint(train, pretrained, options);
  const contrastive::Checkpoint checkpoint{hash, std::move(r.text), std::move(r.gesture)};
  contrastive::save_checkpoint(checkpoint, paths.checkpoint);

  nlohmann::json report = {{"stage", "train"},
                           {"config_hash", hash},
                           {"initial_loss", r.trace.front().total},
                           {"final_loss", r.trace.back().total}};
  const std::vector<std::size_t> test = held_out(d);
  if (!test.empty()) {
    const std::string split = d.split("test").empty() ? "val" : "test";
    const contrastive::PairDistanceSummary s = contrastive::pair_distances(
        checkpoint.text, checkpoint.gesture, paired_samples(d, split, vae, clusters));
    report["held_out"] = {{"split", split},
                          {"mean_positive", s.mean_positive},
                          {"mean_negative", s.mean_negative},
                          {"positives", s.positives},
                          {"negatives", s.negatives}};
  }
  return report;
}

nlohmann::json run_build_library(const PipelineConfig& config) {
  validate_config(config);
  const std::string hash = config_hash(config);
  const Paths paths = paths_for(config);
  const contrastive::Checkpoint checkpoint = contrastive::load_checkpoint(paths.checkpoint);
  contrastive::require_config(hash, checkpoint.config_hash, paths.checkpoint.string());
  const cluster::ClusterModel clusters = load_cluster_artifact(paths.clusters, hash);
  const ingest::Dataset d = load_data(config);
  std::vector<retrieval::LibrarySource> sources;
  for (std::size_t i : require_split(d, "train")) {
    const auto it = clusters.assignments.find(d.samples[i].text_id);
    if (it == clusters.assignments.end()) {
      throw ConfigMismatchError("cluster assignment has no entry for '" + d.samples[i].text_id +
                                "'");
    }
    sources.push_back({d.motions[i], keyposes_of(d.motions[i]), it->second});
  }
  const retrieval::GestureLibrary library = retrieval::build_library(sources, checkpoint);
  retrieval::save_library(library, paths.library);
  return {{"stage", "build-library"},
          {"config_hash", hash},
          {"entries", library.size()},
          {"library", paths.library.generic_string()}};
}

Runtime load_runtime(const PipelineConfig& config) {
  validate_config(config);
  const Paths paths = paths_for(config);
  Runtime rt{config, config_hash(config), contrastive::load_checkpoint(paths.checkpoint),
             retrieval::load_library(paths.library), load_data(config).embeddings};
  contrastive::require_config(rt.config_hash, rt.checkpoint.config_hash, paths.checkpoint.string());
  contrastive::require_config(rt.config_hash, rt.library.config_hash, paths.library.string());
  return rt;
}

retrieval::Generation run_generate(const Runtime& runtime,
                                   const retrieval::GenerationRequest& request,
                                   const fs::path& out) {
  retrieval::Generation g =
      retrieval::generate(request, runtime.checkpoint, runtime.embeddings, runtime.library);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  motion::save_motion(g.motion, out);
  nlohmann::json diagnostics = retrieval::diagnostics_json(g);
  diagnostics["config_hash"] = runtime.config_hash;
  write_json_file(diagnostics, out.parent_path() / (out.stem().string() + ".diagnostics.json"));
  return g;
}

std::vector<motion::MotionClip> load_clip_set(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("clip set '" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && e.path().extension() == ".json" &&
        !name.ends_with(".diagnostics.json")) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<motion::MotionClip> clips;
  for (const fs::path& f : files) clips.push_back(motion::load_motion(f));
  if (clips.empty()) throw ValidationError("clip set '" + dir.string() + "' has no motion files");
  return clips;
}

metrics::MetricReport run_eval(const PipelineConfig& config, const EvalOptions& options) {
  if (options.sets.empty()) throw ValidationError("eval: at least one clip set is required");
  if (!options.scores.empty() && options.scores.size() != options.sets.size()) {
    throw ValidationError("eval: expected one score per clip set");
  }
  std::vector<std::vector<motion::MotionClip>> sets;
  for (const fs::path& p : options.sets) sets.push_back(load_clip_set(p));

  std::optional<vae::VaeModel> vae;
  const Paths paths = paths_for(config);
  if (fs::exists(paths.vae)) vae = load_vae_artifact(paths.vae, config_hash(config));

  metrics::MetricReport report;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    metrics::SetSummary summary{options.sets[s].generic_string(), sets[s].size(), std::nullopt,
                                0.0};
    for (const motion::MotionClip& c : sets[s]) summary.jerk += motion::jerk(c);
    summary.jerk /= static_cast<double>(sets[s].size());
    if (vae && sets[s].size() >= 2) {
      metrics::Rows means;
      for (const motion::MotionClip& c : sets[s]) means.push_back(vae::encode(*vae, keyposes_of(c)).mu);
      summary.diversity = metrics::diversity(means);
    }
    report.sets.push_back(std::move(summary));
  }

  if (sets.size() >= 2) {
    const metrics::FgdFeatureModel model =
        !options.fgd_model.empty()
            ? metrics::fgd_model_from_json(read_json_file(options.fgd_model))
            : metrics::train_fgd_model(sets[0], options.fgd_epochs,
                                       nd::derive_seed(options.seed, "fgd"));
    report.fgd = metrics::fgd(model, sets[0], sets[1]);
    const std::size_t n = std::min(sets[0].size(), sets[1].size());
    double l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) l1 += metrics::l1_metric(sets[1][i], sets[0][i]);
    report.l1 = l1 / static_cast<double>(n);
  }

  if (!options.scores.empty()) {
    std::vector<double> jerks, diversities;
    for (const metrics::SetSummary& s : report.sets) {
      jerks.push_back(s.jerk);
      if (s.diversity) diversities.push_back(*s.diversity);
    }
    report.correlations["jerk"] = metrics::pearson(jerks, options.scores);
    if (diversities.size() == jerks.size()) {
      report.correlations["diversity"] = metrics::pearson(diversities, options.scores);
    }
  }
  return report;
}

}  // namespace semgest::service
