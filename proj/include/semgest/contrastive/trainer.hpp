#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semgest/contrastive/gesture_encoder.hpp"
#include "semgest/contrastive/losses.hpp"
#include "semgest/text/text_encoder.hpp"

namespace semgest::contrastive {

struct PairedSample {
  std::string id;
  text::AttentionSample text;
  std::vector<motion::Pose> keyposes;
  std::size_t cluster = 0;
};

struct JointTrainOptions {
  std::size_t epochs = 100;
  std::size_t batch = 16;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  double margin = 20.0;
  // The margin grows linearly from margin / warmup to its full value over
  // this many epochs; 0 keeps it fixed.
  std::size_t margin_warmup = 0;
  // Per-sample probability of encoding the text with the fixed override
  // attention (0.5 on annotated words, 0.1 elsewhere) instead of the predicted
  // one, so the feature head also sees blended word mixtures.
  double override_rate = 0.0;
  double alpha = 10.0;  // reconstruction weight
  double beta = 2.0;    // contrastive weight
  GestureEncoderConfig gesture;
};

struct BatchLossReport {
  double attention = 0.0;
  double reconstruction = 0.0;
  double contrastive = 0.0;
  double total = 0.0;
};

struct BatchGraph {
  nd::Var total;
  nd::Var attention;  // mean BCE over the batch
  nd::Var reconstruction;
  ContrastiveTerms contrastive;
  nd::Var distances;  // B x B
};

// One batch of the joint objective on a tape whose bound parameters hold
// both the text ("t1", "t2", "t3") and gesture ("g.") tensors.
BatchGraph joint_batch_graph(const nd::Bound& p, const text::TextEncoderConfig& text_config,
                             const JointTrainOptions& options,
                             std::span<const PairedSample* const> batch,
                             const std::vector<bool>& overridden = {});

// Raw attention of the override scheme for an annotated sample.
std::vector<double> annotated_override_raw(const text::AttentionSample& s, double padding_floor);

struct JointTrainResult {
  text::TextModel text;
  GestureModel gesture;
  std::vector<BatchLossReport> trace;  // per-epoch means over batches
};

// Mini-batch Adam on attention BCE + alpha * reconstruction + beta * contrastive.
// Batches are reshuffled every epoch; a trailing batch of one sample is skipped.
JointTrainResult train_joint(const std::vector<PairedSample>& data, text::TextModel initial_text,
                             const JointTrainOptions& options);

// Text and gesture features of one sample under trained models.
std::vector<double> text_feature(const text::TextModel& model, const text::AttentionSample& s);

struct PairDistanceSummary {
  double mean_positive = 0.0;
  double mean_negative = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// All text-gesture pairs of `data`, split by whether their clusters agree.
PairDistanceSummary pair_distances(const text::TextModel& text_model, const GestureModel& gesture,
                                   const std::vector<PairedSample>& data);

}  // namespace semgest::contrastive
