#include "semgest/contrastive/trainer.hpp"

#include <numeric>

#include "semgest/error.hpp"
#include "semgest/nd/adam.hpp"
#include "semgest/nd/rng.hpp"
#include "semgest/vae/gesture_vae.hpp"

namespace semgest::contrastive {

using nd::Bound;
using nd::Tape;
using nd::Tensor;
using nd::Var;

BatchGraph joint_batch_graph(const Bound& p, const text::TextEncoderConfig& text_config,
                             const JointTrainOptions& options,
                             std::span<const PairedSample* const> batch,
                             const std::vector<bool>& overridden) {
  if (batch.empty()) throw ValidationError("joint batch: empty");
  if (!overridden.empty() && overridden.size() != batch.size()) {
    throw ShapeError("joint batch: one override flag per sample");
  }
  Tape& tape = p.tape();
  const std::size_t b = batch.size();
  std::vector<Var> bces, flats, gesture_features, recons, targets;
  std::vector<double> positives(b * b);
  for (std::size_t i = 0; i < b; ++i) {
    const PairedSample& s = *batch[i];
    Var w = tape.constant(s.text.words);
    Var raw = text::raw_attention_graph(p, text_config, w, s.text.mask);
    bces.push_back(text::attention_bce(raw, s.text.labels, s.text.mask));
    Var a = text::normalize_attention(raw);
    if (!overridden.empty() && overridden[i]) {
      a = text::normalize_attention(tape.constant(Tensor::matrix(
          text::kMaxTokens, 1, annotated_override_raw(s.text, text_config.padding_floor))));
    }
    flats.push_back(text::weighted_words_graph(p, w, a));

    Var seq = tape.constant(vae::pose_matrix(s.keyposes));
    Var fg = gesture_feature_graph(p, options.gesture, seq);
    gesture_features.push_back(fg);
    recons.push_back(gesture_decode_graph(p, options.gesture, fg, s.keyposes.size()));
    targets.push_back(seq);
    for (std::size_t j = 0; j < b; ++j) {
      positives[i * b + j] = s.cluster == batch[j]->cluster ? 1.0 : 0.0;
    }
  }
  BatchGraph g;
  g.attention = nd::mean(nd::concat(bces));
  g.reconstruction = reconstruction_loss(recons, targets);
  Var ft = text::feature_head_graph(p, nd::concat(flats, 0));
  g.distances = distance_matrix(ft, nd::concat(gesture_features, 0));
  g.contrastive = contrastive_loss(Tensor::matrix(b, b, std::move(positives)), g.distances,
                                   options.margin);
  g.total = total_loss(g.attention, g.reconstruction, g.contrastive.total, options.alpha,
                       options.beta);
  return g;
}

std::vector<double> annotated_override_raw(const text::AttentionSample& s, double padding_floor) {
  std::vector<double> raw(text::kMaxTokens, padding_floor);
  for (std::size_t i = 0; i < text::kMaxTokens; ++i) {
    if (s.mask[i]) raw[i] = s.labels[i] > 0.5 ? 0.5 : 0.1;
  }
  return raw;
}

JointTrainResult train_joint(const std::vector<PairedSample>& data, text::TextModel initial_text,
                             const JointTrainOptions& options) {
  if (data.empty()) throw ValidationError("train_joint: empty dataset");
  if (options.batch < 2) throw ValidationError("train_joint: batch size must be at least 2");
  if (options.batch > data.size()) {
    throw ValidationError("train_joint: batch of " + std::to_string(options.batch) +
                          " exceeds the " + std::to_string(data.size()) + " samples");
  }

  GestureModel gesture =
      init_gesture_model(options.gesture, nd::derive_seed(options.seed, "gesture-init"));
  nd::ParamSet params = initial_text.params;
  for (const auto& [name, t] : gesture.params) params.emplace(name, t);
  nd::AdamState adam = nd::make_adam(params, {.lr = options.lr});
  if (!(options.override_rate >= 0.0 && options.override_rate <= 1.0)) {
    throw ValidationError("train_joint: override_rate must be in [0, 1]");
  }
  nd::Rng rng(nd::derive_seed(options.seed, "joint-train"));
  nd::Rng augment_rng(nd::derive_seed(options.seed, "joint-override"));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  JointTrainResult result;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    JointTrainOptions step = options;
    if (epoch < options.margin_warmup) {
      step.margin = options.margin * static_cast<double>(epoch + 1) /
                    static_cast<double>(options.margin_warmup);
    }
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    BatchLossReport sums;
    std::size_t batches = 0;
    for (std::size_t start = 0; start + 1 < order.size(); start += options.batch) {
      const std::size_t stop = std::min(order.size(), start + options.batch);
      std::vector<const PairedSample*> batch;
      std::vector<bool> overridden;
      for (std::size_t k = start; k < stop; ++k) {
        batch.push_back(&data[order[k]]);
        if (options.override_rate > 0.0) overridden.push_back(augment_rng.uniform() < options.override_rate);
      }
      Tape tape;
      Bound p(tape, params, true);
      const BatchGraph g = joint_batch_graph(p, initial_text.config, step, batch, overridden);
      sums.attention += g.attention.value().item();
      sums.reconstruction += g.reconstruction.value().item();
      sums.contrastive += g.contrastive.total.value().item();
      sums.total += g.total.value().item();
      ++batches;
      nd::adam_step(adam, params, p.gradients(tape.backward(g.total)));
    }
    const double n = static_cast<double>(batches);
    result.trace.push_back(
        {sums.attention / n, sums.reconstruction / n, sums.contrastive / n, sums.total / n});
  }

  result.text.config = initial_text.config;
  result.gesture.config = options.gesture;
  for (auto& [name, t] : params) {
    if (name.starts_with("g.")) {
      result.gesture.params.emplace(name, std::move(t));
    } else {
      result.text.params.emplace(name, std::move(t));
    }
  }
  return result;
}

std::vector<double> text_feature(const text::TextModel& model, const text::AttentionSample& s) {
  Tape tape;
  Bound p(tape, model.params, false);
  Var w = tape.constant(s.words);
  Var a = text::normalize_attention(text::raw_attention_graph(p, model.config, w, s.mask));
  const Tensor f = text::text_feature_graph(p, model.config, w, a).value();
  return {f.values().begin(), f.values().end()};
}

PairDistanceSummary pair_distances(const text::TextModel& text_model, const GestureModel& gesture,
                                   const std::vector<PairedSample>& data) {
  std::vector<double> ft, fg;
  for (const PairedSample& s : data) {
    const auto t = text_feature(text_model, s.text);
    const auto g = encode_gesture(gesture, s.keyposes);
    ft.insert(ft.end(), t.begin(), t.end());
    fg.insert(fg.end(), g.begin(), g.end());
  }
  const std::size_t b = data.size(), d = gesture.config.feature_dim;
  const auto dist = distance_matrix(Tensor::matrix(b, d, ft), Tensor::matrix(b, d, fg));
  PairDistanceSummary out;
  double pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      if (data[i].cluster == data[j].cluster) {
        pos += dist[i * b + j];
        ++out.positives;
      } else {
        neg += dist[i * b + j];
        ++out.negatives;
      }
    }
  }
  out.mean_positive = out.positives ? pos / static_cast<double>(out.positives) : 0.0;
  out.mean_negative = out.negatives ? neg / static_cast<double>(out.negatives) : 0.0;
  return out;
}

}  // namespace semgest::contrastive
