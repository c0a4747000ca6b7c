#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "semgest/nd/params.hpp"
#include "semgest/text/embedding.hpp"
#include "semgest/text/tokenizer.hpp"

namespace semgest::text {

struct TextEncoderConfig {
  std::size_t feature_dim = 32;
  std::size_t hidden = 64;        // width of the hidden layer of "t3"
  double padding_floor = 1e-4;    // raw attention assigned to padding slots

  friend bool operator==(const TextEncoderConfig&, const TextEncoderConfig&) = default;
};

// Parameters: "t1" (768 -> 1 attention score, shared over tokens), "t2"
// (768 -> 768 word transform, no bias, starts at the identity) and "t3"
// (32*768 -> hidden -> feature_dim, tanh in between).
struct TextModel {
  TextEncoderConfig config;
  nd::ParamSet params;
};

TextModel init_text_model(const TextEncoderConfig& config, std::uint64_t seed);

// Mask as a T x 1 column of 0/1.
nd::Tensor mask_column(const std::vector<bool>& mask);

// Raw attention (T x 1): sigmoid of the "t1" score on real tokens, the
// padding floor elsewhere.
nd::Var raw_attention_graph(const nd::Bound& p, const TextEncoderConfig& config, nd::Var w,
                            const std::vector<bool>& mask);
// x_i / sum_j x_j over all T slots.
nd::Var normalize_attention(nd::Var raw);
// Attention-scaled transformed words A_i * E_t2(w_i), flattened to 1 x (T*768).
nd::Var weighted_words_graph(const nd::Bound& p, nd::Var w, nd::Var attention);
// The "t3" MLP applied to every row of a B x (T*768) matrix; B x feature_dim.
nd::Var feature_head_graph(const nd::Bound& p, nd::Var flat);
// f_t (1 x feature_dim) from words w (T x 768) and normalized attention A (T x 1).
nd::Var text_feature_graph(const nd::Bound& p, const TextEncoderConfig& config, nd::Var w,
                           nd::Var attention);
// Mean binary cross entropy over real tokens, raw clipped to [1e-7, 1 - 1e-7].
// Labels on padding slots are rejected.
nd::Var attention_bce(nd::Var raw, const std::vector<double>& labels,
                      const std::vector<bool>& mask);

// Host-side versions for tests and diagnostics.
std::vector<double> normalize(const std::vector<double>& raw);
double bce(const std::vector<double>& raw, const std::vector<double>& labels,
           const std::vector<bool>& mask);

// Replacement raw attention: `weight` for listed token indices, `others` for
// the remaining real tokens, the padding floor for padding.
using AttentionOverride = std::vector<std::pair<std::size_t, double>>;
std::vector<double> override_raw(const TextModel& model, std::size_t token_count,
                                 const AttentionOverride& weights, double others = 0.1);

struct AttendedText {
  TokenizedText tokens;
  std::vector<double> raw_attention;  // T values
  std::vector<double> attention;      // normalized, sums to 1
  std::vector<double> feature;        // f_t
};

// Tokenized text through attention and the feature head. With `raw_override`
// the model's own attention scores are replaced before normalization.
AttendedText attend(const TextModel& model, const EmbeddingProvider& provider,
                    const TokenizedText& tokens,
                    const std::optional<std::vector<double>>& raw_override = std::nullopt);

struct AttentionSample {
  nd::Tensor words;             // T x 768
  std::vector<double> labels;   // T values, 0 on padding
  std::vector<bool> mask;
};

struct PretrainOptions {
  std::size_t epochs = 50;
  std::size_t batch = 16;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct PretrainResult {
  TextModel model;
  std::vector<double> trace;  // mean BCE per epoch
};

// Fits "t1" on the attention labels alone; the other parameters keep their
// values from `initial`.
PretrainResult pretrain_attention(const std::vector<AttentionSample>& data, TextModel initial,
                                  const PretrainOptions& options);

nlohmann::json text_model_to_json(const TextModel& model);
TextModel text_model_from_json(const nlohmann::json& doc);

}  // namespace semgest::text
