#include "semgest/text/text_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semgest/error.hpp"
#include "semgest/nd/adam.hpp"
#include "semgest/nd/layers.hpp"
#include "semgest/nd/rng.hpp"

namespace semgest::text {

using nd::Bound;
using nd::Tape;
using nd::Tensor;
using nd::Var;

namespace {

constexpr int kTextFormatVersion = 1;
constexpr double kBceClip = 1e-7;

void check_mask(const std::vector<bool>& mask) {
  if (mask.size() != kMaxTokens) throw ShapeError("attention: mask must have 32 slots");
  for (std::size_t i = 1; i < mask.size(); ++i) {
    if (mask[i] && !mask[i - 1]) throw ValidationError("attention: mask must be left-aligned");
  }
}

std::size_t real_count(const std::vector<bool>& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

void check_labels(const std::vector<double>& labels, const std::vector<bool>& mask) {
  check_mask(mask);
  if (labels.size() != kMaxTokens) throw ShapeError("attention_bce: labels must have 32 slots");
  if (real_count(mask) == 0) throw ValidationError("attention_bce: no real tokens");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw ValidationError("attention_bce: labels must be 0 or 1");
    }
    if (!mask[i] && labels[i] != 0.0) {
      throw ValidationError("attention_bce: label on padding slot " + std::to_string(i));
    }
  }
}

std::vector<double> column_values(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TextModel init_text_model(const TextEncoderConfig& config, std::uint64_t seed) {
  if (config.feature_dim == 0 || config.hidden == 0 || !(config.padding_floor > 0.0) ||
      config.padding_floor >= 1.0) {
    throw ValidationError("init_text_model: invalid configuration");
  }
  nd::Rng rng(seed);
  TextModel model{config, {}};
  nd::init_linear(model.params, "t1", kEmbeddingDim, 1, rng);
  model.params.insert_or_assign("t2.w", Tensor::identity(kEmbeddingDim));
  nd::init_linear(model.params, "t3.hidden", kMaxTokens * kEmbeddingDim, config.hidden, rng);
  nd::init_linear(model.params, "t3.out", config.hidden, config.feature_dim, rng);
  return model;
}

Tensor mask_column(const std::vector<bool>& mask) {
  check_mask(mask);
  std::vector<double> v(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) v[i] = mask[i] ? 1.0 : 0.0;
  return Tensor::matrix(mask.size(), 1, std::move(v));
}

Var raw_attention_graph(const Bound& p, const TextEncoderConfig& config, Var w,
                        const std::vector<bool>& mask) {
  if (w.shape() != nd::Shape{kMaxTokens, kEmbeddingDim}) {
    throw ShapeError("attention: expected 32 x 768 words, got " + nd::shape_string(w.shape()));
  }
  Tape& tape = p.tape();
  const Tensor m = mask_column(mask);
  std::vector<double> floor(kMaxTokens);
  for (std::size_t i = 0; i < kMaxTokens; ++i) floor[i] = mask[i] ? 0.0 : config.padding_floor;
  Var score = nd::sigmoid(nd::linear(p, "t1", w));
  return score * tape.constant(m) + tape.constant(Tensor::matrix(kMaxTokens, 1, std::move(floor)));
}

Var normalize_attention(Var raw) { return raw / nd::sum(raw); }

Var weighted_words_graph(const Bound& p, Var w, Var attention) {
  if (w.shape() != nd::Shape{kMaxTokens, kEmbeddingDim}) {
    throw ShapeError("text feature: expected 32 x 768 words, got " + nd::shape_string(w.shape()));
  }
  if (attention.shape() != nd::Shape{kMaxTokens, 1}) {
    throw ShapeError("text feature: attention must be 32 x 1, got " +
                     nd::shape_string(attention.shape()));
  }
  // Trailing all-zero word rows map to zero rows, so only the leading rows
  // go through the 768 x 768 transform.
  const Tensor& wv = w.value();
  std::size_t used = kMaxTokens;
  while (used > 0) {
    const auto row = wv.values().subspan((used - 1) * kEmbeddingDim, kEmbeddingDim);
    if (std::any_of(row.begin(), row.end(), [](double x) { return x != 0.0; })) break;
    --used;
  }
  Var transformed;
  if (used == kMaxTokens) {
    transformed = nd::matmul(w, p["t2.w"]);
  } else {
    Tape& tape = p.tape();
    Var zeros = tape.constant(Tensor::zeros({kMaxTokens - used, kEmbeddingDim}));
    if (used == 0) {
      transformed = zeros;
    } else {
      const Var parts[] = {nd::matmul(nd::slice(w, 0, used, 0), p["t2.w"]), zeros};
      transformed = nd::concat(parts, 0);
    }
  }
  return nd::reshape(transformed * attention, {1, kMaxTokens * kEmbeddingDim});
}

Var feature_head_graph(const Bound& p, Var flat) {
  Var h = nd::linear(p, "t3.hidden", flat);
  // Leaky ReLU: saturating or dead units let all texts collapse onto one
  // feature early in joint training.
  return nd::linear(p, "t3.out", nd::relu(h) + nd::scale(h - nd::relu(h), 0.1));
}

Var text_feature_graph(const Bound& p, const TextEncoderConfig& config, Var w, Var attention) {
  (void)config;
  return feature_head_graph(p, weighted_words_graph(p, w, attention));
}

Var attention_bce(Var raw, const std::vector<double>& labels, const std::vector<bool>& mask) {
  check_labels(labels, mask);
  if (raw.shape() != nd::Shape{kMaxTokens, 1}) {
    throw ShapeError("attention_bce: raw attention must be 32 x 1, got " +
                     nd::shape_string(raw.shape()));
  }
  Tape& tape = *raw.tape;
  std::vector<double> not_labels(kMaxTokens);
  for (std::size_t i = 0; i < kMaxTokens; ++i) not_labels[i] = mask[i] ? 1.0 - labels[i] : 0.0;
  Var r = nd::clamp(raw, kBceClip, 1.0 - kBceClip);
  Var y = tape.constant(Tensor::matrix(kMaxTokens, 1, labels));
  Var ny = tape.constant(Tensor::matrix(kMaxTokens, 1, std::move(not_labels)));
  Var log_likelihood = y * nd::log(r) + ny * nd::log(nd::add_const(nd::scale(r, -1.0), 1.0));
  return nd::scale(nd::sum(log_likelihood), -1.0 / static_cast<double>(real_count(mask)));
}

std::vector<double> normalize(const std::vector<double>& raw) {
  double total = 0.0;
  for (double x : raw) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ValidationError("normalize: inputs must be positive");
    total += x;
  }
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / total;
  return out;
}

double bce(const std::vector<double>& raw, const std::vector<double>& labels,
           const std::vector<bool>& mask) {
  check_labels(labels, mask);
  if (raw.size() != kMaxTokens) throw ShapeError("bce: raw attention must have 32 slots");
  double total = 0.0;
  for (std::size_t i = 0; i < kMaxTokens; ++i) {
    if (!mask[i]) continue;
    const double r = std::clamp(raw[i], kBceClip, 1.0 - kBceClip);
    total += labels[i] * std::log(r) + (1.0 - labels[i]) * std::log(1.0 - r);
  }
  return -total / static_cast<double>(real_count(mask));
}

std::vector<double> override_raw(const TextModel& model, std::size_t token_count,
                                 const AttentionOverride& weights, double others) {
  if (token_count == 0 || token_count > kMaxTokens) {
    throw ValidationError("attention override: token count must be in [1, 32]");
  }
  if (!(others > 0.0 && others < 1.0)) {
    throw ValidationError("attention override: default weight must be in (0, 1)");
  }
  std::vector<double> raw(kMaxTokens, model.config.padding_floor);
  for (std::size_t i = 0; i < token_count; ++i) raw[i] = others;
  for (const auto& [index, weight] : weights) {
    if (index >= token_count) {
      throw ValidationError("attention override: word index " + std::to_string(index) +
                            " outside the " + std::to_string(token_count) + " tokens");
    }
    if (!(weight > 0.0 && weight < 1.0)) {
      throw ValidationError("attention override: weights must be in (0, 1)");
    }
    raw[index] = weight;
  }
  return raw;
}

AttendedText attend(const TextModel& model, const EmbeddingProvider& provider,
                    const TokenizedText& tokens,
                    const std::optional<std::vector<double>>& raw_override) {
  Tape tape;
  Bound p(tape, model.params, false);
  Var w = tape.constant(embed(tokens, provider));
  Var raw;
  if (raw_override) {
    if (raw_override->size() != kMaxTokens) {
      throw ValidationError("attention override: need 32 raw values");
    }
    for (double x : *raw_override) {
      if (!(x > 0.0 && x < 1.0)) throw ValidationError("attention override: values must be in (0, 1)");
    }
    raw = tape.constant(Tensor::matrix(kMaxTokens, 1, *raw_override));
  } else {
    raw = raw_attention_graph(p, model.config, w, tokens.mask);
  }
  Var a = normalize_attention(raw);
  AttendedText out;
  out.tokens = tokens;
  out.raw_attention = column_values(raw.value());
  out.attention = column_values(a.value());
  out.feature = column_values(text_feature_graph(p, model.config, w, a).value());
  return out;
}

PretrainResult pretrain_attention(const std::vector<AttentionSample>& data, TextModel initial,
                                  const PretrainOptions& options) {
  if (data.empty()) throw ValidationError("pretrain_attention: empty dataset");
  if (options.batch == 0) throw ValidationError("pretrain_attention: batch size must be positive");
  for (const AttentionSample& s : data) check_labels(s.labels, s.mask);

  nd::ParamSet head{{"t1.w", initial.params.at("t1.w")}, {"t1.b", initial.params.at("t1.b")}};
  nd::AdamState adam = nd::make_adam(head, {.lr = options.lr});
  nd::Rng rng(nd::derive_seed(options.seed, "pretrain-attention"));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  PretrainResult result{std::move(initial), {}};

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch) {
      const std::size_t stop = std::min(order.size(), start + options.batch);
      Tape tape;
      Bound p(tape, head, true);
      std::vector<Var> losses;
      for (std::size_t b = start; b < stop; ++b) {
        const AttentionSample& s = data[order[b]];
        Var raw = raw_attention_graph(p, result.model.config, tape.constant(s.words), s.mask);
        losses.push_back(attention_bce(raw, s.labels, s.mask));
        total += losses.back().value().item();
      }
      Var loss = nd::scale(nd::sum(nd::concat(losses)), 1.0 / static_cast<double>(losses.size()));
      nd::adam_step(adam, head, p.gradients(tape.backward(loss)));
    }
    result.trace.push_back(total / static_cast<double>(data.size()));
  }
  for (auto& [name, t] : head) result.model.params.insert_or_assign(name, t);
  return result;
}

nlohmann::json text_model_to_json(const TextModel& model) {
  const TextEncoderConfig& c = model.config;
  return {{"format", "semgest-text"},
          {"version", kTextFormatVersion},
          {"config",
           {{"feature_dim", c.feature_dim},
            {"hidden", c.hidden},
            {"padding_floor", c.padding_floor}}},
          {"params", nd::params_to_json(model.params)}};
}

TextModel text_model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "semgest-text" || doc.at("version") != kTextFormatVersion) {
      throw ValidationError("text model document: unexpected format or version");
    }
    const auto& c = doc.at("config");
    TextEncoderConfig config{c.at("feature_dim").get<std::size_t>(),
                             c.at("hidden").get<std::size_t>(),
                             c.at("padding_floor").get<double>()};
    TextModel model{config, nd::params_from_json(doc.at("params"))};
    const std::pair<const char*, nd::Shape> expected[] = {
        {"t1.w", {kEmbeddingDim, 1}},
        {"t1.b", {1, 1}},
        {"t2.w", {kEmbeddingDim, kEmbeddingDim}},
        {"t3.hidden.w", {kMaxTokens * kEmbeddingDim, config.hidden}},
        {"t3.hidden.b", {1, config.hidden}},
        {"t3.out.w", {config.hidden, config.feature_dim}},
        {"t3.out.b", {1, config.feature_dim}},
    };
    for (const auto& [name, shape] : expected) {
      auto it = model.params.find(name);
      if (it == model.params.end() || it->second.shape() != shape) {
        throw ValidationError(std::string("text model document: parameter '") + name +
                              "' missing or misshapen");
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("text model document: ") + e.what());
  }
}

}  // namespace semgest::text
