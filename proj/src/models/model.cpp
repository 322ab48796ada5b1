#include "milkit/models/model.hpp"

#include <algorithm>
#include <cmath>

#include "milkit/errors.hpp"
#include "milkit/models/detail.hpp"
#include "milkit/nn/ops.hpp"

namespace milkit {

std::vector<double> MILModel::forward(const Batch& batch) {
  return run(batch, nullptr).logits;
}

ForwardOutput MILModel::forward_with_attention(const Batch& batch) {
  RunOutput out = run(batch, nullptr);
  return {std::move(out.logits), std::move(out.attention)};
}

LossOutput MILModel::compute_loss(const Batch& batch, bool with_grad) {
  std::unique_ptr<GradContext> ctx;
  RunOutput out = run(batch, with_grad ? &ctx : nullptr);
  const std::int64_t b_count = batch.batch_size();
  double loss = 0.0;
  for (std::int64_t b = 0; b < b_count; ++b) {
    loss += nn::bce_with_logits(out.logits[static_cast<std::size_t>(b)],
                                static_cast<double>(batch.labels[static_cast<std::size_t>(b)]));
  }
  loss /= static_cast<double>(b_count);
  if (with_grad) {
    std::vector<double> dlogits(static_cast<std::size_t>(b_count));
    for (std::int64_t b = 0; b < b_count; ++b) {
      dlogits[static_cast<std::size_t>(b)] =
          (nn::sigmoid(out.logits[static_cast<std::size_t>(b)]) -
           static_cast<double>(batch.labels[static_cast<std::size_t>(b)])) /
          static_cast<double>(b_count);
    }
    backprop(batch, *ctx, dlogits);
  }
  LossOutput result;
  result.loss = loss;
  result.aux["BCE"] = loss;
  return result;
}

Prediction MILModel::predict(const Batch& batch) {
  RunOutput out = run(batch, nullptr);
  Prediction p;
  p.probabilities.resize(out.logits.size());
  for (std::size_t i = 0; i < out.logits.size(); ++i)
    p.probabilities[i] = nn::sigmoid(out.logits[i]);
  p.instance_scores = std::move(out.instance_scores);
  return p;
}

std::vector<nn::Parameter*> MILModel::parameters() {
  std::vector<nn::Parameter*> out;
  collect(out);
  return out;
}

void MILModel::zero_grad() {
  for (nn::Parameter* p : parameters()) p->zero_grad();
}

void MILModel::check_batch(const Batch& batch) const {
  if (batch.feature_dim() != config_.in_dim)
    throw Error("feature dimension mismatch: batch has D=" +
                std::to_string(batch.feature_dim()) + ", model expects in_dim=" +
                std::to_string(config_.in_dim));
}

MatD MILModel::bag_features(const Batch& batch, std::int64_t b) {
  const std::int64_t n = batch.sizes[static_cast<std::size_t>(b)];
  const std::int64_t d = batch.feature_dim();
  MatD x({n, d});
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < d; ++j)
      x(i, j) = static_cast<double>(batch.features(b, i, j));
  }
  return x;
}

const std::vector<std::string>& supported_models() {
  static const std::vector<std::string> kNames = {
      "MeanPoolMIL",  "MaxPoolMIL",        "ABMIL",      "TransformerABMIL",
      "SmABMIL",      "SmTransformerABMIL", "GraphABMIL",
  };
  return kNames;
}

namespace {

struct FieldUse {
  bool attention = false;
  bool encoder = false;
  bool graph = false;
  bool sm = false;
};

FieldUse field_use(const std::string& name) {
  FieldUse u;
  if (name == "MeanPoolMIL" || name == "MaxPoolMIL") return u;
  u.attention = true;
  if (name == "TransformerABMIL" || name == "SmTransformerABMIL") u.encoder = true;
  if (name == "SmABMIL" || name == "SmTransformerABMIL") u.sm = true;
  if (name == "GraphABMIL") u.graph = true;
  return u;
}

void reject(const std::string& field, const std::string& model) {
  throw ConfigError("field '" + field + "' not applicable to model '" + model + "'");
}

}  // namespace

ModelConfig resolve_config(const ModelConfig& config) {
  const auto& names = supported_models();
  if (std::find(names.begin(), names.end(), config.model_name) == names.end()) {
    std::string msg = "unknown model_name '" + config.model_name + "'; supported:";
    for (const auto& n : names) msg += " " + n;
    throw ConfigError(msg);
  }
  if (config.in_dim < 1) throw ConfigError("in_dim must be positive");

  const FieldUse use = field_use(config.model_name);
  ModelConfig r = config;
  if (!r.embed_dim) r.embed_dim = 64;
  if (*r.embed_dim < 1) throw ConfigError("embed_dim must be positive");

  if (use.attention) {
    if (!r.attention_width) r.attention_width = 32;
    if (!r.gated) r.gated = false;
    if (*r.attention_width < 1) throw ConfigError("attention_width must be positive");
  } else {
    if (r.attention_width) reject("attention_width", r.model_name);
    if (r.gated) reject("gated", r.model_name);
  }

  if (use.encoder) {
    if (!r.n_encoder_layers) r.n_encoder_layers = 2;
    if (!r.n_heads) r.n_heads = 4;
    if (*r.n_encoder_layers < 1) throw ConfigError("n_encoder_layers must be positive");
    if (*r.n_heads < 1) throw ConfigError("n_heads must be positive");
    if (*r.embed_dim % *r.n_heads != 0)
      throw ConfigError("embed_dim must be divisible by n_heads");
  } else {
    if (r.n_encoder_layers) reject("n_encoder_layers", r.model_name);
    if (r.n_heads) reject("n_heads", r.model_name);
  }

  if (use.graph) {
    if (!r.n_graph_layers) r.n_graph_layers = 2;
    if (*r.n_graph_layers < 1) throw ConfigError("n_graph_layers must be positive");
  } else {
    if (r.n_graph_layers) reject("n_graph_layers", r.model_name);
  }

  if (use.sm) {
    if (!r.sm) r.sm = SmSettings{};
    if (!(r.sm->alpha >= 0.0 && r.sm->alpha <= 1.0))
      throw ConfigError("sm.alpha must lie in [0,1]");
    if (r.sm->steps < 1) throw ConfigError("sm.steps must be positive");
  } else {
    if (r.sm) reject("sm", r.model_name);
  }
  return r;
}

MILModelPtr build_model(const ModelConfig& config, std::uint64_t seed) {
  const ModelConfig r = resolve_config(config);
  Rng rng(derive_seed(seed, 0x6d696c6b6974ULL));
  if (r.model_name == "MeanPoolMIL")
    return std::make_unique<models::PoolMIL>(r, false, rng);
  if (r.model_name == "MaxPoolMIL")
    return std::make_unique<models::PoolMIL>(r, true, rng);
  if (r.model_name == "ABMIL" || r.model_name == "SmABMIL")
    return std::make_unique<models::ABMIL>(r, rng);
  if (r.model_name == "TransformerABMIL" || r.model_name == "SmTransformerABMIL")
    return std::make_unique<models::TransformerABMIL>(r, rng);
  return std::make_unique<models::GraphABMIL>(r, rng);
}

}  // namespace milkit
