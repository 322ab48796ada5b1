#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "milkit/bag.hpp"
#include "milkit/nn/parameter.hpp"
#include "milkit/nn/sm.hpp"

namespace milkit {

/// Where the Sm smoothing operator attaches inside a model.
enum class SmAttachment { attention_logits, features };

struct SmSettings {
  double alpha = 0.5;
  std::int64_t steps = 10;
  SmAttachment attachment = SmAttachment::attention_logits;
};

/// Model hyperparameters. Optional fields must only be set when the chosen
/// model uses them; build_model rejects irrelevant fields. Defaults (applied
/// by resolve_config): embed_dim 64, attention_width 32, 2 encoder layers,
/// 4 heads, 2 graph layers, sm alpha 0.5 / 10 steps on attention logits.
struct ModelConfig {
  std::string model_name = "ABMIL";
  std::int64_t in_dim = 0;
  std::optional<std::int64_t> embed_dim;
  std::optional<std::int64_t> attention_width;
  std::optional<std::int64_t> n_encoder_layers;
  std::optional<std::int64_t> n_heads;
  std::optional<std::int64_t> n_graph_layers;
  std::optional<SmSettings> sm;
  std::optional<bool> gated;
};

struct ForwardOutput {
  std::vector<double> logits;  // length B
  MatD attention;              // B x Nmax; 0 at padding, rows sum to 1
};

struct Prediction {
  std::vector<double> probabilities;  // sigmoid(logits)
  MatD instance_scores;               // B x Nmax; 0 at padding
};

struct LossOutput {
  double loss = 0.0;
  std::map<std::string, double> aux;
};

/// Unified MIL model contract: a batch maps to one logit per bag plus
/// normalized instance attention; the loss is mean binary cross-entropy
/// with logits. compute_loss(grad=true) accumulates parameter gradients.
/// Forward paths allocate their state per call, so read-only inference is
/// safe from concurrent threads; training is single-writer.
class MILModel {
 public:
  virtual ~MILModel() = default;

  const ModelConfig& config() const { return config_; }
  const std::string& name() const { return config_.model_name; }
  std::int64_t in_dim() const { return config_.in_dim; }

  std::vector<double> forward(const Batch& batch);
  ForwardOutput forward_with_attention(const Batch& batch);
  LossOutput compute_loss(const Batch& batch, bool with_grad = true);
  Prediction predict(const Batch& batch);

  std::vector<nn::Parameter*> parameters();
  void zero_grad();

 protected:
  explicit MILModel(ModelConfig config) : config_(std::move(config)) {}

  struct GradContext {
    virtual ~GradContext() = default;
  };
  struct RunOutput {
    std::vector<double> logits;
    MatD attention;
    MatD instance_scores;
  };

  /// Forward over the batch; fills *ctx when non-null so backprop can run.
  virtual RunOutput run(const Batch& batch, std::unique_ptr<GradContext>* ctx) = 0;
  virtual void backprop(const Batch& batch, GradContext& ctx,
                        const std::vector<double>& dlogits) = 0;
  virtual void collect(std::vector<nn::Parameter*>& out) = 0;

  void check_batch(const Batch& batch) const;
  /// Real rows of bag b upcast to double (N_b x D).
  static MatD bag_features(const Batch& batch, std::int64_t b);

  ModelConfig config_;
};

using MILModelPtr = std::unique_ptr<MILModel>;

const std::vector<std::string>& supported_models();

/// Fills defaults for the fields the named model uses and rejects fields it
/// does not (ConfigError).
ModelConfig resolve_config(const ModelConfig& config);

/// Deterministic in (config, seed).
MILModelPtr build_model(const ModelConfig& config, std::uint64_t seed);

}  // namespace milkit
