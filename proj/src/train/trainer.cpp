#include "milkit/train/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "milkit/errors.hpp"
#include "milkit/rng.hpp"
#include "milkit/train/adam.hpp"

namespace milkit::train {

CheckpointPolicy parse_checkpoint_policy(const std::string& s) {
  if (s == "best_val_auroc") return CheckpointPolicy::best_val_auroc;
  if (s == "last") return CheckpointPolicy::last;
  throw ConfigError("checkpoint_policy must be 'best_val_auroc' or 'last'");
}

const char* checkpoint_policy_name(CheckpointPolicy p) {
  return p == CheckpointPolicy::best_val_auroc ? "best_val_auroc" : "last";
}

TrainResult train(MILModel& model, const std::vector<Bag>& train_bags,
                  const std::vector<Bag>& val_bags, const RunConfig& config) {
  if (train_bags.empty() || val_bags.empty()) throw Error("empty data");
  if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (config.optimizer != "adam")
    throw ConfigError("optimizer must be 'adam'");

  Adam opt(model.parameters(), config.learning_rate);
  TrainResult result;
  double best_auroc = -1.0;
  std::vector<MatD> best_params;

  std::vector<std::size_t> order(train_bags.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::int64_t epoch = 1; epoch <= config.epochs; ++epoch) {
    // per-epoch shuffle seeded by seed + epoch index
    Rng rng(config.seed + static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    std::int64_t n_batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<Bag> chunk;
      chunk.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) chunk.push_back(train_bags[order[i]]);
      const Batch batch = collate(chunk);
      model.zero_grad();
      const LossOutput out = model.compute_loss(batch);
      if (!std::isfinite(out.loss))
        throw DivergenceError("divergence detected at epoch " +
                              std::to_string(epoch) + " step " +
                              std::to_string(n_batches + 1));
      opt.step();
      epoch_loss += out.loss;
      ++n_batches;
      ++result.steps;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(n_batches);
    rec.val = evaluate(model, val_bags, config.batch_size);
    result.history.push_back(rec);

    if (rec.val.auroc > best_auroc) {
      best_auroc = rec.val.auroc;
      result.best_epoch = epoch;
      if (config.checkpoint_policy == CheckpointPolicy::best_val_auroc) {
        best_params.clear();
        for (nn::Parameter* p : model.parameters()) best_params.push_back(p->value);
      }
    }
  }

  if (config.checkpoint_policy == CheckpointPolicy::best_val_auroc &&
      !best_params.empty()) {
    const std::vector<nn::Parameter*> params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i)
      params[i]->value = best_params[i];
  } else {
    result.best_epoch = config.epochs;
  }
  result.final_val = evaluate(model, val_bags, config.batch_size);
  return result;
}

}  // namespace milkit::train
