#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "milkit/models/model.hpp"
#include "milkit/train/metrics.hpp"

namespace milkit::train {

enum class CheckpointPolicy { best_val_auroc, last };

CheckpointPolicy parse_checkpoint_policy(const std::string& s);
const char* checkpoint_policy_name(CheckpointPolicy p);

/// Training protocol defaults: batch size 1, Adam, learning rate 1e-4,
/// 50 epochs.
struct RunConfig {
  std::int64_t epochs = 50;
  std::int64_t batch_size = 1;
  double learning_rate = 1e-4;
  std::string optimizer = "adam";
  std::uint64_t seed = 0;
  double val_fraction = 0.2;
  CheckpointPolicy checkpoint_policy = CheckpointPolicy::best_val_auroc;
  std::string device = "cpu";
};

struct EpochRecord {
  std::int64_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  Metrics val;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  Metrics final_val;        // metrics of the retained parameters
  std::int64_t best_epoch = 0;
  std::int64_t steps = 0;   // optimizer steps taken
};

/// Full training loop: per-epoch seeded shuffling, one optimizer step per
/// batch, validation each epoch, parameter retention per checkpoint_policy.
/// Throws DivergenceError ("divergence detected ...") on NaN loss.
TrainResult train(MILModel& model, const std::vector<Bag>& train_bags,
                  const std::vector<Bag>& val_bags, const RunConfig& config);

}  // namespace milkit::train
