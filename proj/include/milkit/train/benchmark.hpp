#pragma once

#include "milkit/models/model.hpp"
#include "milkit/train/metrics.hpp"
#include "milkit/train/splits.hpp"
#include "milkit/train/trainer.hpp"

namespace milkit::train {

struct BenchmarkRow {
  std::string model;
  std::vector<Metrics> per_rep;  // test metrics, one per repetition
  double acc_mean = 0, acc_std = 0;
  double auroc_mean = 0, auroc_std = 0;
  double f1_mean = 0, f1_std = 0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
};

/// Trains every model on each repetition's train/val split and evaluates on
/// the fixed test set; aggregates mean and population std per metric.
/// Repetition r of every model uses seed derived from (config.seed, r).
/// With `parallel`, repetitions of one model run on separate threads (each
/// owns its model instance); results are identical to the sequential mode.
BenchmarkResult run_benchmark(const std::vector<ModelConfig>& models,
                              const std::vector<Bag>& bags,
                              const SplitSet& splits, const RunConfig& config,
                              bool parallel = false);

}  // namespace milkit::train
