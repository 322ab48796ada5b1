#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace milkit::train {

/// k train/validation repetitions over a shared pool plus one fixed test set.
struct SplitSet {
  struct Repetition {
    std::vector<std::string> train;
    std::vector<std::string> val;
  };
  std::vector<Repetition> repetitions;
  std::vector<std::string> test;
};

/// Stratified splits: the test set is drawn once (test_fraction of each
/// class), then each repetition reshuffles the remaining pool into train/val
/// with val_fraction per class. Deterministic in seed.
SplitSet make_splits(const std::vector<std::string>& bag_ids,
                     const std::vector<int>& labels, std::int64_t k,
                     double val_fraction, double test_fraction,
                     std::uint64_t seed);

}  // namespace milkit::train
