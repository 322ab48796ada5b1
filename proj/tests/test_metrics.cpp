#include <cmath>

#include "doctest.h"
#include "milkit/errors.hpp"
#include "milkit/rng.hpp"
#include "milkit/train/metrics.hpp"
#include "milkit/train/splits.hpp"

using namespace milkit;
using namespace milkit::train;

namespace {

/// Brute-force pairwise AUROC oracle: P(score+ > score-) + 0.5 P(tie).
double auroc_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("perfect separation scores 1.0 everywhere") {
  const std::vector<double> scores = {0.1, 0.9};
  const std::vector<int> labels = {0, 1};
  CHECK(accuracy(scores, labels) == 1.0);
  CHECK(auroc(scores, labels) == 1.0);
  CHECK(f1_score(scores, labels) == 1.0);
}

TEST_CASE("worked AUROC example with one discordant pair") {
  const std::vector<double> scores = {0.2, 0.8, 0.4, 0.6};
  const std::vector<int> labels = {0, 1, 1, 0};
  CHECK(auroc(scores, labels) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(auroc_oracle(scores, labels) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("F1 from a hand confusion matrix: TP=1 FP=1 FN=0") {
  // precision 1/2, recall 1 -> F1 = 2/3 (true negatives don't matter)
  const std::vector<double> scores = {0.9, 0.8, 0.1, 0.2, 0.3};
  const std::vector<int> labels = {1, 0, 0, 0, 0};
  CHECK(f1_score(scores, labels) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("F1 crafted edge cases") {
  // no positive predictions, no positive labels -> 0 by convention
  CHECK(f1_score({0.1, 0.2}, {0, 0}) == 0.0);
  // all positive, all correct
  CHECK(f1_score({0.9, 0.8}, {1, 1}) == 1.0);
  // TP=2 FP=1 FN=1: precision 2/3, recall 2/3 -> 2/3
  CHECK(f1_score({0.9, 0.8, 0.7, 0.2}, {1, 1, 0, 1}) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("AUROC equals the pairwise oracle on random vectors with ties") {
  Rng rng(60);
  for (int trial = 0; trial < 300; ++trial) {
    const std::int64_t n = rng.uniform_int(2, 40);
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    bool has_pos = false, has_neg = false;
    for (std::int64_t i = 0; i < n; ++i) {
      // quantized scores so ties occur often
      scores[static_cast<std::size_t>(i)] =
          static_cast<double>(rng.uniform_int(0, 10)) / 10.0;
      labels[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
      (labels[static_cast<std::size_t>(i)] ? has_pos : has_neg) = true;
    }
    if (!has_pos) labels[0] = 1;
    if (!has_neg) labels[static_cast<std::size_t>(n - 1)] = 0;
    if (labels[0] == labels[static_cast<std::size_t>(n - 1)] && n == 2) continue;
    const double fast = auroc(scores, labels);
    const double slow = auroc_oracle(scores, labels);
    CHECK(std::abs(fast - slow) < 1e-9);
  }
}

TEST_CASE("AUROC(1 - scores) = 1 - AUROC(scores) without ties") {
  Rng rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    const std::int64_t n = rng.uniform_int(4, 30);
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      scores[static_cast<std::size_t>(i)] = rng.uniform();  // ties have measure zero
      labels[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    std::vector<double> flipped(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) flipped[i] = 1.0 - scores[i];
    CHECK(std::abs(auroc(flipped, labels) - (1.0 - auroc(scores, labels))) < 1e-12);
  }
}

TEST_CASE("ACC and F1 are invariant under threshold-preserving monotone maps") {
  Rng rng(62);
  std::vector<double> scores(20);
  std::vector<int> labels(20);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.uniform();
    labels[i] = rng.bernoulli(0.5) ? 1 : 0;
  }
  labels[0] = 1;
  labels[1] = 0;
  // monotone map fixing 0.5: s -> sigmoid-like squash around the threshold
  std::vector<double> mapped(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    mapped[i] = 0.5 + 0.5 * std::tanh(3.0 * (scores[i] - 0.5));
  }
  CHECK(accuracy(mapped, labels) == accuracy(scores, labels));
  CHECK(f1_score(mapped, labels) == f1_score(scores, labels));
}

TEST_CASE("single-class labels make AUROC fail loudly") {
  CHECK_THROWS_WITH_AS(auroc({0.1, 0.9}, {1, 1}), "AUROC requires both classes", Error);
}

TEST_CASE("mean/std formatting follows the m_{s} convention") {
  const auto [mean, sd] = mean_and_std({0.90, 0.94});
  CHECK(mean == doctest::Approx(0.92).epsilon(1e-12));
  CHECK(sd == doctest::Approx(0.02).epsilon(1e-12));  // population std
  CHECK(format_mean_std(mean, sd) == "0.920_{0.020}");
}

TEST_CASE("make_splits produces disjoint stratified splits") {
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    ids.push_back("b" + std::to_string(i));
    labels.push_back(i % 2);
  }
  const SplitSet splits = make_splits(ids, labels, 3, 0.25, 0.2, 9);
  CHECK(splits.test.size() == 8);
  CHECK(splits.repetitions.size() == 3);
  for (const auto& rep : splits.repetitions) {
    CHECK(rep.train.size() + rep.val.size() + splits.test.size() == ids.size());
    for (const auto& id : rep.val) {
      CHECK(std::find(rep.train.begin(), rep.train.end(), id) == rep.train.end());
      CHECK(std::find(splits.test.begin(), splits.test.end(), id) == splits.test.end());
    }
    for (const auto& id : rep.train) {
      CHECK(std::find(splits.test.begin(), splits.test.end(), id) == splits.test.end());
    }
    // both classes present in every part (stratified)
    auto label_of = [&](const std::string& id) {
      return std::stoi(id.substr(1)) % 2;
    };
    for (const auto* part : {&rep.train, &rep.val}) {
      bool pos = false, neg = false;
      for (const auto& id : *part) (label_of(id) ? pos : neg) = true;
      CHECK(pos);
      CHECK(neg);
    }
  }
  // deterministic
  const SplitSet again = make_splits(ids, labels, 3, 0.25, 0.2, 9);
  CHECK(again.test == splits.test);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(again.repetitions[r].train == splits.repetitions[r].train);
    CHECK(again.repetitions[r].val == splits.repetitions[r].val);
  }
}
