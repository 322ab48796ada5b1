#include "milkit/train/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "milkit/bag.hpp"
#include "milkit/errors.hpp"
#include "milkit/models/model.hpp"

namespace milkit::train {

double accuracy(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.empty() || scores.size() != labels.size())
    throw Error("accuracy: scores/labels size mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int pred = scores[i] > 0.5 ? 1 : 0;
    if (pred == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double f1_score(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.empty() || scores.size() != labels.size())
    throw Error("f1: scores/labels size mismatch");
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int pred = scores[i] > 0.5 ? 1 : 0;
    if (pred == 1 && labels[i] == 1) ++tp;
    if (pred == 1 && labels[i] == 0) ++fp;
    if (pred == 0 && labels[i] == 1) ++fn;
  }
  const double denom_p = static_cast<double>(tp + fp);
  const double denom_r = static_cast<double>(tp + fn);
  const double precision = denom_p > 0.0 ? static_cast<double>(tp) / denom_p : 0.0;
  const double recall = denom_r > 0.0 ? static_cast<double>(tp) / denom_r : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.empty() || scores.size() != labels.size())
    throw Error("auroc: scores/labels size mismatch");
  std::int64_t n_pos = 0, n_neg = 0;
  for (int y : labels) (y == 1 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) throw Error("AUROC requires both classes");

  // average ranks over ties, then the Mann-Whitney identity
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(scores.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double rank_sum_pos = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (labels[k] == 1) rank_sum_pos += rank[k];
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

Metrics evaluate(MILModel& model, const std::vector<Bag>& bags,
                 std::int64_t batch_size) {
  if (bags.empty()) throw Error("evaluate: empty data");
  std::vector<double> probs;
  std::vector<int> labels;
  probs.reserve(bags.size());
  labels.reserve(bags.size());
  double loss = 0.0;
  std::int64_t n_batches = 0;
  for (std::size_t start = 0; start < bags.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(bags.size(), start + static_cast<std::size_t>(batch_size));
    const std::vector<Bag> chunk(bags.begin() + static_cast<std::ptrdiff_t>(start),
                                 bags.begin() + static_cast<std::ptrdiff_t>(end));
    const Batch batch = collate(chunk);
    Prediction pred = model.predict(batch);
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      probs.push_back(pred.probabilities[b]);
      labels.push_back(chunk[b].label);
    }
    loss += model.compute_loss(batch, /*with_grad=*/false).loss;
    ++n_batches;
  }
  Metrics m;
  m.acc = accuracy(probs, labels);
  m.f1 = f1_score(probs, labels);
  m.auroc = auroc(probs, labels);
  m.loss = loss / static_cast<double>(n_batches);
  return m;
}

std::string format_mean_std(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f_{%.3f}", mean, std);
  return buf;
}

std::pair<double, double> mean_and_std(const std::vector<double>& values) {
  if (values.empty()) throw Error("mean_and_std: empty input");
  const double k = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= k;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= k;  // population convention
  return {mean, std::sqrt(var)};
}

}  // namespace milkit::train
