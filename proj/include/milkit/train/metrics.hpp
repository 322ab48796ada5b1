#pragma once

#include <string>
#include <vector>

namespace milkit {
class MILModel;
struct Bag;
}  // namespace milkit

namespace milkit::train {

struct Metrics {
  double acc = 0.0;
  double auroc = 0.0;
  double f1 = 0.0;
  double loss = 0.0;
};

/// Fraction of correct predictions at probability threshold 0.5.
double accuracy(const std::vector<double>& scores, const std::vector<int>& labels);

/// F1 at threshold 0.5; zero denominators yield 0.
double f1_score(const std::vector<double>& scores, const std::vector<int>& labels);

/// Rank-based AUROC with ties counted 1/2; equals the pairwise statistic
/// P(score+ > score-) + 0.5 P(tie). Throws "AUROC requires both classes"
/// on single-class labels.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Evaluates a model over bags: ACC/F1/AUROC on sigmoid probabilities plus
/// mean BCE loss. Pure (no gradients).
Metrics evaluate(MILModel& model, const std::vector<Bag>& bags,
                 std::int64_t batch_size = 1);

/// Table-1-style "m_{s}" cell with 3 decimals, e.g. 0.920_{0.020}.
std::string format_mean_std(double mean, double std);

/// Mean and population standard deviation (divide by k).
std::pair<double, double> mean_and_std(const std::vector<double>& values);

}  // namespace milkit::train
