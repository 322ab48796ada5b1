#include "milkit/train/benchmark.hpp"

#include <map>
#include <thread>

#include "milkit/errors.hpp"
#include "milkit/rng.hpp"

namespace milkit::train {

namespace {

std::vector<Bag> select_bags(const std::map<std::string, const Bag*>& by_id,
                             const std::vector<std::string>& ids) {
  std::vector<Bag> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw Error("split references unknown bag_id: " + id);
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace

BenchmarkResult run_benchmark(const std::vector<ModelConfig>& models,
                              const std::vector<Bag>& bags,
                              const SplitSet& splits, const RunConfig& config,
                              bool parallel) {
  if (models.empty()) throw ConfigError("benchmark needs at least one model");
  if (splits.repetitions.empty())
    throw ConfigError("benchmark needs at least one repetition");
  if (splits.test.empty()) throw Error("benchmark needs a nonempty test set");

  std::map<std::string, const Bag*> by_id;
  for (const Bag& b : bags) by_id.emplace(b.bag_id, &b);
  const std::vector<Bag> test_bags = select_bags(by_id, splits.test);

  BenchmarkResult result;
  for (const ModelConfig& mc : models) {
    BenchmarkRow row;
    row.model = mc.model_name;
    const std::size_t k = splits.repetitions.size();
    row.per_rep.resize(k);

    auto run_rep = [&](std::size_t rep) {
      const auto& split = splits.repetitions[rep];
      const std::vector<Bag> train_bags = select_bags(by_id, split.train);
      const std::vector<Bag> val_bags = select_bags(by_id, split.val);
      RunConfig rc = config;
      rc.seed = derive_seed(config.seed, static_cast<std::uint64_t>(rep));
      MILModelPtr model = build_model(mc, rc.seed);
      train(*model, train_bags, val_bags, rc);
      row.per_rep[rep] = evaluate(*model, test_bags, rc.batch_size);
    };

    if (parallel && k > 1) {
      std::vector<std::thread> threads;
      std::vector<std::exception_ptr> errors(k);
      threads.reserve(k);
      for (std::size_t rep = 0; rep < k; ++rep) {
        threads.emplace_back([&, rep] {
          try {
            run_rep(rep);
          } catch (...) {
            errors[rep] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    } else {
      for (std::size_t rep = 0; rep < k; ++rep) run_rep(rep);
    }

    std::vector<double> accs, aurocs, f1s;
    for (const Metrics& m : row.per_rep) {
      accs.push_back(m.acc);
      aurocs.push_back(m.auroc);
      f1s.push_back(m.f1);
    }
    std::tie(row.acc_mean, row.acc_std) = mean_and_std(accs);
    std::tie(row.auroc_mean, row.auroc_std) = mean_and_std(aurocs);
    std::tie(row.f1_mean, row.f1_std) = mean_and_std(f1s);
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace milkit::train
