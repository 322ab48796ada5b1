#include <cmath>

#include "doctest.h"
#include "milkit/errors.hpp"
#include "milkit/synthetic.hpp"
#include "milkit/train/adam.hpp"
#include "milkit/train/benchmark.hpp"
#include "milkit/train/trainer.hpp"
#include "testutil.hpp"

using namespace milkit;
using namespace milkit::train;

namespace {

ModelConfig tiny_abmil(std::int64_t d) {
  ModelConfig c;
  c.model_name = "ABMIL";
  c.in_dim = d;
  c.embed_dim = 8;
  c.attention_width = 4;
  return c;
}

std::vector<Bag> toy_bags(int count, std::int64_t d, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_bags = count;
  spec.mean_bag_size = 6;
  spec.witness_rate = 0.4;
  spec.feature_dim = d;
  spec.class_separation = 2.0;
  spec.seed = seed;
  return generate(spec);
}

RunConfig quick_run(std::int64_t epochs, std::uint64_t seed) {
  RunConfig rc;
  rc.epochs = epochs;
  rc.seed = seed;
  return rc;
}

}  // namespace

TEST_CASE("one epoch over three bags at batch size one takes three steps") {
  const std::vector<Bag> bags = toy_bags(7, 3, 1);
  const std::vector<Bag> train_bags(bags.begin(), bags.begin() + 3);
  const std::vector<Bag> val_bags(bags.begin() + 3, bags.end());
  MILModelPtr model = build_model(tiny_abmil(3), 0);
  const TrainResult result = milkit::train::train(*model, train_bags, val_bags, quick_run(1, 5));
  CHECK(result.steps == 3);
  CHECK(result.history.size() == 1);
}

TEST_CASE("identical seed and config give bit-identical final parameters") {
  const std::vector<Bag> bags = toy_bags(10, 3, 2);
  const std::vector<Bag> train_bags(bags.begin(), bags.begin() + 6);
  const std::vector<Bag> val_bags(bags.begin() + 6, bags.end());

  auto run_once = [&]() {
    MILModelPtr model = build_model(tiny_abmil(3), 11);
    milkit::train::train(*model, train_bags, val_bags, quick_run(3, 11));
    std::vector<MatD> values;
    for (nn::Parameter* p : model->parameters()) values.push_back(p->value);
    return values;
  };
  const auto a = run_once();
  const auto b = run_once();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("training loss decreases on a learnable toy problem") {
  const std::vector<Bag> bags = toy_bags(30, 4, 3);
  const std::vector<Bag> train_bags(bags.begin(), bags.begin() + 20);
  const std::vector<Bag> val_bags(bags.begin() + 20, bags.end());
  MILModelPtr model = build_model(tiny_abmil(4), 1);
  RunConfig rc = quick_run(10, 1);
  rc.learning_rate = 1e-3;
  const TrainResult result = milkit::train::train(*model, train_bags, val_bags, rc);
  CHECK(result.history.back().train_loss < result.history.front().train_loss);
}

TEST_CASE("first-step descent: a tiny step cannot increase the batch loss") {
  // smooth model (linear embedding + linear classifier -> smooth BCE)
  const std::vector<Bag> bags = toy_bags(4, 3, 4);
  ModelConfig config;
  config.model_name = "MeanPoolMIL";
  config.in_dim = 3;
  config.embed_dim = 8;
  MILModelPtr model = build_model(config, 2);
  const Batch batch = collate(bags);

  Adam opt(model->parameters(), 1e-6);
  model->zero_grad();
  const double before = model->compute_loss(batch).loss;
  opt.step();
  const double after = model->compute_loss(batch, false).loss;
  CHECK(after <= before + 1e-6);
}

TEST_CASE("NaN loss aborts with a divergence error naming epoch and step") {
  const std::vector<Bag> bags = toy_bags(6, 3, 5);
  const std::vector<Bag> train_bags(bags.begin(), bags.begin() + 3);
  const std::vector<Bag> val_bags(bags.begin() + 3, bags.end());
  MILModelPtr model = build_model(tiny_abmil(3), 3);
  // poison the classifier bias so logits (and the loss) are NaN
  model->parameters().back()->value.vec()[0] = std::nan("");
  try {
    milkit::train::train(*model, train_bags, val_bags, quick_run(2, 0));
    FAIL("expected throw");
  } catch (const DivergenceError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("divergence detected") != std::string::npos);
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("step 1") != std::string::npos);
  }
}

TEST_CASE("empty data is rejected") {
  MILModelPtr model = build_model(tiny_abmil(3), 0);
  const std::vector<Bag> bags = toy_bags(4, 3, 6);
  CHECK_THROWS_WITH_AS(milkit::train::train(*model, {}, bags, quick_run(1, 0)), "empty data", Error);
  CHECK_THROWS_WITH_AS(milkit::train::train(*model, bags, {}, quick_run(1, 0)), "empty data", Error);
}

TEST_CASE("checkpoint policy retains the best validation AUROC epoch") {
  const std::vector<Bag> bags = toy_bags(20, 4, 7);
  const std::vector<Bag> train_bags(bags.begin(), bags.begin() + 14);
  const std::vector<Bag> val_bags(bags.begin() + 14, bags.end());
  MILModelPtr model = build_model(tiny_abmil(4), 5);
  RunConfig rc = quick_run(5, 5);
  const TrainResult result = milkit::train::train(*model, train_bags, val_bags, rc);
  double best = -1.0;
  std::int64_t best_epoch = 0;
  for (const auto& rec : result.history) {
    if (rec.val.auroc > best) {
      best = rec.val.auroc;
      best_epoch = rec.epoch;
    }
  }
  CHECK(result.best_epoch == best_epoch);
  CHECK(result.final_val.auroc == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("benchmark aggregates mean and std across repetitions") {
  const std::vector<Bag> bags = toy_bags(24, 3, 8);
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const Bag& b : bags) {
    ids.push_back(b.bag_id);
    labels.push_back(b.label);
  }
  const SplitSet splits = make_splits(ids, labels, 2, 0.3, 0.25, 1);
  RunConfig rc = quick_run(1, 1);
  const BenchmarkResult result =
      run_benchmark({tiny_abmil(3)}, bags, splits, rc, false);
  REQUIRE(result.rows.size() == 1);
  const BenchmarkRow& row = result.rows[0];
  CHECK(row.per_rep.size() == 2);
  const auto [am, as] = mean_and_std({row.per_rep[0].acc, row.per_rep[1].acc});
  CHECK(row.acc_mean == doctest::Approx(am).epsilon(1e-12));
  CHECK(row.acc_std == doctest::Approx(as).epsilon(1e-12));
}

TEST_CASE("parallel benchmark repetitions match sequential results") {
  const std::vector<Bag> bags = toy_bags(18, 3, 9);
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const Bag& b : bags) {
    ids.push_back(b.bag_id);
    labels.push_back(b.label);
  }
  const SplitSet splits = make_splits(ids, labels, 2, 0.3, 0.25, 2);
  RunConfig rc = quick_run(1, 3);
  const BenchmarkResult seq = run_benchmark({tiny_abmil(3)}, bags, splits, rc, false);
  const BenchmarkResult par = run_benchmark({tiny_abmil(3)}, bags, splits, rc, true);
  for (std::size_t r = 0; r < seq.rows[0].per_rep.size(); ++r) {
    CHECK(seq.rows[0].per_rep[r].acc == par.rows[0].per_rep[r].acc);
    CHECK(seq.rows[0].per_rep[r].auroc == par.rows[0].per_rep[r].auroc);
    CHECK(seq.rows[0].per_rep[r].loss == par.rows[0].per_rep[r].loss);
  }
}

TEST_CASE("a constant-output model has zero std across repetitions") {
  // untrainable outputs: metrics identical across reps -> std exactly 0
  std::vector<double> accs = {0.5, 0.5, 0.5};
  const auto [mean, sd] = mean_and_std(accs);
  CHECK(mean == 0.5);
  CHECK(sd == 0.0);
}
