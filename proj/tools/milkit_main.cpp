// milkit command-line tool: dataset generation, training, evaluation,
// benchmarking and artifact inspection.
//
// Exit codes: 0 success, 2 usage/config error, 3 numerical failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "milkit/array_file.hpp"
#include "milkit/dataset.hpp"
#include "milkit/errors.hpp"
#include "milkit/kernels/kernels.hpp"
#include "milkit/models/checkpoint.hpp"
#include "milkit/models/model.hpp"
#include "milkit/synthetic.hpp"
#include "milkit/train/benchmark.hpp"
#include "milkit/train/splits.hpp"
#include "milkit/train/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace milkit;

namespace {

// ---------------------------------------------------------------------------
// config handling

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ConfigError("unknown config key: '" + where + "." + it.key() + "'");
  }
}

json default_config() {
  json cfg;
  cfg["dataset"] = json::object();
  cfg["model"] = json::object();
  cfg["run"] = json::object();
  cfg["output_dir"] = "milkit_out";
  return cfg;
}

json load_config_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path.string());
  json cfg;
  try {
    is >> cfg;
  } catch (const json::exception& e) {
    throw ConfigError("bad JSON in " + path.string() + ": " + e.what());
  }
  check_keys(cfg, {"dataset", "model", "models", "run", "benchmark", "output_dir"},
             "config");
  return cfg;
}

json parse_scalar(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos == s.size()) return v;
  } catch (...) {
  }
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (...) {
  }
  return s;
}

/// Dotted overrides: --run.epochs=5 sets config["run"]["epochs"] = 5.
void apply_overrides(json& cfg, const std::vector<std::string>& extras) {
  for (const std::string& raw : extras) {
    if (raw.rfind("--", 0) != 0)
      throw ConfigError("unrecognized argument: '" + raw + "'");
    const std::string body = raw.substr(2);
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must use --key.path=value: '" + raw + "'");
    const std::string path = body.substr(0, eq);
    const std::string value = body.substr(eq + 1);
    if (path.empty()) throw ConfigError("empty override key in '" + raw + "'");
    json* node = &cfg;
    std::size_t start = 0;
    while (true) {
      const std::size_t dot = path.find('.', start);
      const std::string key = path.substr(start, dot - start);
      if (key.empty()) throw ConfigError("bad override key: '" + path + "'");
      if (dot == std::string::npos) {
        (*node)[key] = parse_scalar(value);
        break;
      }
      node = &(*node)[key];
      start = dot + 1;
    }
  }
}

SyntheticSpec spec_from_json(const json& ds) {
  check_keys(ds,
             {"kind", "n_bags", "mean_bag_size", "witness_rate", "feature_dim",
              "class_separation", "threshold_k", "seed"},
             "dataset");
  SyntheticSpec spec;
  if (ds.contains("kind"))
    spec.kind = parse_synthetic_kind(ds.at("kind").get<std::string>());
  if (ds.contains("threshold_k") && spec.kind != SyntheticKind::count_threshold)
    throw ConfigError("field 'threshold_k' only applies to count_threshold");
  if (ds.contains("n_bags")) spec.n_bags = ds.at("n_bags").get<std::int64_t>();
  if (ds.contains("mean_bag_size"))
    spec.mean_bag_size = ds.at("mean_bag_size").get<std::int64_t>();
  if (ds.contains("witness_rate"))
    spec.witness_rate = ds.at("witness_rate").get<double>();
  if (ds.contains("feature_dim"))
    spec.feature_dim = ds.at("feature_dim").get<std::int64_t>();
  if (ds.contains("class_separation"))
    spec.class_separation = ds.at("class_separation").get<double>();
  if (ds.contains("threshold_k"))
    spec.threshold_k = ds.at("threshold_k").get<std::int64_t>();
  if (ds.contains("seed")) spec.seed = ds.at("seed").get<std::uint64_t>();
  return spec;
}

json spec_to_json(const SyntheticSpec& s) {
  json j;
  j["kind"] = synthetic_kind_name(s.kind);
  j["n_bags"] = s.n_bags;
  j["mean_bag_size"] = s.mean_bag_size;
  j["witness_rate"] = s.witness_rate;
  j["feature_dim"] = s.feature_dim;
  j["class_separation"] = s.class_separation;
  if (s.kind == SyntheticKind::count_threshold) j["threshold_k"] = s.threshold_k;
  j["seed"] = s.seed;
  return j;
}

train::RunConfig run_from_json(const json& run) {
  check_keys(run,
             {"epochs", "batch_size", "learning_rate", "optimizer", "seed",
              "val_fraction", "checkpoint_policy", "device"},
             "run");
  train::RunConfig rc;
  if (run.contains("epochs")) rc.epochs = run.at("epochs").get<std::int64_t>();
  if (run.contains("batch_size"))
    rc.batch_size = run.at("batch_size").get<std::int64_t>();
  if (run.contains("learning_rate"))
    rc.learning_rate = run.at("learning_rate").get<double>();
  if (run.contains("optimizer"))
    rc.optimizer = run.at("optimizer").get<std::string>();
  if (run.contains("seed")) rc.seed = run.at("seed").get<std::uint64_t>();
  if (run.contains("val_fraction"))
    rc.val_fraction = run.at("val_fraction").get<double>();
  if (run.contains("checkpoint_policy"))
    rc.checkpoint_policy =
        train::parse_checkpoint_policy(run.at("checkpoint_policy").get<std::string>());
  if (run.contains("device")) rc.device = run.at("device").get<std::string>();
  return rc;
}

json run_to_json(const train::RunConfig& rc) {
  json j;
  j["epochs"] = rc.epochs;
  j["batch_size"] = rc.batch_size;
  j["learning_rate"] = rc.learning_rate;
  j["optimizer"] = rc.optimizer;
  j["seed"] = rc.seed;
  j["val_fraction"] = rc.val_fraction;
  j["checkpoint_policy"] = train::checkpoint_policy_name(rc.checkpoint_policy);
  j["device"] = rc.device;
  return j;
}

fs::path resolve_dataset_path(const std::string& p) {
  fs::path path(p);
  if (fs::exists(path / "manifest.csv")) return path;
  if (path.is_relative()) {
    if (const char* root = std::getenv("MILKIT_DATA_ROOT")) {
      const fs::path alt = fs::path(root) / path;
      if (fs::exists(alt / "manifest.csv")) return alt;
    }
  }
  throw ConfigError("dataset not found at '" + p + "' (no manifest.csv)");
}

/// Loads bags from dataset.path or generates them from the synthetic spec.
std::vector<Bag> obtain_bags(const json& ds) {
  if (ds.contains("path")) {
    check_keys(ds, {"path"}, "dataset");
    const ProcessedMILDataset data(resolve_dataset_path(ds.at("path").get<std::string>()));
    return data.load_all();
  }
  return generate(spec_from_json(ds));
}

json metrics_to_json(const train::Metrics& m) {
  return json{{"acc", m.acc}, {"auroc", m.auroc}, {"f1", m.f1}, {"loss", m.loss}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write: " + path.string());
  os << text;
}

/// Wall-clock sidecar, kept separate so reports stay byte-reproducible.
void write_meta_sidecar(const fs::path& path, double seconds) {
  json meta;
  meta["wall_time_seconds"] = seconds;
  meta["finished_at"] = static_cast<std::int64_t>(std::time(nullptr));
  write_text(path, meta.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// commands

int cmd_datagen(const json& cfg) {
  if (cfg.at("dataset").contains("path"))
    throw ConfigError("datagen needs a synthetic dataset spec, not dataset.path");
  const SyntheticSpec spec = spec_from_json(cfg.at("dataset"));
  const std::vector<Bag> bags = generate(spec);
  const fs::path out(cfg.at("output_dir").get<std::string>());
  save_dataset(bags, out);

  std::int64_t positives = 0;
  std::int64_t total_instances = 0;
  for (const Bag& b : bags) {
    positives += b.label;
    total_instances += b.size();
  }
  std::printf("wrote %lld bags (%lld positive, mean size %.1f) to %s\n",
              static_cast<long long>(bags.size()),
              static_cast<long long>(positives),
              static_cast<double>(total_instances) / static_cast<double>(bags.size()),
              out.string().c_str());
  return 0;
}

struct TrainData {
  std::vector<Bag> train;
  std::vector<Bag> val;
};

TrainData split_train_val(const std::vector<Bag>& bags, const train::RunConfig& rc) {
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const Bag& b : bags) {
    ids.push_back(b.bag_id);
    labels.push_back(b.label);
  }
  const train::SplitSet splits =
      train::make_splits(ids, labels, 1, rc.val_fraction, 0.0, rc.seed);
  std::map<std::string, const Bag*> by_id;
  for (const Bag& b : bags) by_id.emplace(b.bag_id, &b);
  TrainData out;
  for (const std::string& id : splits.repetitions[0].train)
    out.train.push_back(*by_id.at(id));
  for (const std::string& id : splits.repetitions[0].val)
    out.val.push_back(*by_id.at(id));
  return out;
}

ModelConfig model_config_for(const json& cfg, const std::vector<Bag>& bags) {
  ModelConfig mc = config_from_json(cfg.at("model"));
  if (mc.in_dim == 0) mc.in_dim = bags.front().feature_dim();
  return resolve_config(mc);
}

int cmd_train(const json& cfg, bool resume) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Bag> bags = obtain_bags(cfg.at("dataset"));
  const train::RunConfig rc = run_from_json(cfg.at("run"));
  const ModelConfig mc = model_config_for(cfg, bags);
  const TrainData data = split_train_val(bags, rc);
  const fs::path out(cfg.at("output_dir").get<std::string>());
  fs::create_directories(out);

  if (resume) {
    MILModelPtr model = load_checkpoint(out / "checkpoint");
    const train::Metrics m = train::evaluate(*model, data.val, rc.batch_size);
    json rep;
    rep["command"] = "train --resume";
    rep["metrics"] = metrics_to_json(m);
    write_text(out / "resume_eval.json", rep.dump(2) + "\n");
    std::printf("resume eval: ACC=%.3f AUROC=%.3f F1=%.3f loss=%.6f\n", m.acc,
                m.auroc, m.f1, m.loss);
    return 0;
  }

  MILModelPtr model = build_model(mc, rc.seed);
  const train::TrainResult result = train::train(*model, data.train, data.val, rc);
  save_checkpoint(*model, out / "checkpoint");

  json rep;
  rep["command"] = "train";
  rep["config"] = {{"dataset", cfg.at("dataset")},
                   {"model", config_to_json(model->config())},
                   {"run", run_to_json(rc)},
                   {"output_dir", out.string()}};
  rep["seed"] = rc.seed;
  rep["kernels"] = kernels::backend_name(kernels::active_backend());
  json hist = json::array();
  for (const auto& e : result.history) {
    hist.push_back({{"epoch", e.epoch},
                    {"train_loss", e.train_loss},
                    {"val", metrics_to_json(e.val)}});
  }
  rep["history"] = std::move(hist);
  rep["final"] = metrics_to_json(result.final_val);
  rep["best_epoch"] = result.best_epoch;
  rep["steps"] = result.steps;
  write_text(out / "report.json", rep.dump(2) + "\n");
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0).count();
  write_meta_sidecar(out / "report.meta.json", secs);

  std::printf("final: ACC=%.3f AUROC=%.3f F1=%.3f loss=%.6f (best epoch %lld)\n",
              result.final_val.acc, result.final_val.auroc, result.final_val.f1,
              result.final_val.loss, static_cast<long long>(result.best_epoch));
  return 0;
}

int cmd_eval(const json& cfg, const std::string& checkpoint_dir) {
  if (checkpoint_dir.empty())
    throw ConfigError("eval requires --checkpoint DIR");
  MILModelPtr model = load_checkpoint(checkpoint_dir);
  const std::vector<Bag> bags = obtain_bags(cfg.at("dataset"));
  const train::RunConfig rc = run_from_json(cfg.at("run"));
  const train::Metrics m = train::evaluate(*model, bags, rc.batch_size);

  const fs::path out(cfg.at("output_dir").get<std::string>());
  fs::create_directories(out);
  json rep;
  rep["command"] = "eval";
  rep["checkpoint"] = checkpoint_dir;
  rep["model"] = config_to_json(model->config());
  rep["metrics"] = metrics_to_json(m);
  write_text(out / "eval.json", rep.dump(2) + "\n");
  std::printf("ACC=%.3f AUROC=%.3f F1=%.3f\n", m.acc, m.auroc, m.f1);
  return 0;
}

int cmd_benchmark(const json& cfg, bool parallel) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Bag> bags = obtain_bags(cfg.at("dataset"));
  const train::RunConfig rc = run_from_json(cfg.at("run"));

  std::vector<ModelConfig> models;
  if (cfg.contains("models")) {
    if (!cfg.at("models").is_array() || cfg.at("models").empty())
      throw ConfigError("config.models must be a nonempty array");
    for (const json& mj : cfg.at("models")) {
      ModelConfig mc = config_from_json(mj);
      if (mc.in_dim == 0) mc.in_dim = bags.front().feature_dim();
      models.push_back(resolve_config(mc));
    }
  } else {
    models.push_back(model_config_for(cfg, bags));
  }

  std::int64_t k = 5;
  double test_fraction = 0.2;
  if (cfg.contains("benchmark")) {
    check_keys(cfg.at("benchmark"), {"k", "test_fraction", "parallel"}, "benchmark");
    if (cfg.at("benchmark").contains("k"))
      k = cfg.at("benchmark").at("k").get<std::int64_t>();
    if (cfg.at("benchmark").contains("test_fraction"))
      test_fraction = cfg.at("benchmark").at("test_fraction").get<double>();
    if (cfg.at("benchmark").contains("parallel"))
      parallel = parallel || cfg.at("benchmark").at("parallel").get<bool>();
  }

  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const Bag& b : bags) {
    ids.push_back(b.bag_id);
    labels.push_back(b.label);
  }
  const train::SplitSet splits =
      train::make_splits(ids, labels, k, rc.val_fraction, test_fraction, rc.seed);
  const train::BenchmarkResult result =
      train::run_benchmark(models, bags, splits, rc, parallel);

  const fs::path out(cfg.at("output_dir").get<std::string>());
  fs::create_directories(out);

  // split assignments, for reproducibility
  json js;
  js["test"] = splits.test;
  json reps = json::array();
  for (const auto& r : splits.repetitions)
    reps.push_back({{"train", r.train}, {"val", r.val}});
  js["repetitions"] = std::move(reps);
  write_text(out / "splits.json", js.dump(2) + "\n");

  std::string csv = "model,acc_mean,acc_std,auroc_mean,auroc_std,f1_mean,f1_std\n";
  for (const auto& row : result.rows) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f\n",
                  row.model.c_str(), row.acc_mean, row.acc_std, row.auroc_mean,
                  row.auroc_std, row.f1_mean, row.f1_std);
    csv += buf;
  }
  write_text(out / "benchmark.csv", csv);

  json rep;
  rep["command"] = "benchmark";
  rep["std_convention"] = "population";
  rep["config"] = {{"dataset", cfg.at("dataset")},
                   {"run", run_to_json(rc)},
                   {"k", k},
                   {"test_fraction", test_fraction}};
  json jmodels = json::array();
  for (const auto& mc : models) jmodels.push_back(config_to_json(mc));
  rep["models"] = std::move(jmodels);
  json rows = json::array();
  for (const auto& row : result.rows) {
    json per_rep = json::array();
    for (const auto& m : row.per_rep) per_rep.push_back(metrics_to_json(m));
    rows.push_back({{"model", row.model},
                    {"acc_mean", row.acc_mean},
                    {"acc_std", row.acc_std},
                    {"auroc_mean", row.auroc_mean},
                    {"auroc_std", row.auroc_std},
                    {"f1_mean", row.f1_mean},
                    {"f1_std", row.f1_std},
                    {"per_repetition", std::move(per_rep)}});
  }
  rep["rows"] = std::move(rows);
  write_text(out / "benchmark.json", rep.dump(2) + "\n");
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0).count();
  write_meta_sidecar(out / "benchmark.meta.json", secs);

  std::printf("%-22s %-15s %-15s %-15s\n", "model", "ACC", "AUROC", "F1");
  for (const auto& row : result.rows) {
    std::printf("%-22s %-15s %-15s %-15s\n", row.model.c_str(),
                train::format_mean_std(row.acc_mean, row.acc_std).c_str(),
                train::format_mean_std(row.auroc_mean, row.auroc_std).c_str(),
                train::format_mean_std(row.f1_mean, row.f1_std).c_str());
  }
  return 0;
}

int cmd_inspect(const std::string& target) {
  const fs::path path(target);
  if (fs::is_directory(path) && fs::exists(path / "manifest.csv")) {
    const ProcessedMILDataset data(path);
    std::int64_t positives = 0;
    for (const std::string& id : data.bag_ids()) positives += data.manifest_label(id);
    const Bag first = data.load_bag(data.bag_ids().front());
    std::vector<std::string> fields = {"features", "labels"};
    for (const char* f : {"inst_labels", "coords", "adjacency"}) {
      if (fs::exists(path / f)) fields.push_back(f);
    }
    std::string field_list;
    for (const auto& f : fields) field_list += (field_list.empty() ? "" : ",") + f;
    std::printf("dataset %s: %lld bags, %lld positive, feature_dim %lld, fields %s\n",
                path.string().c_str(), static_cast<long long>(data.size()),
                static_cast<long long>(positives),
                static_cast<long long>(first.feature_dim()), field_list.c_str());
    return 0;
  }
  if (fs::is_directory(path) && fs::exists(path / "model.json")) {
    MILModelPtr model = load_checkpoint(path);
    std::int64_t n_params = 0;
    std::int64_t n_elems = 0;
    for (const nn::Parameter* p : model->parameters()) {
      ++n_params;
      n_elems += p->value.numel();
    }
    std::printf("checkpoint %s: model %s, in_dim %lld, %lld parameter tensors, %lld elements\n",
                path.string().c_str(), model->name().c_str(),
                static_cast<long long>(model->in_dim()),
                static_cast<long long>(n_params), static_cast<long long>(n_elems));
    return 0;
  }
  if (fs::is_regular_file(path)) {
    const Dtype dt = peek_dtype(path);
    std::string shape;
    std::size_t numel = 1;
    const char* dtype_name = "?";
    switch (dt) {
      case Dtype::f32: {
        const auto a = read_array_f32(path);
        for (auto d : a.shape()) shape += (shape.empty() ? "" : "x") + std::to_string(d);
        numel = static_cast<std::size_t>(a.numel());
        dtype_name = "float32";
        break;
      }
      case Dtype::i64: {
        const auto a = read_array_i64(path);
        for (auto d : a.shape()) shape += (shape.empty() ? "" : "x") + std::to_string(d);
        numel = static_cast<std::size_t>(a.numel());
        dtype_name = "int64";
        break;
      }
      case Dtype::u8: {
        const auto a = read_array_u8(path);
        for (auto d : a.shape()) shape += (shape.empty() ? "" : "x") + std::to_string(d);
        numel = static_cast<std::size_t>(a.numel());
        dtype_name = "uint8";
        break;
      }
      case Dtype::f64: {
        const auto a = read_array_f64(path);
        for (auto d : a.shape()) shape += (shape.empty() ? "" : "x") + std::to_string(d);
        numel = static_cast<std::size_t>(a.numel());
        dtype_name = "float64";
        break;
      }
    }
    if (shape.empty()) shape = "scalar";
    std::printf("array file %s: dtype %s, shape %s, %zu elements\n",
                path.string().c_str(), dtype_name, shape.c_str(), numel);
    return 0;
  }
  throw ConfigError("nothing to inspect at '" + target + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"milkit: deep multiple instance learning toolkit"};
  app.require_subcommand(1);
  app.allow_extras();
  app.fallthrough();

  std::string config_path;
  std::string output_dir;
  std::string checkpoint_dir;
  std::string inspect_target;
  long long seed = -1;
  bool resume = false;
  bool parallel = false;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed, "global seed override (dataset + run)");
  app.add_option("--output", output_dir, "output directory override");

  CLI::App* datagen = app.add_subcommand("datagen", "generate a synthetic dataset");
  datagen->allow_extras();
  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->allow_extras();
  train_cmd->add_flag("--resume", resume,
                      "evaluation-only pass over an existing checkpoint");
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval_cmd->allow_extras();
  eval_cmd->add_option("--checkpoint", checkpoint_dir, "checkpoint directory");
  CLI::App* bench = app.add_subcommand("benchmark", "train and compare several models");
  bench->allow_extras();
  bench->add_flag("--parallel", parallel, "run repetitions on separate threads");
  CLI::App* inspect = app.add_subcommand("inspect", "describe a dataset, checkpoint or array file");
  inspect->add_option("target", inspect_target, "path to inspect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    json cfg = default_config();
    if (!config_path.empty()) {
      const json loaded = load_config_file(config_path);
      for (auto it = loaded.begin(); it != loaded.end(); ++it) cfg[it.key()] = it.value();
    }
    std::vector<std::string> extras = app.remaining();
    for (CLI::App* sub : {datagen, train_cmd, eval_cmd, bench}) {
      if (sub->parsed()) {
        const auto sub_extras = sub->remaining();
        extras.insert(extras.end(), sub_extras.begin(), sub_extras.end());
      }
    }
    apply_overrides(cfg, extras);
    if (seed >= 0) {
      cfg["run"]["seed"] = seed;
      if (!cfg["dataset"].contains("path")) cfg["dataset"]["seed"] = seed;
    }
    if (!output_dir.empty()) cfg["output_dir"] = output_dir;

    if (datagen->parsed()) return cmd_datagen(cfg);
    if (train_cmd->parsed()) return cmd_train(cfg, resume);
    if (eval_cmd->parsed()) return cmd_eval(cfg, checkpoint_dir);
    if (bench->parsed()) return cmd_benchmark(cfg, parallel);
    if (inspect->parsed()) return cmd_inspect(inspect_target);
    throw ConfigError("no command given");
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
