// End-to-end CLI tests; the milkit binary path arrives as the last argv.

#define DOCTEST_CONFIG_IMPLEMENT
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_work;

int run(const std::string& args) {
  const std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

int run_capture(const std::string& args, std::string& out) {
  const fs::path tmp = g_work / "cmd_output.txt";
  const std::string cmd = g_cli + " " + args + " >" + tmp.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream is(tmp);
  out.assign(std::istreambuf_iterator<char>(is), {});
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

bool dirs_byte_equal(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> rel_a, rel_b;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
  }
  std::sort(rel_a.begin(), rel_a.end());
  std::sort(rel_b.begin(), rel_b.end());
  if (rel_a != rel_b) return false;
  for (const auto& r : rel_a) {
    if (slurp(a / r) != slurp(b / r)) return false;
  }
  return true;
}

std::string toy_dataset_flags() {
  return "--dataset.kind=gaussian_witness --dataset.n_bags=12"
         " --dataset.mean_bag_size=6 --dataset.witness_rate=0.4"
         " --dataset.feature_dim=3 --dataset.class_separation=2.5";
}

}  // namespace

TEST_CASE("datagen is deterministic and idempotent in --seed") {
  const fs::path a = g_work / "ds_a";
  const fs::path b = g_work / "ds_b";
  REQUIRE(run("datagen --output " + a.string() + " " + toy_dataset_flags() + " --seed 3") == 0);
  REQUIRE(run("datagen --output " + b.string() + " " + toy_dataset_flags() + " --seed 3") == 0);
  CHECK(dirs_byte_equal(a, b));

  const fs::path c = g_work / "ds_c";
  REQUIRE(run("datagen --output " + c.string() + " " + toy_dataset_flags() + " --seed 4") == 0);
  CHECK(!dirs_byte_equal(a, c));
}

TEST_CASE("datagen rejects infeasible specs with exit 2 and a stderr message") {
  std::string out;
  const int code = run_capture(
      "datagen --output " + (g_work / "bad").string() +
          " --dataset.kind=gaussian_witness --dataset.witness_rate=0.01"
          " --dataset.mean_bag_size=5",
      out);
  CHECK(code == 2);
  CHECK(out.find("infeasible witness configuration") != std::string::npos);
}

TEST_CASE("unknown config keys are rejected naming the key") {
  std::string out;
  const int code = run_capture(
      "datagen --output " + (g_work / "bad2").string() + " --dataset.bogus=1", out);
  CHECK(code == 2);
  CHECK(out.find("bogus") != std::string::npos);
}

TEST_CASE("train writes a 50-entry history by default and is byte-deterministic") {
  const fs::path ds = g_work / "train_ds";
  REQUIRE(run("datagen --output " + ds.string() + " " + toy_dataset_flags() + " --seed 5") == 0);

  const fs::path r1 = g_work / "run_a";
  const std::string train_flags =
      " --dataset.path=" + ds.string() +
      " --model.model_name=ABMIL --model.embed_dim=8 --model.attention_width=4"
      " --seed 7";
  REQUIRE(run("train --output " + r1.string() + train_flags) == 0);
  const std::string first_report = slurp(r1 / "report.json");
  REQUIRE(run("train --output " + r1.string() + train_flags) == 0);

  const json rep = json::parse(slurp(r1 / "report.json"));
  CHECK(rep.at("history").size() == 50);  // Appendix-defaults epoch count
  CHECK(rep.at("config").at("run").at("batch_size") == 1);
  CHECK(rep.at("config").at("run").at("learning_rate") == 1e-4);
  CHECK(rep.at("config").at("run").at("optimizer") == "adam");

  // repeated identical command: report byte-identical; wall-clock lives in
  // the sidecar only
  CHECK(slurp(r1 / "report.json") == first_report);
  CHECK(fs::exists(r1 / "report.meta.json"));
}

TEST_CASE("resume performs an evaluation-only pass matching the report") {
  const fs::path ds = g_work / "train_ds";  // from the previous case
  const fs::path r1 = g_work / "run_a";
  REQUIRE(fs::exists(r1 / "checkpoint" / "model.json"));
  const std::string train_flags =
      " --dataset.path=" + ds.string() +
      " --model.model_name=ABMIL --model.embed_dim=8 --model.attention_width=4"
      " --seed 7";
  REQUIRE(run("train --resume --output " + r1.string() + train_flags) == 0);
  const json rep = json::parse(slurp(r1 / "report.json"));
  const json resumed = json::parse(slurp(r1 / "resume_eval.json"));
  for (const char* key : {"acc", "auroc", "f1", "loss"}) {
    const double a = rep.at("final").at(key).get<double>();
    const double b = resumed.at("metrics").at(key).get<double>();
    CHECK(std::abs(a - b) < 1e-6);
  }
}

TEST_CASE("eval prints three-decimal metrics and writes JSON") {
  const fs::path ds = g_work / "train_ds";
  const fs::path r1 = g_work / "run_a";
  const fs::path ev = g_work / "eval_out";
  std::string out;
  const int code = run_capture("eval --checkpoint " + (r1 / "checkpoint").string() +
                                   " --dataset.path=" + ds.string() + " --output " +
                                   ev.string(),
                               out);
  REQUIRE(code == 0);
  CHECK(out.find("ACC=") != std::string::npos);
  CHECK(out.find("AUROC=") != std::string::npos);
  CHECK(out.find("F1=") != std::string::npos);
  const json rep = json::parse(slurp(ev / "eval.json"));
  CHECK(rep.at("metrics").at("acc").is_number());

  // byte-deterministic on rerun
  const fs::path ev2 = g_work / "eval_out2";
  REQUIRE(run("eval --checkpoint " + (r1 / "checkpoint").string() +
              " --dataset.path=" + ds.string() + " --output " + ev2.string()) == 0);
  CHECK(slurp(ev / "eval.json") == slurp(ev2 / "eval.json"));
}

TEST_CASE("eval exit codes: dim mismatch, corrupt checkpoint, missing dataset") {
  const fs::path ds = g_work / "train_ds";
  const fs::path r1 = g_work / "run_a";

  // feature dimension mismatch reports both dims
  const fs::path ds5 = g_work / "ds_dim5";
  REQUIRE(run("datagen --output " + ds5.string() +
              " --dataset.kind=gaussian_witness --dataset.n_bags=6"
              " --dataset.mean_bag_size=5 --dataset.witness_rate=0.5"
              " --dataset.feature_dim=5 --seed 1") == 0);
  std::string out;
  int code = run_capture("eval --checkpoint " + (r1 / "checkpoint").string() +
                             " --dataset.path=" + ds5.string() + " --output " +
                             (g_work / "ev_bad").string(),
                         out);
  CHECK(code == 2);
  CHECK(out.find("5") != std::string::npos);
  CHECK(out.find("3") != std::string::npos);

  // corrupted checkpoint parameter file
  const fs::path broken = g_work / "broken_ckpt";
  fs::copy(r1 / "checkpoint", broken, fs::copy_options::recursive);
  {
    std::ofstream os(broken / "params" / "embed.weight.milt",
                     std::ios::binary | std::ios::trunc);
    os << "junk";
  }
  code = run_capture("eval --checkpoint " + broken.string() +
                         " --dataset.path=" + ds.string() + " --output " +
                         (g_work / "ev_bad2").string(),
                     out);
  CHECK(code == 2);
  CHECK(out.find("unrecognized array file") != std::string::npos);

  // missing dataset
  code = run_capture("eval --checkpoint " + (r1 / "checkpoint").string() +
                         " --dataset.path=/nonexistent/place --output " +
                         (g_work / "ev_bad3").string(),
                     out);
  CHECK(code == 2);
}

TEST_CASE("train without a dataset path fails with exit 2") {
  std::string out;
  const int code = run_capture(
      "train --output " + (g_work / "no_ds").string() +
          " --dataset.path=/no/such/dataset --model.model_name=ABMIL",
      out);
  CHECK(code == 2);
}

TEST_CASE("benchmark emits a deterministic CSV whose means match the JSON") {
  const fs::path ds = g_work / "bench_ds";
  REQUIRE(run("datagen --output " + ds.string() +
              " --dataset.kind=gaussian_witness --dataset.n_bags=16"
              " --dataset.mean_bag_size=5 --dataset.witness_rate=0.4"
              " --dataset.feature_dim=3 --seed 2") == 0);

  const fs::path cfg_path = g_work / "bench.json";
  {
    json cfg;
    cfg["dataset"] = {{"path", ds.string()}};
    cfg["models"] = json::array();
    cfg["models"].push_back({{"model_name", "MeanPoolMIL"}, {"embed_dim", 8}});
    cfg["models"].push_back(
        {{"model_name", "ABMIL"}, {"embed_dim", 8}, {"attention_width", 4}});
    cfg["run"] = {{"epochs", 3}, {"seed", 9}, {"val_fraction", 0.25}};
    cfg["benchmark"] = {{"k", 2}, {"test_fraction", 0.25}};
    std::ofstream os(cfg_path);
    os << cfg.dump(2);
  }

  const fs::path b1 = g_work / "bench_a";
  const fs::path b2 = g_work / "bench_b";
  REQUIRE(run("benchmark --config " + cfg_path.string() + " --output " + b1.string()) == 0);
  REQUIRE(run("benchmark --config " + cfg_path.string() + " --output " + b2.string()) == 0);
  CHECK(slurp(b1 / "benchmark.csv") == slurp(b2 / "benchmark.csv"));

  const std::string csv = slurp(b1 / "benchmark.csv");
  CHECK(csv.rfind("model,acc_mean,acc_std,auroc_mean,auroc_std,f1_mean,f1_std\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 models

  // recompute means from the per-repetition metrics in the JSON report
  const json rep = json::parse(slurp(b1 / "benchmark.json"));
  CHECK(rep.at("std_convention") == "population");
  REQUIRE(rep.at("rows").size() == 2);
  for (const json& row : rep.at("rows")) {
    double acc_sum = 0.0;
    for (const json& m : row.at("per_repetition")) acc_sum += m.at("acc").get<double>();
    const double mean = acc_sum / static_cast<double>(row.at("per_repetition").size());
    CHECK(std::abs(row.at("acc_mean").get<double>() - mean) < 1e-12);
  }
  CHECK(fs::exists(b1 / "splits.json"));
}

TEST_CASE("inspect reports datasets, checkpoints and array files") {
  const fs::path ds = g_work / "train_ds";
  const fs::path r1 = g_work / "run_a";
  std::string out;
  REQUIRE(run_capture("inspect " + ds.string(), out) == 0);
  CHECK(out.find("12 bags") != std::string::npos);
  REQUIRE(run_capture("inspect " + (r1 / "checkpoint").string(), out) == 0);
  CHECK(out.find("ABMIL") != std::string::npos);
  REQUIRE(run_capture(
              "inspect " + (ds / "features" / (json::parse("\"b000000\"").get<std::string>() + ".milt")).string(),
              out) == 0);
  CHECK(out.find("float32") != std::string::npos);
  CHECK(run("inspect /definitely/not/there") == 2);
}

int main(int argc, char** argv) {
  doctest::Context context;
  if (argc > 1 && argv[argc - 1][0] != '-') {
    g_cli = argv[argc - 1];
    --argc;
  } else {
    g_cli = "./milkit";
  }
  context.applyCommandLine(argc, argv);
  g_work = fs::temp_directory_path() / "milkit_cli_test";
  fs::remove_all(g_work);
  fs::create_directories(g_work);
  const int rc = context.run();
  fs::remove_all(g_work);
  return rc;
}
