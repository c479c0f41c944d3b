#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "grove/config.hpp"
#include "grove/dataset.hpp"
#include "grove/ensemble.hpp"
#include "grove/labelset.hpp"
#include "grove/metrics.hpp"
#include "grove/runner.hpp"
#include "grove/tree.hpp"
#include "grove/verify.hpp"

#include "support.hpp"

#ifdef GROVE_CLI_PATH

using namespace grove;
using testsup::read_file;
using testsup::run_cli;
using testsup::scratch_dir;
using testsup::TempFile;

namespace {

// Everything the CLI cases share: a small synthetic dataset on disk, a
// fast training config, and one model trained from them through the
// binary itself. Built once, on first use.
struct CliWorld {
  std::string data_path;
  std::string conf_path;
  std::string model_path;
  Dataset data;
  RunConfig cfg;
  Forest forest;
  int train_exit = -1;
};

const std::string kConf =
    "population_size = 6\n"
    "max_iterations = 4\n"
    "aggressiveness = 4\n"
    "epsilon = 0.05\n"
    "seed = 11\n";

const CliWorld& world() {
  static const CliWorld w = [] {
    CliWorld w;
    w.data_path = (scratch_dir() / "cli-circle.csv").string();
    save_csv(synth_circle(80, 7), w.data_path);
    w.conf_path = (scratch_dir() / "cli.conf").string();
    std::ofstream(w.conf_path) << kConf;
    w.model_path = (scratch_dir() / "cli-model.json").string();
    w.train_exit = run_cli("train --dataset " + w.data_path + " --config " +
                           w.conf_path + " --out " + w.model_path)
                       .exit_code;
    w.data = load_csv(w.data_path);
    w.cfg = load_config(w.conf_path);
    if (w.train_exit == 0) w.forest = load_model(w.model_path);
    return w;
  }();
  return w;
}

// Mirror of the summary line the binary prints for a metrics report.
std::string metrics_line(const MetricsReport& m) {
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "acc %.3f%%  st %.3f%%  rob %.3f%%  phi %.6f  leaves %lld  "
                "eff-acc %.4f  eff-st %.4f  eff-rob %.4f",
                100.0 * m.accuracy, 100.0 * m.stability, 100.0 * m.robustness,
                m.objective, static_cast<long long>(m.leaves), 100.0 * m.eff_acc,
                100.0 * m.eff_st, 100.0 * m.eff_rob);
  return buf;
}

MetricsReport world_metrics(double epsilon) {
  const CliWorld& w = world();
  return evaluate(w.forest.trees, w.data, w.cfg.ga.weights,
                  Perturbation{epsilon, std::nullopt});
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> fields_of(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string f;
  while (std::getline(in, f, ',')) out.push_back(f);
  return out;
}

}  // namespace

TEST_CASE("help and bad invocations use the documented exit codes") {
  const auto help = run_cli("--help");
  CHECK(help.exit_code == 0);
  for (const char* sub : {"train", "eval", "verify", "predict", "sweep-weights",
                          "trace", "seed-stats", "compare", "synth"}) {
    CHECK(help.out.find(sub) != std::string::npos);
  }

  CHECK(run_cli("").exit_code == 1);            // a subcommand is required
  CHECK(run_cli("frobnicate").exit_code == 1);  // unknown subcommand
  CHECK(run_cli("train").exit_code == 1);       // --dataset is required

  const auto bogus = run_cli("train --dataset x.csv --bogus");
  CHECK(bogus.exit_code == 1);
  CHECK_FALSE(bogus.err.empty());
}

TEST_CASE("io failures exit 2 and validation failures exit 1") {
  const CliWorld& w = world();

  const auto gone = run_cli("train --dataset " + (scratch_dir() / "gone.csv").string() +
                            " --epsilon 0.05");
  CHECK(gone.exit_code == 2);
  CHECK(gone.err.rfind("error: ", 0) == 0);

  const auto badmodel =
      run_cli("predict --model " + (scratch_dir() / "gone.json").string() +
              " --dataset " + w.data_path);
  CHECK(badmodel.exit_code == 2);
  CHECK(badmodel.err.rfind("error: ", 0) == 0);

  const auto badfrac = run_cli("train --dataset " + w.data_path +
                               " --epsilon 0.05 --test-fraction 1.5");
  CHECK(badfrac.exit_code == 1);
  CHECK(badfrac.err ==
        "error: test fraction must lie strictly between 0 and 1\n");

  const auto badeps = run_cli("train --dataset " + w.data_path + " --epsilon -1");
  CHECK(badeps.exit_code == 1);
  CHECK(badeps.err == "error: epsilon must be a finite value >= 0\n");
}

TEST_CASE("commands that measure stability insist on an epsilon") {
  const CliWorld& w = world();
  const std::string expected =
      "error: missing config key: epsilon (set epsilon in the config file or "
      "pass --epsilon)\n";

  const auto train = run_cli("train --dataset " + w.data_path);
  CHECK(train.exit_code == 1);
  CHECK(train.err == expected);

  const auto eval =
      run_cli("eval --model " + w.model_path + " --dataset " + w.data_path);
  CHECK(eval.exit_code == 1);
  CHECK(eval.err == expected);
}

TEST_CASE("synth writes exactly the library's sampler output") {
  const std::string cli_path = (scratch_dir() / "cli-synth.csv").string();
  const auto r = run_cli("synth --n 60 --seed 2026 --out " + cli_path);
  CHECK(r.exit_code == 0);
  CHECK(r.out == "wrote 60 samples to " + cli_path + "\n");

  const std::string lib_path = (scratch_dir() / "lib-synth.csv").string();
  save_csv(synth_circle(60, 2026), lib_path);
  CHECK(read_file(cli_path) == read_file(lib_path));

  const Dataset ds = load_csv(cli_path);
  CHECK(ds.size() == 60);
  CHECK(ds.dim == 2);
  CHECK(ds.class_names == std::vector<std::string>{"outside", "inside"});
  std::filesystem::remove(cli_path);
  std::filesystem::remove(lib_path);
}

TEST_CASE("train reports the run and writes a model eval agrees with") {
  const CliWorld& w = world();
  REQUIRE(w.train_exit == 0);

  const auto r = run_cli("train --dataset " + w.data_path + " --config " +
                         w.conf_path + " --out " + w.model_path);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("dataset cli-circle: 80 samples, 2 features, 2 classes\n") !=
        std::string::npos);
  CHECK(r.out.find("config " + config_digest(w.cfg) + "  seed 11\n") !=
        std::string::npos);
  CHECK(r.out.find("trained 1 tree(s) in ") != std::string::npos);
  CHECK(r.out.find("model written to " + w.model_path + "\n") != std::string::npos);

  // The printed training metrics are the library's own numbers.
  const MetricsReport m = world_metrics(0.05);
  CHECK(r.out.find("train  " + metrics_line(m) + "\n") != std::string::npos);
  CHECK(r.out.find("test   ") == std::string::npos);
}

TEST_CASE("the same seed writes the same model file") {
  const CliWorld& w = world();
  const std::string again = (scratch_dir() / "cli-model-again.json").string();
  const auto r = run_cli("train --dataset " + w.data_path + " --config " +
                         w.conf_path + " --out " + again);
  REQUIRE(r.exit_code == 0);
  CHECK(read_file(again) == read_file(w.model_path));
  std::filesystem::remove(again);
}

TEST_CASE("the run record carries dataset, digest, seed, and metrics") {
  const CliWorld& w = world();
  const std::string rec_path = (scratch_dir() / "cli-rec.json").string();
  const std::string model2 = (scratch_dir() / "cli-rec-model.json").string();

  // --seed beats the config file; --test-fraction adds the holdout block.
  const auto r = run_cli("train --dataset " + w.data_path + " --config " +
                         w.conf_path + " --seed 99 --test-fraction 0.25" +
                         " --out " + model2 + " --record " + rec_path);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("holdout ") != std::string::npos);
  CHECK(r.out.find(": 20 samples\n") != std::string::npos);
  CHECK(r.out.find("test   acc ") != std::string::npos);

  const nlohmann::json rec = nlohmann::json::parse(read_file(rec_path));
  CHECK(rec.at("seed").get<std::uint64_t>() == 99);
  CHECK(rec.at("n_trees").get<int>() == 1);
  CHECK(rec.at("dataset").get<std::string>() == "cli-circle-train");
  CHECK(rec.at("wall_seconds").get<double>() >= 0.0);
  CHECK(rec.at("model_path").get<std::string>() == model2);
  RunConfig cfg99 = w.cfg;
  cfg99.ga.seed = 99;
  CHECK(rec.at("config_digest").get<std::string>() == config_digest(cfg99));
  for (const char* part : {"train", "test"}) {
    const auto& block = rec.at(part);
    for (const char* key : {"accuracy", "stability", "robustness", "objective",
                            "leaves", "eff_acc", "eff_st", "eff_rob"}) {
      CHECK(block.contains(key));
    }
  }
  std::filesystem::remove(rec_path);
  std::filesystem::remove(model2);
}

TEST_CASE("eval prints the raw metrics row the library computes") {
  const CliWorld& w = world();
  const auto r =
      run_cli("eval --model " + w.model_path + " --dataset " + w.data_path +
              " --config " + w.conf_path);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("model " + w.model_path + ": 1 tree(s)\n") != std::string::npos);
  CHECK(r.out.find("dataset cli-circle: 80 samples\n") != std::string::npos);

  const MetricsReport m = world_metrics(0.05);
  const std::string header =
      "accuracy,stability,robustness,objective,leaves,eff_acc,eff_st,eff_rob";
  const std::string row = format_double(m.accuracy) + ',' +
                          format_double(m.stability) + ',' +
                          format_double(m.robustness) + ',' +
                          format_double(m.objective) + ',' +
                          std::to_string(m.leaves) + ',' + format_double(m.eff_acc) +
                          ',' + format_double(m.eff_st) + ',' +
                          format_double(m.eff_rob);
  CHECK(r.out.find(header + "\n" + row + "\n") != std::string::npos);

  char pct[64];
  std::snprintf(pct, sizeof pct, "accuracy    %8.3f%%\n", 100.0 * m.accuracy);
  CHECK(r.out.find(pct) != std::string::npos);
}

TEST_CASE("a flag epsilon overrides the config epsilon") {
  const CliWorld& w = world();
  const auto r =
      run_cli("eval --model " + w.model_path + " --dataset " + w.data_path +
              " --config " + w.conf_path + " --epsilon 0.9");
  REQUIRE(r.exit_code == 0);
  const MetricsReport m = world_metrics(0.9);
  CHECK(r.out.find("\n" + format_double(m.accuracy) + ',' +
                   format_double(m.stability) + ',') != std::string::npos);
  CHECK(m.stability < world_metrics(0.05).stability);  // the radius really grew
}

TEST_CASE("verify emits one verdict per sample plus exact tallies") {
  const CliWorld& w = world();
  const std::string out_path = (scratch_dir() / "cli-verify.csv").string();
  const auto r =
      run_cli("verify --model " + w.model_path + " --dataset " + w.data_path +
              " --config " + w.conf_path + " --out " + out_path);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.empty());

  // Rebuild the whole file from the library and demand byte equality.
  const Perturbation p{0.05, std::nullopt};
  std::string expected = "index,verdict,outcomes\n";
  std::size_t sc = 0, si = 0, un = 0;
  for (std::size_t i = 0; i < w.data.size(); ++i) {
    const ReachabilityResult rr =
        reachable_outcomes(w.forest.trees, box_of(w.data.row(i), p));
    const char* verdict;
    if (rr.outcomes.size() > 1) {
      verdict = "unstable";
      ++un;
    } else if (rr.outcomes[0].labels == label_singleton(w.data.labels[i])) {
      verdict = "stable-correct";
      ++sc;
    } else {
      verdict = "stable-incorrect";
      ++si;
    }
    expected += std::to_string(i) + ',' + verdict + ',' +
                std::to_string(rr.outcomes.size()) + '\n';
  }
  const double n = static_cast<double>(w.data.size());
  expected += "# stable-correct " + std::to_string(sc) + '\n';
  expected += "# stable-incorrect " + std::to_string(si) + '\n';
  expected += "# unstable " + std::to_string(un) + '\n';
  expected += "# stability " + format_double(static_cast<double>(sc + si) / n) + '\n';
  expected += "# robustness " + format_double(static_cast<double>(sc) / n) + '\n';
  CHECK(read_file(out_path) == expected);

  // The tallies are the metric definitions themselves.
  const MetricsReport m = world_metrics(0.05);
  CHECK(static_cast<double>(sc + si) / n == m.stability);
  CHECK(static_cast<double>(sc) / n == m.robustness);
  std::filesystem::remove(out_path);
}

TEST_CASE("predict lists the vote per sample and the exact-match share") {
  const CliWorld& w = world();
  const auto r =
      run_cli("predict --model " + w.model_path + " --dataset " + w.data_path);
  REQUIRE(r.exit_code == 0);

  std::string expected = "index,predicted,label\n";
  std::size_t exact = 0;
  for (std::size_t i = 0; i < w.data.size(); ++i) {
    const LabelSet pred = predict_forest(w.forest, w.data.row(i));
    if (pred == label_singleton(w.data.labels[i])) ++exact;
    std::string names;
    for (const int id : label_list(pred)) {
      if (!names.empty()) names += '|';
      names += w.data.class_names[static_cast<std::size_t>(id)];
    }
    if (names.empty()) names = "(none)";
    expected += std::to_string(i) + ',' + names + ',' +
                w.data.class_names[static_cast<std::size_t>(w.data.labels[i])] + '\n';
  }
  expected += "# exact " + std::to_string(exact) + '/' +
              std::to_string(w.data.size()) + ' ' +
              format_double(static_cast<double>(exact) /
                            static_cast<double>(w.data.size())) +
              '\n';
  CHECK(r.out == expected);
  CHECK(static_cast<double>(exact) / 80.0 == world_metrics(0.05).accuracy);
}

TEST_CASE("headerless data and an index label column work end to end") {
  const CliWorld& w = world();
  const TempFile csv("plain.csv",
                     "0.5,1.5,0\n"
                     "1.5,0.5,1\n"
                     "0.25,0.25,0\n"
                     "1.75,1.75,1\n");
  const auto r = run_cli("predict --model " + w.model_path + " --dataset " +
                         csv.path + " --no-header --label-col 2");
  REQUIRE(r.exit_code == 0);
  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 6);  // header, four rows, tally
  CHECK(lines[0] == "index,predicted,label");
  CHECK(lines[5].rfind("# exact ", 0) == 0);
}

TEST_CASE("sweep-weights walks w_acc from zero to one") {
  const CliWorld& w = world();
  const std::string out_path = (scratch_dir() / "cli-sweep.csv").string();
  const auto r = run_cli("sweep-weights --dataset " + w.data_path + " --config " +
                         w.conf_path + " --steps 4 --test-fraction 0.25 --out " +
                         out_path);
  REQUIRE(r.exit_code == 0);

  const auto lines = lines_of(read_file(out_path));
  REQUIRE(lines.size() == 6);  // header plus steps+1 rows
  CHECK(lines[0] ==
        "w_acc,w_stab,train_acc,train_st,train_rob,leaves,test_acc,test_st,test_rob");
  const std::vector<std::string> w_acc{"0", "0.25", "0.5", "0.75", "1"};
  for (std::size_t k = 0; k < 5; ++k) {
    const auto f = fields_of(lines[k + 1]);
    REQUIRE(f.size() == 9);
    CHECK(f[0] == w_acc[k]);
    CHECK(std::stod(f[0]) + std::stod(f[1]) == 1.0);
  }
  // Pure stability weight: a lone majority leaf already scores 1, and the
  // best fitness never drops, so the trained model is fully stable.
  CHECK(fields_of(lines[1])[3] == "1");
  std::filesystem::remove(out_path);
}

TEST_CASE("trace emits the per-generation elite and matches train --trace") {
  const CliWorld& w = world();
  const std::string t1 = (scratch_dir() / "cli-trace-a.csv").string();
  const std::string t2 = (scratch_dir() / "cli-trace-b.csv").string();

  const auto a = run_cli("trace --dataset " + w.data_path + " --config " +
                         w.conf_path + " --out " + t1);
  REQUIRE(a.exit_code == 0);
  const auto b = run_cli("train --dataset " + w.data_path + " --config " +
                         w.conf_path + " --trace " + t2);
  REQUIRE(b.exit_code == 0);
  CHECK(read_file(t1) == read_file(t2));  // same data, config, seed

  const auto lines = lines_of(read_file(t1));
  REQUIRE(lines.size() == 6);  // header, generations 0..4
  CHECK(lines[0] == "tree,generation,best_fitness,best_acc,best_st");
  double prev = -1.0;
  for (std::size_t g = 0; g < 5; ++g) {
    const auto f = fields_of(lines[g + 1]);
    REQUIRE(f.size() == 5);
    CHECK(f[0] == "0");
    CHECK(f[1] == std::to_string(g));
    const double fitness = std::stod(f[2]);
    CHECK(fitness >= prev);
    prev = fitness;
  }
  std::filesystem::remove(t1);
  std::filesystem::remove(t2);
}

TEST_CASE("seed-stats summarizes the spread and logs every run") {
  const CliWorld& w = world();
  const std::string out_path = (scratch_dir() / "cli-stats.csv").string();
  const auto r = run_cli("seed-stats --dataset " + w.data_path + " --config " +
                         w.conf_path + " --runs 3 --out " + out_path);
  REQUIRE(r.exit_code == 0);

  const auto out = lines_of(r.out);
  REQUIRE(out.size() == 7);
  CHECK(out[0] == "3 runs, metrics on the training set");
  CHECK(out[1].rfind("metric", 0) == 0);
  CHECK(out[2].rfind("accuracy", 0) == 0);
  CHECK(out[3].rfind("stability", 0) == 0);
  CHECK(out[4].rfind("robustness", 0) == 0);
  CHECK(out[5].rfind("mean leaves ", 0) == 0);
  CHECK(out[6].rfind("mean wall ", 0) == 0);

  const auto rows = lines_of(read_file(out_path));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "run,seed,accuracy,stability,robustness,leaves,wall_seconds");
  std::vector<std::string> seeds;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto f = fields_of(rows[i + 1]);
    REQUIRE(f.size() == 7);
    CHECK(f[0] == std::to_string(i));
    seeds.push_back(f[1]);
    const double acc = std::stod(f[2]);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
  }
  CHECK(seeds[0] != seeds[1]);  // derived seeds differ per run
  CHECK(seeds[1] != seeds[2]);
  std::filesystem::remove(out_path);
}

TEST_CASE("compare reports both models and the stability gain") {
  const CliWorld& w = world();
  const std::string other = (scratch_dir() / "cli-model-b.json").string();
  const auto t = run_cli("train --dataset " + w.data_path + " --config " +
                         w.conf_path + " --seed 12 --out " + other);
  REQUIRE(t.exit_code == 0);

  const auto r = run_cli("compare --model-a " + w.model_path + " --model-b " +
                         other + " --dataset " + w.data_path + " --config " +
                         w.conf_path);
  REQUIRE(r.exit_code == 0);

  const Forest fb = load_model(other);
  const Perturbation p{0.05, std::nullopt};
  const MetricsReport ma = world_metrics(0.05);
  const MetricsReport mb = evaluate(fb.trees, w.data, w.cfg.ga.weights, p);
  std::string rel = "inf";
  if (ma.stability > 0.0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4fx", mb.stability / ma.stability);
    rel = buf;
  }
  char gain[128];
  std::snprintf(gain, sizeof gain, "stability gain: %+.6f absolute, %s relative\n",
                mb.stability - ma.stability, rel.c_str());
  const std::string expected = "A " + w.model_path + "\n  " + metrics_line(ma) +
                               "\nB " + other + "\n  " + metrics_line(mb) + "\n" +
                               gain;
  CHECK(r.out == expected);
  std::filesystem::remove(other);
}

#endif  // GROVE_CLI_PATH
