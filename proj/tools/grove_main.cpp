#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "grove/config.hpp"
#include "grove/dataset.hpp"
#include "grove/ensemble.hpp"
#include "grove/error.hpp"
#include "grove/labelset.hpp"
#include "grove/metrics.hpp"
#include "grove/runner.hpp"
#include "grove/tree.hpp"
#include "grove/verify.hpp"

using namespace grove;

namespace {

struct DataOpts {
  std::string path;
  std::string label_col = "label";
  bool no_header = false;
};

void add_data_opts(CLI::App* cmd, DataOpts& d) {
  cmd->add_option("--dataset", d.path, "CSV dataset path")->required();
  cmd->add_option("--label-col", d.label_col,
                  "label column name, or 0-based index when the name is absent");
  cmd->add_flag("--no-header", d.no_header, "treat the first row as data");
}

Dataset load_data(const DataOpts& d) {
  return load_csv(d.path, d.label_col, !d.no_header);
}

struct ConfOpts {
  std::string config_path;
  double epsilon = 0.0;
  bool clamp = false;
  std::uint64_t seed = 0;
  CLI::Option* eps_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
};

void add_conf_opts(CLI::App* cmd, ConfOpts& c) {
  cmd->add_option("--config", c.config_path, "key=value config file");
  c.eps_opt = cmd->add_option("--epsilon", c.epsilon, "perturbation radius");
  cmd->add_flag("--clamp", c.clamp, "clamp perturbation boxes to the feature ranges");
  c.seed_opt = cmd->add_option("--seed", c.seed, "training seed");
}

RunConfig make_run_config(const ConfOpts& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  if (c.eps_opt->count() > 0) {
    if (!std::isfinite(c.epsilon) || c.epsilon < 0.0) {
      throw ValidationError("epsilon must be a finite value >= 0");
    }
    cfg.ga.perturbation.epsilon = c.epsilon;
    cfg.epsilon_set = true;
  }
  if (c.clamp) cfg.clamp = true;
  if (c.seed_opt->count() > 0) cfg.ga.seed = c.seed;
  return cfg;
}

void require_epsilon(const RunConfig& cfg) {
  if (!cfg.epsilon_set) {
    throw ValidationError(
        "missing config key: epsilon (set epsilon in the config file or pass "
        "--epsilon)");
  }
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << content;
  out.flush();
  if (!out) throw IoError("cannot write file: " + path);
}

// Tabular results go to --out when given, otherwise to stdout.
void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::fputs(content.c_str(), stdout);
  } else {
    write_text(out_path, content);
  }
}

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

nlohmann::ordered_json metrics_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["accuracy"] = m.accuracy;
  j["stability"] = m.stability;
  j["robustness"] = m.robustness;
  j["objective"] = m.objective;
  j["leaves"] = m.leaves;
  j["eff_acc"] = m.eff_acc;
  j["eff_st"] = m.eff_st;
  j["eff_rob"] = m.eff_rob;
  return j;
}

std::string set_names(LabelSet s, const Dataset& ds) {
  std::string out;
  for (const int id : label_list(s)) {
    if (!out.empty()) out += '|';
    out += ds.class_names[static_cast<std::size_t>(id)];
  }
  return out.empty() ? "(none)" : out;
}

struct SplitOpts {
  double test_fraction = 0.0;
  std::uint64_t split_seed = 0;
  CLI::Option* frac_opt = nullptr;
};

void add_split_opts(CLI::App* cmd, SplitOpts& s) {
  s.frac_opt = cmd->add_option("--test-fraction", s.test_fraction,
                               "hold out this fraction as a test set");
  cmd->add_option("--split-seed", s.split_seed, "seed for the holdout split");
}

// Owns the split halves when a holdout is requested.
struct DataParts {
  Dataset full;
  std::optional<std::pair<Dataset, Dataset>> parts;
  const Dataset* train = nullptr;
  const Dataset* test = nullptr;
};

DataParts prepare_data(const DataOpts& d, const SplitOpts& s) {
  DataParts out;
  out.full = load_data(d);
  if (s.frac_opt->count() > 0) {
    if (!(s.test_fraction > 0.0 && s.test_fraction < 1.0)) {
      throw ValidationError("test fraction must lie strictly between 0 and 1");
    }
    out.parts = split(out.full, s.test_fraction, s.split_seed);
    out.train = &out.parts->first;
    out.test = &out.parts->second;
  } else {
    out.train = &out.full;
  }
  return out;
}

std::string trace_csv(const std::vector<std::vector<TraceRow>>& traces) {
  std::string csv = "tree,generation,best_fitness,best_acc,best_st\n";
  for (std::size_t t = 0; t < traces.size(); ++t) {
    for (const TraceRow& row : traces[t]) {
      csv += std::to_string(t) + ',' + std::to_string(row.generation) + ',' +
             format_double(row.best_fitness) + ',' + format_double(row.best_acc) +
             ',' + format_double(row.best_st) + '\n';
    }
  }
  return csv;
}

int cmd_train(const DataOpts& d, const SplitOpts& sp, const ConfOpts& c, int threads,
              const std::string& out_path, const std::string& trace_path,
              const std::string& record_path) {
  const DataParts data = prepare_data(d, sp);
  const RunConfig cfg = make_run_config(c);
  TrainOutcome o = train_once(*data.train, data.test, cfg, threads, !trace_path.empty());
  if (!out_path.empty()) {
    save_model(out_path, o.forest);
    o.record.model_path = out_path;
  }

  std::printf("dataset %s: %zu samples, %d features, %d classes\n",
              data.train->name.c_str(), data.train->size(), data.train->dim,
              data.train->num_classes);
  if (data.test != nullptr) {
    std::printf("holdout %s: %zu samples\n", data.test->name.c_str(), data.test->size());
  }
  std::printf("config %s  seed %llu\n", o.record.digest.c_str(),
              static_cast<unsigned long long>(o.record.seed));
  std::printf("trained %zu tree(s) in %.2fs (%.3fs per tree)\n", o.forest.size(),
              o.record.wall_seconds, o.record.seconds_per_tree);
  std::printf("train  %s\n", metrics_line(o.record.train).c_str());
  if (o.record.test) std::printf("test   %s\n", metrics_line(*o.record.test).c_str());
  if (!out_path.empty()) std::printf("model written to %s\n", out_path.c_str());

  if (!trace_path.empty()) write_text(trace_path, trace_csv(o.traces));
  if (!record_path.empty()) {
    nlohmann::ordered_json rec;
    rec["dataset"] = o.record.dataset;
    rec["config_digest"] = o.record.digest;
    rec["seed"] = o.record.seed;
    rec["wall_seconds"] = o.record.wall_seconds;
    rec["seconds_per_tree"] = o.record.seconds_per_tree;
    rec["n_trees"] = o.forest.size();
    rec["train"] = metrics_json(o.record.train);
    if (o.record.test) rec["test"] = metrics_json(*o.record.test);
    if (!o.record.model_path.empty()) rec["model_path"] = o.record.model_path;
    write_text(record_path, rec.dump(2) + "\n");
  }
  return 0;
}

int cmd_eval(const std::string& model_path, const DataOpts& d, const ConfOpts& c) {
  const Forest f = load_model(model_path);
  const Dataset ds = load_data(d);
  const RunConfig cfg = make_run_config(c);
  require_epsilon(cfg);
  const MetricsReport m =
      evaluate(f.trees, ds, cfg.ga.weights, make_perturbation(cfg, ds));
  std::printf("model %s: %zu tree(s)\n", model_path.c_str(), f.size());
  std::printf("dataset %s: %zu samples\n", ds.name.c_str(), ds.size());
  std::printf("accuracy,stability,robustness,objective,leaves,eff_acc,eff_st,eff_rob\n");
  std::printf("%s,%s,%s,%s,%lld,%s,%s,%s\n", format_double(m.accuracy).c_str(),
              format_double(m.stability).c_str(), format_double(m.robustness).c_str(),
              format_double(m.objective).c_str(), static_cast<long long>(m.leaves),
              format_double(m.eff_acc).c_str(), format_double(m.eff_st).c_str(),
              format_double(m.eff_rob).c_str());
  std::printf("accuracy    %8.3f%%\n", 100.0 * m.accuracy);
  std::printf("stability   %8.3f%%\n", 100.0 * m.stability);
  std::printf("robustness  %8.3f%%\n", 100.0 * m.robustness);
  std::printf("objective   %9.6f\n", m.objective);
  std::printf("leaves      %8lld\n", static_cast<long long>(m.leaves));
  std::printf("eff-acc     %9.4f\n", 100.0 * m.eff_acc);
  std::printf("eff-st      %9.4f\n", 100.0 * m.eff_st);
  std::printf("eff-rob     %9.4f\n", 100.0 * m.eff_rob);
  return 0;
}

int cmd_verify(const std::string& model_path, const DataOpts& d, const ConfOpts& c,
               const std::string& out_path) {
  const Forest f = load_model(model_path);
  const Dataset ds = load_data(d);
  const RunConfig cfg = make_run_config(c);
  require_epsilon(cfg);
  const Perturbation p = make_perturbation(cfg, ds);

  std::string csv = "index,verdict,outcomes\n";
  std::size_t sc = 0, si = 0, un = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Box box = box_of(ds.row(i), p);
    const ReachabilityResult rr = reachable_outcomes(f.trees, box);
    const char* verdict;
    if (rr.outcomes.size() > 1) {
      verdict = "unstable";
      ++un;
    } else if (rr.outcomes[0].labels ==
               label_singleton(ds.labels[i])) {
      verdict = "stable-correct";
      ++sc;
    } else {
      verdict = "stable-incorrect";
      ++si;
    }
    csv += std::to_string(i) + ',' + verdict + ',' +
           std::to_string(rr.outcomes.size()) + '\n';
  }
  const double n = static_cast<double>(ds.size());
  csv += "# stable-correct " + std::to_string(sc) + '\n';
  csv += "# stable-incorrect " + std::to_string(si) + '\n';
  csv += "# unstable " + std::to_string(un) + '\n';
  csv += "# stability " + format_double(static_cast<double>(sc + si) / n) + '\n';
  csv += "# robustness " + format_double(static_cast<double>(sc) / n) + '\n';
  emit(out_path, csv);
  return 0;
}

int cmd_predict(const std::string& model_path, const DataOpts& d,
                const std::string& out_path) {
  const Forest f = load_model(model_path);
  const Dataset ds = load_data(d);
  std::string csv = "index,predicted,label\n";
  std::size_t exact = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const LabelSet pred = predict_forest(f, ds.row(i));
    if (pred == label_singleton(ds.labels[i])) ++exact;
    csv += std::to_string(i) + ',' + set_names(pred, ds) + ',' +
           ds.class_names[static_cast<std::size_t>(ds.labels[i])] + '\n';
  }
  csv += "# exact " + std::to_string(exact) + '/' + std::to_string(ds.size()) + ' ' +
         format_double(static_cast<double>(exact) / static_cast<double>(ds.size())) +
         '\n';
  emit(out_path, csv);
  return 0;
}

int cmd_sweep(const DataOpts& d, const SplitOpts& sp, const ConfOpts& c, int steps,
              int threads, const std::string& out_path) {
  const DataParts data = prepare_data(d, sp);
  const RunConfig cfg = make_run_config(c);
  require_epsilon(cfg);
  const std::vector<SweepRow> rows =
      sweep_weights(*data.train, data.test, cfg, steps, threads);

  std::string csv = "w_acc,w_stab,train_acc,train_st,train_rob,leaves";
  if (data.test != nullptr) csv += ",test_acc,test_st,test_rob";
  csv += '\n';
  for (const SweepRow& r : rows) {
    csv += format_double(r.w_acc) + ',' + format_double(r.w_stab) + ',' +
           format_double(r.train.accuracy) + ',' + format_double(r.train.stability) +
           ',' + format_double(r.train.robustness) + ',' + std::to_string(r.leaves);
    if (r.test) {
      csv += ',' + format_double(r.test->accuracy) + ',' +
             format_double(r.test->stability) + ',' + format_double(r.test->robustness);
    }
    csv += '\n';
  }
  emit(out_path, csv);
  return 0;
}

int cmd_trace(const DataOpts& d, const ConfOpts& c, int threads,
              const std::string& out_path) {
  const Dataset ds = load_data(d);
  const RunConfig cfg = make_run_config(c);
  const TrainOutcome o = train_once(ds, nullptr, cfg, threads, true);
  emit(out_path, trace_csv(o.traces));
  return 0;
}

int cmd_seed_stats(const DataOpts& d, const SplitOpts& sp, const ConfOpts& c, int runs,
                   int threads, const std::string& out_path) {
  const DataParts data = prepare_data(d, sp);
  const RunConfig cfg = make_run_config(c);
  require_epsilon(cfg);
  const SeedStats s = seed_stats(*data.train, data.test, cfg, runs, threads);

  std::printf("%d runs, metrics on the %s set\n", s.runs,
              data.test != nullptr ? "test" : "training");
  std::printf("%-10s %8s %8s %8s %8s %8s %8s\n", "metric", "min", "q1", "median", "q3",
              "max", "mean");
  const auto row = [](const char* name, const Quartiles& q) {
    std::printf("%-10s %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f\n", name, q.min, q.q1,
                q.median, q.q3, q.max, q.mean);
  };
  row("accuracy", s.accuracy);
  row("stability", s.stability);
  row("robustness", s.robustness);
  std::printf("mean leaves %.2f\n", s.mean_leaves);
  std::printf("mean wall %.3fs\n", s.mean_wall_seconds);

  if (!out_path.empty()) {
    std::string csv = "run,seed,accuracy,stability,robustness,leaves,wall_seconds\n";
    for (std::size_t i = 0; i < s.records.size(); ++i) {
      const RunRecord& r = s.records[i];
      const MetricsReport& m = r.test ? *r.test : r.train;
      csv += std::to_string(i) + ',' + std::to_string(r.seed) + ',' +
             format_double(m.accuracy) + ',' + format_double(m.stability) + ',' +
             format_double(m.robustness) + ',' + std::to_string(r.train.leaves) + ',' +
             format_double(r.wall_seconds) + '\n';
    }
    write_text(out_path, csv);
  }
  return 0;
}

int cmd_compare(const std::string& path_a, const std::string& path_b, const DataOpts& d,
                const ConfOpts& c) {
  const Forest fa = load_model(path_a);
  const Forest fb = load_model(path_b);
  const Dataset ds = load_data(d);
  const RunConfig cfg = make_run_config(c);
  require_epsilon(cfg);
  const Perturbation p = make_perturbation(cfg, ds);
  const MetricsReport ma = evaluate(fa.trees, ds, cfg.ga.weights, p);
  const MetricsReport mb = evaluate(fb.trees, ds, cfg.ga.weights, p);

  std::printf("A %s\n  %s\n", path_a.c_str(), metrics_line(ma).c_str());
  std::printf("B %s\n  %s\n", path_b.c_str(), metrics_line(mb).c_str());
  const double abs_gain = mb.stability - ma.stability;
  std::string rel;
  if (ma.stability > 0.0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4fx", mb.stability / ma.stability);
    rel = buf;
  } else {
    rel = "inf";
  }
  std::printf("stability gain: %+.6f absolute, %s relative\n", abs_gain, rel.c_str());
  return 0;
}

int cmd_synth(std::size_t n, std::uint64_t seed, const std::string& out_path) {
  const Dataset ds = synth_circle(n, seed);
  save_csv(ds, out_path);
  std::printf("wrote %zu samples to %s\n", ds.size(), out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grove: trains decision trees and forests whose prediction "
               "stability under bounded perturbations is certified exactly"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a model and report its metrics");
  DataOpts train_data;
  SplitOpts train_split;
  ConfOpts train_conf;
  int train_threads = 1;
  std::string train_out, train_trace, train_record;
  add_data_opts(train, train_data);
  add_split_opts(train, train_split);
  add_conf_opts(train, train_conf);
  train->add_option("--threads", train_threads, "worker threads for independent runs");
  train->add_option("--out", train_out, "write the model document here");
  train->add_option("--trace", train_trace, "write the fitness trace CSV here");
  train->add_option("--record", train_record, "write the run record JSON here");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a saved model on a dataset");
  std::string eval_model;
  DataOpts eval_data;
  ConfOpts eval_conf;
  eval->add_option("--model", eval_model, "model document path")->required();
  add_data_opts(eval, eval_data);
  add_conf_opts(eval, eval_conf);

  // verify
  auto* verify = app.add_subcommand(
      "verify", "enumerate reachable outcomes per sample and report verdicts");
  std::string verify_model, verify_out;
  DataOpts verify_data;
  ConfOpts verify_conf;
  verify->add_option("--model", verify_model, "model document path")->required();
  add_data_opts(verify, verify_data);
  add_conf_opts(verify, verify_conf);
  verify->add_option("--out", verify_out, "write the verdict CSV here");

  // predict
  auto* predict = app.add_subcommand("predict", "point predictions for every sample");
  std::string predict_model, predict_out;
  DataOpts predict_data;
  predict->add_option("--model", predict_model, "model document path")->required();
  add_data_opts(predict, predict_data);
  predict->add_option("--out", predict_out, "write the prediction CSV here");

  // sweep-weights
  auto* sweep = app.add_subcommand(
      "sweep-weights", "train across the accuracy/stability weight range");
  DataOpts sweep_data;
  SplitOpts sweep_split;
  ConfOpts sweep_conf;
  int sweep_steps = 10, sweep_threads = 1;
  std::string sweep_out;
  add_data_opts(sweep, sweep_data);
  add_split_opts(sweep, sweep_split);
  add_conf_opts(sweep, sweep_conf);
  sweep->add_option("--steps", sweep_steps, "number of weight steps (rows: steps+1)");
  sweep->add_option("--threads", sweep_threads, "worker threads for independent runs");
  sweep->add_option("--out", sweep_out, "write the sweep CSV here");

  // trace
  auto* trace = app.add_subcommand("trace", "train once and emit the fitness trace");
  DataOpts trace_data;
  ConfOpts trace_conf;
  int trace_threads = 1;
  std::string trace_out;
  add_data_opts(trace, trace_data);
  add_conf_opts(trace, trace_conf);
  trace->add_option("--threads", trace_threads, "worker threads for independent runs");
  trace->add_option("--out", trace_out, "write the trace CSV here");

  // seed-stats
  auto* stats = app.add_subcommand(
      "seed-stats", "metric spread across repeated training seeds");
  DataOpts stats_data;
  SplitOpts stats_split;
  ConfOpts stats_conf;
  int stats_runs = 10, stats_threads = 1;
  std::string stats_out;
  add_data_opts(stats, stats_data);
  add_split_opts(stats, stats_split);
  add_conf_opts(stats, stats_conf);
  stats->add_option("--runs", stats_runs, "number of seeds");
  stats->add_option("--threads", stats_threads, "worker threads for independent runs");
  stats->add_option("--out", stats_out, "write the per-run CSV here");

  // compare
  auto* compare = app.add_subcommand("compare", "compare two models on one dataset");
  std::string compare_a, compare_b;
  DataOpts compare_data;
  ConfOpts compare_conf;
  compare->add_option("--model-a", compare_a, "baseline model path")->required();
  compare->add_option("--model-b", compare_b, "candidate model path")->required();
  add_data_opts(compare, compare_data);
  add_conf_opts(compare, compare_conf);

  // synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic circle dataset");
  std::size_t synth_n = 1000;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth->add_option("--n", synth_n, "number of samples");
  synth->add_option("--seed", synth_seed, "sampling seed");
  synth->add_option("--out", synth_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*train) {
      return cmd_train(train_data, train_split, train_conf, train_threads, train_out,
                       train_trace, train_record);
    }
    if (*eval) return cmd_eval(eval_model, eval_data, eval_conf);
    if (*verify) return cmd_verify(verify_model, verify_data, verify_conf, verify_out);
    if (*predict) return cmd_predict(predict_model, predict_data, predict_out);
    if (*sweep) {
      return cmd_sweep(sweep_data, sweep_split, sweep_conf, sweep_steps, sweep_threads,
                       sweep_out);
    }
    if (*trace) return cmd_trace(trace_data, trace_conf, trace_threads, trace_out);
    if (*stats) {
      return cmd_seed_stats(stats_data, stats_split, stats_conf, stats_runs,
                            stats_threads, stats_out);
    }
    if (*compare) return cmd_compare(compare_a, compare_b, compare_data, compare_conf);
    if (*synth) return cmd_synth(synth_n, synth_seed, synth_out);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 2;
  }
  return 0;
}
