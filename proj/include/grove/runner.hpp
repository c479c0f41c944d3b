#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grove/config.hpp"
#include "grove/dataset.hpp"
#include "grove/ensemble.hpp"
#include "grove/metrics.hpp"

namespace grove {

struct RunRecord {
  std::string dataset;
  std::string digest;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  double seconds_per_tree = 0.0;
  MetricsReport train;
  std::optional<MetricsReport> test;
  std::string model_path;  // set by callers that save the model
};

struct TrainOutcome {
  Forest forest;
  RunRecord record;
  std::vector<std::vector<TraceRow>> traces;  // filled on request, one per tree
};

// The perturbation a config describes over a concrete dataset: the
// epsilon box, clamped to the dataset's observed feature ranges when the
// config asks for it.
Perturbation make_perturbation(const RunConfig& cfg, const Dataset& ds);

// One full training run (genetic forest, or the greedy baseline when the
// config selects it), evaluated on the training set and on `test` when
// given. Requires an explicitly configured epsilon.
TrainOutcome train_once(const Dataset& train, const Dataset* test,
                        const RunConfig& cfg, int threads = 1,
                        bool want_traces = false);

// Classic recursive induction with the same split candidates and purity
// index as the GA: each leaf takes the best candidate until it is pure,
// has no valid split, or hits the depth cap. Baseline for comparisons.
Tree train_greedy(const Dataset& ds, const RunConfig& cfg);

double median(std::vector<double> v);

struct Quartiles {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
};
Quartiles quartiles(std::vector<double> v);

struct SeedStats {
  int runs = 0;
  Quartiles accuracy, stability, robustness;
  double mean_leaves = 0.0;
  double mean_wall_seconds = 0.0;
  std::vector<RunRecord> records;  // seed-index order
};

// Re-trains with n_runs seeds derived from the config seed and summarizes
// the metric spread, on the test set when given, else on the training
// set. Runs are independent; any thread count gives identical numbers.
SeedStats seed_stats(const Dataset& train, const Dataset* test, const RunConfig& cfg,
                     int n_runs, int threads = 1);

struct SweepRow {
  double w_acc = 0.0;
  double w_stab = 0.0;
  MetricsReport train;
  std::optional<MetricsReport> test;
  std::int64_t leaves = 0;
};

// Trains once per weight setting w_acc = k/k_steps, k = 0..k_steps, all
// from the same seed, tracing the accuracy/stability trade-off curve.
std::vector<SweepRow> sweep_weights(const Dataset& train, const Dataset* test,
                                    const RunConfig& cfg, int k_steps,
                                    int threads = 1);

}  // namespace grove
