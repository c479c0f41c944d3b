#include "grove/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>

#include "grove/error.hpp"
#include "grove/rng.hpp"

namespace grove {

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Work items are
// independent and index-addressed, so scheduling cannot change results.
template <typename Fn>
void run_indexed(std::size_t n, int threads, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  const int workers = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

void greedy_rec(Node& node, const Dataset& ds, const Tree& t, const RunConfig& cfg,
                int depth) {
  if (cfg.ga.max_depth && depth >= *cfg.ga.max_depth) return;
  int nonzero = 0;
  for (const std::int64_t c : node.counts) nonzero += c > 0 ? 1 : 0;
  if (nonzero <= 1) return;
  const auto cands =
      enumerate_splits(ds, node.samples, t.feature_mask, cfg.ga.purity, t.num_classes);
  if (cands.empty()) return;
  const SplitCandidate& best = cands.front();

  std::vector<std::int32_t> ls, rs;
  std::vector<std::int64_t> lc(node.counts.size(), 0);
  std::vector<std::int64_t> rc(node.counts.size(), 0);
  for (const std::int32_t r : node.samples) {
    const double v = ds.row(static_cast<std::size_t>(r))[static_cast<std::size_t>(best.feature)];
    const std::size_t l = static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(r)]);
    if (v <= best.threshold) {
      ls.push_back(r);
      ++lc[l];
    } else {
      rs.push_back(r);
      ++rc[l];
    }
  }
  node.split = Split{best.feature, best.threshold};
  node.left = make_leaf(std::move(lc), std::move(ls));
  node.right = make_leaf(std::move(rc), std::move(rs));
  greedy_rec(*node.left, ds, t, cfg, depth + 1);
  greedy_rec(*node.right, ds, t, cfg, depth + 1);
}

}  // namespace

Perturbation make_perturbation(const RunConfig& cfg, const Dataset& ds) {
  Perturbation p;
  p.epsilon = cfg.ga.perturbation.epsilon;
  if (cfg.clamp) p.clamp = ds.feature_ranges;
  return p;
}

Tree train_greedy(const Dataset& ds, const RunConfig& cfg) {
  Tree t = make_leaf_tree(ds);
  greedy_rec(*t.root, ds, t, cfg, 0);
  return t;
}

TrainOutcome train_once(const Dataset& train, const Dataset* test, const RunConfig& cfg,
                        int threads, bool want_traces) {
  if (!cfg.epsilon_set) {
    throw ValidationError(
        "missing config key: epsilon (set epsilon in the config file or pass "
        "--epsilon)");
  }
  if (cfg.trainer != "genetic" && cfg.trainer != "greedy") {
    throw ValidationError("trainer must be 'genetic' or 'greedy'");
  }

  GaConfig ga = cfg.ga;
  ga.perturbation = make_perturbation(cfg, train);

  TrainOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.trainer == "greedy") {
    Forest f;
    f.dim = train.dim;
    f.num_classes = train.num_classes;
    f.trees.push_back(train_greedy(train, cfg));
    out.forest = std::move(f);
  } else {
    out.forest = train_forest(train, ga, cfg.n_trees, cfg.feature_budget, threads,
                              want_traces ? &out.traces : nullptr);
  }
  const auto t1 = std::chrono::steady_clock::now();

  RunRecord& rec = out.record;
  rec.dataset = train.name;
  rec.digest = config_digest(cfg);
  rec.seed = cfg.ga.seed;
  rec.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  rec.seconds_per_tree = rec.wall_seconds / static_cast<double>(out.forest.size());
  rec.train = evaluate(out.forest.trees, train, ga.weights, ga.perturbation);
  if (test != nullptr) {
    rec.test = evaluate(out.forest.trees, *test, ga.weights, make_perturbation(cfg, *test));
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median of an empty sequence");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (v[(n - 1) / 2] + v[n / 2]) / 2.0;
}

Quartiles quartiles(std::vector<double> v) {
  if (v.empty()) throw ValidationError("quartiles of an empty sequence");
  std::sort(v.begin(), v.end());
  Quartiles q;
  q.min = v.front();
  q.max = v.back();
  q.median = (v[(v.size() - 1) / 2] + v[v.size() / 2]) / 2.0;
  double sum = 0.0;
  for (const double x : v) sum += x;
  q.mean = sum / static_cast<double>(v.size());
  // Halves exclude the middle element of an odd-sized sample.
  const std::size_t half = v.size() / 2;
  if (half == 0) {
    q.q1 = q.q3 = q.median;
  } else {
    q.q1 = median(std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(half)));
    q.q3 = median(std::vector<double>(v.end() - static_cast<std::ptrdiff_t>(half), v.end()));
  }
  return q;
}

SeedStats seed_stats(const Dataset& train, const Dataset* test, const RunConfig& cfg,
                     int n_runs, int threads) {
  if (n_runs < 1) throw ValidationError("number of runs must be at least 1");
  SeedStats stats;
  stats.runs = n_runs;
  stats.records.resize(static_cast<std::size_t>(n_runs));

  run_indexed(static_cast<std::size_t>(n_runs), threads, [&](std::size_t i) {
    RunConfig c = cfg;
    c.ga.seed = mix_seed(cfg.ga.seed, i, 2);
    stats.records[i] = train_once(train, test, c, 1).record;
  });

  std::vector<double> acc, st, rob;
  double leaves = 0.0, wall = 0.0;
  for (const RunRecord& r : stats.records) {
    const MetricsReport& m = r.test ? *r.test : r.train;
    acc.push_back(m.accuracy);
    st.push_back(m.stability);
    rob.push_back(m.robustness);
    leaves += static_cast<double>(r.train.leaves);
    wall += r.wall_seconds;
  }
  stats.accuracy = quartiles(std::move(acc));
  stats.stability = quartiles(std::move(st));
  stats.robustness = quartiles(std::move(rob));
  stats.mean_leaves = leaves / static_cast<double>(n_runs);
  stats.mean_wall_seconds = wall / static_cast<double>(n_runs);
  return stats;
}

std::vector<SweepRow> sweep_weights(const Dataset& train, const Dataset* test,
                                    const RunConfig& cfg, int k_steps, int threads) {
  if (k_steps < 1) throw ValidationError("steps must be at least 1");
  std::vector<SweepRow> rows(static_cast<std::size_t>(k_steps) + 1);

  run_indexed(rows.size(), threads, [&](std::size_t k) {
    RunConfig c = cfg;
    const double w_acc = static_cast<double>(k) / static_cast<double>(k_steps);
    c.ga.weights = {w_acc, 1.0 - w_acc};
    const TrainOutcome o = train_once(train, test, c, 1);
    SweepRow& row = rows[k];
    row.w_acc = w_acc;
    row.w_stab = 1.0 - w_acc;
    row.train = o.record.train;
    row.test = o.record.test;
    row.leaves = o.record.train.leaves;
  });
  return rows;
}

}  // namespace grove
