#pragma once

// Shared test helpers: scratch files, random dataset/tree/box generators,
// the figure trees used across suites, and the brute-force grid oracle
// the reachability analysis is checked against.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <utility>
#include <vector>

#include "grove/dataset.hpp"
#include "grove/ensemble.hpp"
#include "grove/interval.hpp"
#include "grove/labelset.hpp"
#include "grove/rng.hpp"
#include "grove/tree.hpp"
#include "grove/verify.hpp"

namespace testsup {

using namespace grove;

// ---------------------------------------------------------------- files

inline std::filesystem::path scratch_dir() {
  static const std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() /
             ("grove-tests-" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

// Scratch file removed when the object dies.
struct TempFile {
  std::string path;

  explicit TempFile(const std::string& hint, const std::string& content = {}) {
    static int counter = 0;
    path = (scratch_dir() / (std::to_string(counter++) + "-" + hint)).string();
    std::ofstream out(path, std::ios::binary);
    out << content;
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;
  ~TempFile() { std::filesystem::remove(path); }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ------------------------------------------------------------- datasets

inline Dataset make_dataset(int dim, int m, const std::vector<std::vector<double>>& rows,
                            const std::vector<int>& labels,
                            const std::string& name = "made") {
  Dataset ds;
  ds.name = name;
  ds.dim = dim;
  ds.num_classes = m;
  for (int f = 0; f < dim; ++f) ds.feature_names.push_back("f" + std::to_string(f));
  for (int c = 0; c < m; ++c) ds.class_names.push_back("c" + std::to_string(c));
  ds.feature_ranges.assign(static_cast<std::size_t>(dim),
                           {std::numeric_limits<double>::infinity(),
                            -std::numeric_limits<double>::infinity()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int f = 0; f < dim; ++f) {
      const double v = rows[i][static_cast<std::size_t>(f)];
      ds.values.push_back(v);
      auto& r = ds.feature_ranges[static_cast<std::size_t>(f)];
      r.first = std::min(r.first, v);
      r.second = std::max(r.second, v);
    }
    ds.labels.push_back(labels[i]);
  }
  return ds;
}

// Uniform real features in [0, 10); every class id appears at least once.
inline Dataset random_dataset(Rng& rng, std::size_t n, int dim, int m) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    for (int f = 0; f < dim; ++f) row.push_back(rng.uniform_real(0.0, 10.0));
    rows.push_back(std::move(row));
    labels.push_back(i < static_cast<std::size_t>(m)
                         ? static_cast<int>(i)
                         : static_cast<int>(rng.uniform_index(static_cast<std::size_t>(m))));
  }
  return make_dataset(dim, m, rows, labels, "random");
}

// Integer-valued features in [lo, hi], stored as doubles.
inline Dataset integer_dataset(Rng& rng, std::size_t n, int dim, int m, int lo = 1,
                               int hi = 10) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  const std::size_t span = static_cast<std::size_t>(hi - lo + 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    for (int f = 0; f < dim; ++f) {
      row.push_back(static_cast<double>(lo + static_cast<int>(rng.uniform_index(span))));
    }
    rows.push_back(std::move(row));
    labels.push_back(i < static_cast<std::size_t>(m)
                         ? static_cast<int>(i)
                         : static_cast<int>(rng.uniform_index(static_cast<std::size_t>(m))));
  }
  return make_dataset(dim, m, rows, labels, "lattice");
}

// ------------------------------------------------------ structural trees

inline std::unique_ptr<Node> leaf_node(std::vector<std::int64_t> counts) {
  return make_leaf(std::move(counts), {});
}

inline std::unique_ptr<Node> split_node(int feature, double threshold,
                                        std::unique_ptr<Node> left,
                                        std::unique_ptr<Node> right) {
  auto n = std::make_unique<Node>();
  n->split = Split{feature, threshold};
  n->counts.assign(std::max(left->counts.size(), right->counts.size()), 0);
  for (std::size_t i = 0; i < left->counts.size(); ++i) n->counts[i] += left->counts[i];
  for (std::size_t i = 0; i < right->counts.size(); ++i) n->counts[i] += right->counts[i];
  n->left = std::move(left);
  n->right = std::move(right);
  return n;
}

inline Tree make_tree(int dim, int m, std::unique_ptr<Node> root) {
  Tree t;
  t.dim = dim;
  t.num_classes = m;
  for (int f = 0; f < dim; ++f) t.feature_mask.push_back(f);
  t.root = std::move(root);
  return t;
}

// Random tree with synthetic leaf counts; no dataset behind it. Valid for
// prediction and reachability, which read only structure and counts.
inline std::unique_ptr<Node> random_node(Rng& rng, int dim, int m, int depth_left) {
  const bool leaf = depth_left <= 0 || rng.uniform01() < 0.3;
  if (leaf) {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(m), 0);
    const int distinct = 1 + static_cast<int>(rng.uniform_index(2));
    for (int i = 0; i < distinct; ++i) {
      counts[rng.uniform_index(static_cast<std::size_t>(m))] +=
          1 + static_cast<std::int64_t>(rng.uniform_index(5));
    }
    return leaf_node(std::move(counts));
  }
  const int f = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(dim)));
  // Quarter-integer thresholds in [-1, 5]; exact doubles.
  const double k = -1.0 + 0.25 * static_cast<double>(rng.uniform_index(25));
  return split_node(f, k, random_node(rng, dim, m, depth_left - 1),
                    random_node(rng, dim, m, depth_left - 1));
}

inline Tree random_tree(Rng& rng, int dim, int m, int max_depth) {
  auto root = random_node(rng, dim, m, max_depth);
  if (root->is_leaf()) {
    // Keep verifier tests interesting: force at least one split.
    root = split_node(static_cast<int>(rng.uniform_index(static_cast<std::size_t>(dim))),
                      2.0, std::move(root), random_node(rng, dim, m, max_depth - 1));
  }
  return make_tree(dim, m, std::move(root));
}

inline Box random_box(Rng& rng, int dim) {
  Box b(static_cast<std::size_t>(dim));
  for (auto& iv : b) {
    const double center = rng.uniform_real(-1.5, 5.5);
    const double radius = rng.uniform_real(0.1, 1.6);
    iv.lo = center - radius;
    iv.hi = center + radius;
  }
  return b;
}

// --------------------------------------------------------- figure trees

// Left tree of the two-tree figure, as a 2-feature tree. Classes: a=0, b=1.
//   f0 <= 0 ? {a} : (f1 <= 0 ? {b} : {a})
inline Tree fig_t1_2d() {
  return make_tree(2, 2,
                   split_node(0, 0.0, leaf_node({4, 0}),
                              split_node(1, 0.0, leaf_node({0, 2}), leaf_node({2, 0}))));
}

// Same tree embedded in 3 features, for crossover with fig_t2_3d.
inline Tree fig_t1_3d() {
  return make_tree(3, 2,
                   split_node(0, 0.0, leaf_node({4, 0}),
                              split_node(1, 0.0, leaf_node({0, 2}), leaf_node({2, 0}))));
}

// Right tree of the figure:
//   f1 <= 0 ? (f2 <= 0 ? l21 : (f0 <= 0 ? l22 : l23)) : l24
inline Tree fig_t2_3d() {
  return make_tree(
      3, 2,
      split_node(1, 0.0,
                 split_node(2, 0.0, leaf_node({1, 1}),
                            split_node(0, 0.0, leaf_node({2, 0}), leaf_node({0, 2}))),
                 leaf_node({1, 2})));
}

// All corners of {-1,1}^3, labeled by the regions of fig_t1_3d: a where
// f0 <= 0, b where f0 > 0 and f1 <= 0, a where f0 > 0 and f1 > 0. Routes
// every leaf of both figure trees nonempty.
inline Dataset corners_dataset() {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (const double x0 : {-1.0, 1.0}) {
    for (const double x1 : {-1.0, 1.0}) {
      for (const double x2 : {-1.0, 1.0}) {
        rows.push_back({x0, x1, x2});
        labels.push_back(x0 <= 0.0 ? 0 : (x1 <= 0.0 ? 1 : 0));
      }
    }
  }
  return make_dataset(3, 2, rows, labels, "corners");
}

// ----------------------------------------------------------- the oracle

// Leaf the concrete point reaches, as a preorder index.
inline int concrete_leaf_index(const Tree& t, std::span<const double> x) {
  const Node* n = t.root.get();
  int idx = 0;
  while (!n->is_leaf()) {
    if (x[static_cast<std::size_t>(n->split->feature)] <= n->split->threshold) {
      idx += 1;
      n = n->left.get();
    } else {
      idx += 1 + subtree_size(*n->left);
      n = n->right.get();
    }
  }
  return idx;
}

inline void collect_thresholds(const Node& n, int feature, std::vector<double>& out) {
  if (n.is_leaf()) return;
  if (n.split->feature == feature) out.push_back(n.split->threshold);
  collect_thresholds(*n.left, feature, out);
  collect_thresholds(*n.right, feature, out);
}

// Representative coordinates per dimension: within [lo, hi], tree routing
// is constant between consecutive thresholds, and a split flips just
// above its threshold. lo covers the first cell, each threshold t in
// [lo, hi) contributes t (its own cell) and t + delta (the cell after
// it), with delta below half the minimum gap. hi is added for good
// measure. The cross product then hits every routing cell of the box.
inline std::vector<double> grid_coords(std::span<const Tree> model, int feature,
                                       double lo, double hi) {
  std::vector<double> marks{lo, hi};
  for (const Tree& t : model) collect_thresholds(*t.root, feature, marks);
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < marks.size(); ++i) {
    min_gap = std::min(min_gap, marks[i + 1] - marks[i]);
  }
  const double delta = std::isfinite(min_gap) ? min_gap / 2.0 : 1.0;

  std::vector<double> coords{lo, hi};
  for (const double t : marks) {
    if (t >= lo && t < hi) {
      if (t > lo) coords.push_back(t);
      coords.push_back(t + delta);
    }
  }
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  return coords;
}

// Exhaustive concrete enumeration of {vote(model, x) : x in box} over the
// grid of routing cells. Equal to the full outcome set for finite boxes.
inline std::set<LabelSet> oracle_outcomes(std::span<const Tree> model, const Box& box,
                                          std::size_t max_points = 400000) {
  const int dim = model.empty() ? 0 : model[0].dim;
  std::vector<std::vector<double>> axes;
  std::size_t total = 1;
  for (int f = 0; f < dim; ++f) {
    axes.push_back(grid_coords(model, f, box[static_cast<std::size_t>(f)].lo,
                               box[static_cast<std::size_t>(f)].hi));
    total *= axes.back().size();
    if (total > max_points) return {};  // caller must regenerate instead
  }
  std::set<LabelSet> out;
  std::vector<double> x(static_cast<std::size_t>(dim));
  std::vector<std::size_t> pos(static_cast<std::size_t>(dim), 0);
  for (;;) {
    for (int f = 0; f < dim; ++f) {
      x[static_cast<std::size_t>(f)] = axes[static_cast<std::size_t>(f)][pos[static_cast<std::size_t>(f)]];
    }
    out.insert(predict_vote(model, x));
    int f = 0;
    for (; f < dim; ++f) {
      if (++pos[static_cast<std::size_t>(f)] < axes[static_cast<std::size_t>(f)].size()) break;
      pos[static_cast<std::size_t>(f)] = 0;
    }
    if (f == dim) break;
  }
  return out;
}

inline std::set<LabelSet> outcome_set(const ReachabilityResult& rr) {
  std::set<LabelSet> out;
  for (const Outcome& o : rr.outcomes) out.insert(o.labels);
  return out;
}

// ------------------------------------------------------------------ CLI

#ifdef GROVE_CLI_PATH
struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string out_path =
      (scratch_dir() / ("cli-out-" + std::to_string(counter))).string();
  const std::string err_path =
      (scratch_dir() / ("cli-err-" + std::to_string(counter))).string();
  ++counter;
  const std::string cmd =
      std::string(GROVE_CLI_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  std::filesystem::remove(out_path);
  std::filesystem::remove(err_path);
  return r;
}
#endif

}  // namespace testsup
