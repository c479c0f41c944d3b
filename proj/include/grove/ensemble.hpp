#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "grove/dataset.hpp"
#include "grove/genetic.hpp"
#include "grove/labelset.hpp"
#include "grove/tree.hpp"

namespace grove {

struct Forest {
  std::vector<Tree> trees;
  int dim = 0;
  int num_classes = 0;
  // GA seed of each tree's run, in tree order; empty for loaded models
  // that did not record them.
  std::vector<std::uint64_t> tree_seeds;

  std::size_t size() const { return trees.size(); }
};

// Exactly `count` distinct feature ids out of [0, dim), sorted ascending.
std::vector<int> sample_features(int dim, int count, std::uint64_t seed);

// Trains n_trees independent runs and assembles them in index order. Run
// i derives its GA seed and its feature subset from (cfg.seed, i) alone,
// so the forest is identical for every thread count. A feature budget of
// 0 (or dim) gives every run the full feature set. With n_trees == 1 the
// single run uses cfg.seed itself and equals a plain evolve call. When
// `traces` is given it receives one fitness trace per tree.
Forest train_forest(const Dataset& ds, const GaConfig& cfg, int n_trees,
                    int feature_budget, int threads = 1,
                    std::vector<std::vector<TraceRow>>* traces = nullptr);

// Majority vote across the trees with exact fractional ballots.
LabelSet predict_forest(const Forest& f, std::span<const double> x);

std::string serialize_forest(const Forest& f);
Forest deserialize_forest(const std::string& text);

// Model files hold either a single-tree or a forest document. A tree
// document loads as a one-tree forest; a one-tree forest saves back as a
// tree document.
Forest load_model(const std::string& path);
void save_model(const std::string& path, const Forest& f);

}  // namespace grove
