#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "grove/dataset.hpp"
#include "grove/metrics.hpp"
#include "grove/rng.hpp"
#include "grove/tree.hpp"
#include "grove/verify.hpp"

namespace grove {

enum class MutationStrategy { Grow, GrowOrPrune };

struct GaConfig {
  int population_size = 32;
  int max_iterations = 100;
  double mutation_probability = 0.2;
  MutationStrategy mutation_strategy = MutationStrategy::Grow;
  // Split candidates per mutation that get a full fitness evaluation
  // (stability included); the rest wait for a later generation to
  // re-select their leaf.
  int aggressiveness = 16;
  Weights weights;
  Perturbation perturbation;
  PurityIndex purity = PurityIndex::Entropy;
  std::uint64_t seed = 0;
  std::optional<int> max_depth;
  // Added to child entropies during descent so pure subtrees keep a small
  // probability of being visited.
  double entropy_smoothing = 1e-3;
};

struct Scores {
  double fitness = 0.0;
  double acc = 0.0;
  double st = 0.0;
};

// Memoizes scores by structural identity. All trees inside one training
// run are routed on the same dataset, so structure determines the scores.
class FitnessCache {
 public:
  const Scores* find(const std::string& key) const {
    const auto it = map_.find(key);
    return it == map_.end() ? nullptr : &it->second;
  }
  void insert(std::string key, const Scores& s) { map_.emplace(std::move(key), s); }
  std::size_t size() const { return map_.size(); }

 private:
  std::unordered_map<std::string, Scores> map_;
};

struct Individual {
  Tree tree;
  Scores scores;
};

struct Population {
  std::vector<Individual> individuals;
  int generation = 0;
};

// All valid midpoint split candidates for the rows routed to one leaf,
// sorted best purity first (ties: lowest feature, then lowest threshold).
struct SplitCandidate {
  int feature = 0;
  double threshold = 0.0;
  double purity = 0.0;
};
std::vector<SplitCandidate> enumerate_splits(const Dataset& ds,
                                             std::span<const std::int32_t> rows,
                                             std::span<const int> feature_mask,
                                             PurityIndex index, int num_classes);

// An empty mask means every feature. Result is sorted and validated.
std::vector<int> resolve_feature_mask(std::vector<int> mask, int dim);

// Default initialization: population_size copies of the all-samples
// single leaf. When pretrained trees are given, they are cycled through
// the population after re-routing and consistency enforcement.
Population generate_initial(const GaConfig& cfg, const Dataset& ds,
                            std::vector<int> feature_mask,
                            const std::vector<Tree>* pretrained = nullptr,
                            FitnessCache* cache = nullptr);

// Training objective w_acc*acc + w_stab*st on the training set, with
// stability certified exactly. Memoized through `cache` when given.
Scores fitness(const Tree& t, const Dataset& ds, const GaConfig& cfg,
               FitnessCache* cache = nullptr);

// Fitness-proportional selection; uniform when total fitness is zero.
const Individual& select_roulette(const Population& pop, Rng& rng);

// Single-point crossover: a uniformly chosen non-root node of `a` is
// replaced by a uniformly chosen subtree of `b`, then consistency is
// enforced. Degenerate picks produce a valid (possibly smaller) tree.
Tree crossover(const Tree& a, const Tree& b, const Dataset& ds, Rng& rng);

// Entropy-guided descent to a leaf, then the best of the top-A candidate
// splits by purity is applied when its fitness is at least the current
// tree's; otherwise the tree is returned unchanged.
Tree mutate_grow(const Tree& t, const Dataset& ds, const GaConfig& cfg,
                 FitnessCache& cache, Rng& rng);

// Same descent, but each internal node visited is first pruned to a
// merged leaf with probability 1 - entropy(node); reaching a leaf
// unpruned falls back to the grow behavior.
Tree mutate_grow_or_prune(const Tree& t, const Dataset& ds, const GaConfig& cfg,
                          FitnessCache& cache, Rng& rng);

struct TraceRow {
  int generation = 0;
  double best_fitness = 0.0;
  double best_acc = 0.0;
  double best_st = 0.0;
};

struct EvolveResult {
  Tree best;
  Scores scores;
  std::vector<TraceRow> trace;  // generation 0 plus one row per iteration
};

// The generational loop: the best individual carries over unchanged
// (elitism), the rest of the next population is bred by roulette
// selection, crossover, and probabilistic mutation. Deterministic for a
// fixed seed; returns the best-ever individual.
EvolveResult evolve(const Dataset& ds, const GaConfig& cfg,
                    std::vector<int> feature_mask = {});

}  // namespace grove
