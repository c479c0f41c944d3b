#include "grove/genetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "grove/error.hpp"
#include "grove/interval.hpp"
#include "grove/labelset.hpp"

namespace grove {

namespace {

void check_config(const GaConfig& cfg) {
  if (cfg.population_size < 2) {
    throw ValidationError("population_size must be at least 2");
  }
  if (cfg.max_iterations < 0) {
    throw ValidationError("max_iterations must be >= 0");
  }
  if (!(cfg.mutation_probability >= 0.0 && cfg.mutation_probability <= 1.0)) {
    throw ValidationError("mutation_probability must lie in [0, 1]");
  }
  if (cfg.aggressiveness < 1) {
    throw ValidationError("aggressiveness must be at least 1");
  }
  if (!(cfg.weights.w_acc >= 0.0) || !(cfg.weights.w_stab >= 0.0) ||
      std::abs(cfg.weights.w_acc + cfg.weights.w_stab - 1.0) > 1e-9) {
    throw ValidationError("weights must be nonnegative and sum to 1");
  }
  if (!std::isfinite(cfg.perturbation.epsilon) || cfg.perturbation.epsilon < 0.0) {
    throw ValidationError("epsilon must be a finite value >= 0");
  }
  if (!(cfg.entropy_smoothing > 0.0)) {
    throw ValidationError("entropy_smoothing must be > 0");
  }
  if (cfg.max_depth && *cfg.max_depth < 0) {
    throw ValidationError("max_depth must be >= 0");
  }
}

void check_dataset(const Dataset& ds) {
  if (ds.size() == 0) throw ValidationError("training set is empty");
  if (ds.num_classes < 1) throw ValidationError("dataset has no classes");
}

void collect_split_features(const Node& n, std::vector<int>& out) {
  if (n.is_leaf()) return;
  out.push_back(n.split->feature);
  collect_split_features(*n.left, out);
  collect_split_features(*n.right, out);
}

// Splits the rows of one leaf in place: the candidate tree reuses the
// ancestors' counts unchanged, so no re-route is needed.
std::unique_ptr<Node> split_leaf(const Dataset& ds, const Node& leaf,
                                 const SplitCandidate& c, int num_classes) {
  std::vector<std::int32_t> ls, rs;
  std::vector<std::int64_t> lc(static_cast<std::size_t>(num_classes), 0);
  std::vector<std::int64_t> rc(static_cast<std::size_t>(num_classes), 0);
  for (const std::int32_t r : leaf.samples) {
    const double v = ds.row(r)[static_cast<std::size_t>(c.feature)];
    if (v <= c.threshold) {
      ls.push_back(r);
      ++lc[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(r)])];
    } else {
      rs.push_back(r);
      ++rc[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(r)])];
    }
  }
  auto node = std::make_unique<Node>();
  node->split = Split{c.feature, c.threshold};
  node->counts = leaf.counts;
  node->samples = leaf.samples;
  node->left = make_leaf(std::move(lc), std::move(ls));
  node->right = make_leaf(std::move(rc), std::move(rs));
  return node;
}

// The top-A candidates by purity get a full fitness evaluation; the best
// one replaces the leaf when it does not lose fitness.
Tree grow_at_leaf(const Tree& t, const Node& leaf, int leaf_index, int leaf_depth,
                  const Dataset& ds, const GaConfig& cfg, FitnessCache& cache) {
  if (cfg.max_depth && leaf_depth >= *cfg.max_depth) return t;
  const auto cands =
      enumerate_splits(ds, leaf.samples, t.feature_mask, cfg.purity, t.num_classes);
  if (cands.empty()) return t;

  const Scores cur = fitness(t, ds, cfg, &cache);
  const std::size_t limit =
      std::min(cands.size(), static_cast<std::size_t>(cfg.aggressiveness));

  bool have_best = false;
  Tree best_tree;
  Scores best_scores;
  const SplitCandidate* best_cand = nullptr;
  for (std::size_t i = 0; i < limit; ++i) {
    auto node = split_leaf(ds, leaf, cands[i], t.num_classes);
    Tree cand = with_subtree(t, leaf_index, *node);
    const Scores s = fitness(cand, ds, cfg, &cache);
    const bool better =
        !have_best || s.fitness > best_scores.fitness ||
        (s.fitness == best_scores.fitness &&
         (cands[i].feature < best_cand->feature ||
          (cands[i].feature == best_cand->feature &&
           cands[i].threshold < best_cand->threshold)));
    if (better) {
      have_best = true;
      best_tree = std::move(cand);
      best_scores = s;
      best_cand = &cands[i];
    }
  }
  if (have_best && best_scores.fitness >= cur.fitness) return best_tree;
  return t;
}

// Entropy-guided descent step. Children of a routed tree always hold
// samples, so their entropies are defined; smoothing keeps pure subtrees
// reachable.
bool descend_left(const Node& n, const GaConfig& cfg, int num_classes, Rng& rng) {
  const double hl = entropy(n.left->counts, num_classes) + cfg.entropy_smoothing;
  const double hr = entropy(n.right->counts, num_classes) + cfg.entropy_smoothing;
  return rng.uniform01() * (hl + hr) < hl;
}

int best_index(const Population& pop) {
  int best = 0;
  for (std::size_t i = 1; i < pop.individuals.size(); ++i) {
    if (pop.individuals[i].scores.fitness > pop.individuals[static_cast<std::size_t>(best)].scores.fitness) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

std::vector<int> resolve_feature_mask(std::vector<int> mask, int dim) {
  if (dim < 1) throw ValidationError("dimension must be at least 1");
  if (mask.empty()) {
    mask.resize(static_cast<std::size_t>(dim));
    for (int f = 0; f < dim; ++f) mask[static_cast<std::size_t>(f)] = f;
    return mask;
  }
  std::sort(mask.begin(), mask.end());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] < 0 || mask[i] >= dim) {
      throw ValidationError("feature mask entry " + std::to_string(mask[i]) +
                            " is out of range for dimension " + std::to_string(dim));
    }
    if (i > 0 && mask[i] == mask[i - 1]) {
      throw ValidationError("feature mask entry " + std::to_string(mask[i]) +
                            " is duplicated");
    }
  }
  return mask;
}

std::vector<SplitCandidate> enumerate_splits(const Dataset& ds,
                                             std::span<const std::int32_t> rows,
                                             std::span<const int> feature_mask,
                                             PurityIndex index, int num_classes) {
  std::vector<SplitCandidate> out;
  if (rows.size() < 2) return out;
  const std::size_t m = static_cast<std::size_t>(num_classes);

  std::vector<std::pair<double, int>> vals(rows.size());
  std::vector<std::int64_t> left(m), right(m);
  for (const int f : feature_mask) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::int32_t r = rows[i];
      vals[i] = {ds.row(r)[static_cast<std::size_t>(f)],
                 ds.labels[static_cast<std::size_t>(r)]};
    }
    std::sort(vals.begin(), vals.end());
    std::fill(left.begin(), left.end(), 0);
    std::fill(right.begin(), right.end(), 0);
    for (const auto& [v, l] : vals) ++right[static_cast<std::size_t>(l)];

    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      const std::size_t l = static_cast<std::size_t>(vals[i].second);
      ++left[l];
      --right[l];
      const double lo = vals[i].first;
      const double hi = vals[i + 1].first;
      if (!(lo < hi)) continue;
      // Midpoint, nudged down when the gap is below one ulp so the
      // threshold still separates the two values.
      double k = lo + (hi - lo) / 2.0;
      if (k >= hi) k = lo;
      out.push_back({f, k, split_purity(index, left, right, num_classes)});
    }
  }
  std::sort(out.begin(), out.end(), [](const SplitCandidate& a, const SplitCandidate& b) {
    if (a.purity != b.purity) return a.purity < b.purity;
    if (a.feature != b.feature) return a.feature < b.feature;
    return a.threshold < b.threshold;
  });
  return out;
}

Scores fitness(const Tree& t, const Dataset& ds, const GaConfig& cfg,
               FitnessCache* cache) {
  std::string key;
  if (cache != nullptr) {
    key = structure_key(t);
    if (const Scores* hit = cache->find(key)) return *hit;
  }
  const std::span<const Tree> model(&t, 1);
  Scores s;
  s.acc = accuracy(model, ds);
  s.st = stability_robustness(model, ds, cfg.perturbation).stability;
  s.fitness = objective(cfg.weights, s.acc, s.st);
  if (cache != nullptr) cache->insert(std::move(key), s);
  return s;
}

Population generate_initial(const GaConfig& cfg, const Dataset& ds,
                            std::vector<int> feature_mask,
                            const std::vector<Tree>* pretrained,
                            FitnessCache* cache) {
  check_config(cfg);
  check_dataset(ds);
  const std::vector<int> mask = resolve_feature_mask(std::move(feature_mask), ds.dim);

  Population pop;
  pop.individuals.reserve(static_cast<std::size_t>(cfg.population_size));
  if (pretrained == nullptr || pretrained->empty()) {
    Tree base = make_leaf_tree(ds);
    base.feature_mask = mask;
    const Scores s = fitness(base, ds, cfg, cache);
    for (int i = 0; i < cfg.population_size; ++i) {
      pop.individuals.push_back({Tree(base), s});
    }
    return pop;
  }

  for (int i = 0; i < cfg.population_size; ++i) {
    const Tree& src = (*pretrained)[static_cast<std::size_t>(i) % pretrained->size()];
    if (src.dim != ds.dim) {
      throw ValidationError("pretrained tree expects " + std::to_string(src.dim) +
                            " features, dataset has " + std::to_string(ds.dim));
    }
    if (src.num_classes != ds.num_classes) {
      throw ValidationError("pretrained tree has " + std::to_string(src.num_classes) +
                            " classes, dataset has " + std::to_string(ds.num_classes));
    }
    std::vector<int> used;
    collect_split_features(*src.root, used);
    for (const int f : used) {
      if (!std::binary_search(mask.begin(), mask.end(), f)) {
        throw ValidationError("pretrained tree splits on feature " + std::to_string(f) +
                              " outside the feature mask");
      }
    }
    Tree t(src);
    t.feature_mask = mask;
    t = enforce_consistency(std::move(t), ds);
    const Scores s = fitness(t, ds, cfg, cache);
    pop.individuals.push_back({std::move(t), s});
  }
  return pop;
}

const Individual& select_roulette(const Population& pop, Rng& rng) {
  if (pop.individuals.empty()) throw ValidationError("population is empty");
  double total = 0.0;
  for (const Individual& ind : pop.individuals) total += ind.scores.fitness;
  if (total <= 0.0) {
    return pop.individuals[rng.uniform_index(pop.individuals.size())];
  }
  const double r = rng.uniform01() * total;
  double acc = 0.0;
  for (const Individual& ind : pop.individuals) {
    acc += ind.scores.fitness;
    if (r < acc) return ind;
  }
  return pop.individuals.back();
}

Tree crossover(const Tree& a, const Tree& b, const Dataset& ds, Rng& rng) {
  const int n_a = a.node_count();
  if (n_a <= 1) return Tree(a);  // no non-root node to replace
  const int idx_a = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n_a - 1)));
  const int idx_b =
      static_cast<int>(rng.uniform_index(static_cast<std::size_t>(b.node_count())));
  Tree child = with_subtree(a, idx_a, *b.node_at(idx_b));
  return enforce_consistency(std::move(child), ds);
}

Tree mutate_grow(const Tree& t, const Dataset& ds, const GaConfig& cfg,
                 FitnessCache& cache, Rng& rng) {
  const Node* n = t.root.get();
  int idx = 0, depth = 0;
  while (!n->is_leaf()) {
    if (descend_left(*n, cfg, t.num_classes, rng)) {
      idx += 1;
      n = n->left.get();
    } else {
      idx += 1 + subtree_size(*n->left);
      n = n->right.get();
    }
    ++depth;
  }
  return grow_at_leaf(t, *n, idx, depth, ds, cfg, cache);
}

Tree mutate_grow_or_prune(const Tree& t, const Dataset& ds, const GaConfig& cfg,
                          FitnessCache& cache, Rng& rng) {
  const Node* n = t.root.get();
  int idx = 0, depth = 0;
  while (!n->is_leaf()) {
    // Purer nodes are likelier prune targets: P(prune) = 1 - entropy.
    const double h = entropy(n->counts, t.num_classes);
    if (rng.uniform01() < 1.0 - h) {
      auto merged = make_leaf(n->counts, n->samples);
      return with_subtree(t, idx, *merged);
    }
    if (descend_left(*n, cfg, t.num_classes, rng)) {
      idx += 1;
      n = n->left.get();
    } else {
      idx += 1 + subtree_size(*n->left);
      n = n->right.get();
    }
    ++depth;
  }
  return grow_at_leaf(t, *n, idx, depth, ds, cfg, cache);
}

EvolveResult evolve(const Dataset& ds, const GaConfig& cfg,
                    std::vector<int> feature_mask) {
  check_config(cfg);
  check_dataset(ds);

  Rng rng(cfg.seed);
  FitnessCache cache;
  Population pop = generate_initial(cfg, ds, std::move(feature_mask), nullptr, &cache);

  EvolveResult result;
  {
    const Individual& b = pop.individuals[static_cast<std::size_t>(best_index(pop))];
    result.trace.push_back({0, b.scores.fitness, b.scores.acc, b.scores.st});
  }

  for (int gen = 1; gen <= cfg.max_iterations; ++gen) {
    const int elite = best_index(pop);
    std::vector<Individual> next;
    next.reserve(static_cast<std::size_t>(cfg.population_size));
    next.push_back(pop.individuals[static_cast<std::size_t>(elite)]);
    while (next.size() < static_cast<std::size_t>(cfg.population_size)) {
      const Individual& pa = select_roulette(pop, rng);
      const Individual& pb = select_roulette(pop, rng);
      Tree child = crossover(pa.tree, pb.tree, ds, rng);
      if (cfg.max_depth) child = prune_to_depth(std::move(child), *cfg.max_depth);
      if (rng.uniform01() < cfg.mutation_probability) {
        child = cfg.mutation_strategy == MutationStrategy::Grow
                    ? mutate_grow(child, ds, cfg, cache, rng)
                    : mutate_grow_or_prune(child, ds, cfg, cache, rng);
      }
      const Scores s = fitness(child, ds, cfg, &cache);
      next.push_back({std::move(child), s});
    }
    pop.individuals = std::move(next);
    pop.generation = gen;
    const Individual& b = pop.individuals[static_cast<std::size_t>(best_index(pop))];
    result.trace.push_back({gen, b.scores.fitness, b.scores.acc, b.scores.st});
  }

  // Elitism makes the final best the best ever seen.
  Individual& b = pop.individuals[static_cast<std::size_t>(best_index(pop))];
  result.best = std::move(b.tree);
  result.scores = b.scores;
  return result;
}

}  // namespace grove
