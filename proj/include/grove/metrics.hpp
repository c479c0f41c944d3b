#pragma once

#include <cstdint>
#include <span>

#include "grove/dataset.hpp"
#include "grove/tree.hpp"
#include "grove/verify.hpp"

namespace grove {

// Normalized objective weights: w_acc + w_stab = 1.
struct Weights {
  double w_acc = 0.9;
  double w_stab = 0.1;
};

enum class PurityIndex { Entropy, Gini };

// Entropy with logarithms in base num_classes, so the result lies in
// [0,1]; zero-probability terms contribute 0. Single-class histograms are
// pure and score 0 (the base is floored at 2 to keep the scaling defined).
double entropy(std::span<const std::int64_t> counts, int num_classes);

// 1 - sum p_i^2, in [0, 1 - 1/num_classes].
double gini(std::span<const std::int64_t> counts, int num_classes);

// Sample-weighted average of the chosen index over the two children.
double split_purity(PurityIndex index, std::span<const std::int64_t> left,
                    std::span<const std::int64_t> right, int num_classes);

// w_acc*acc + w_stab*st.
double objective(const Weights& w, double acc, double st);

// Fraction of samples whose predicted set is exactly the true singleton;
// tied predictions never count.
double accuracy(std::span<const Tree> model, const Dataset& ds);

struct StabilityStats {
  double stability = 0.0;
  double robustness = 0.0;
};

// Exact per-sample certification over the whole set: stability counts
// samples whose entire perturbation box votes one label-set, robustness
// additionally requires that set to be the true singleton.
StabilityStats stability_robustness(std::span<const Tree> model, const Dataset& ds,
                                    const Perturbation& p);

std::int64_t total_leaves(std::span<const Tree> model);

// metric_value / total leaf count. The value is used as given; reports
// that quote percentage-scaled metrics pass values in [0,100].
double efficiency(double metric_value, std::span<const Tree> model);

struct MetricsReport {
  double accuracy = 0.0;
  double stability = 0.0;
  double robustness = 0.0;
  double objective = 0.0;
  std::int64_t leaves = 0;
  double eff_acc = 0.0;
  double eff_st = 0.0;
  double eff_rob = 0.0;
};

MetricsReport evaluate(std::span<const Tree> model, const Dataset& ds,
                       const Weights& w, const Perturbation& p);

}  // namespace grove
