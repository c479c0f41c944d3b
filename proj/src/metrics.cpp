#include "grove/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grove/error.hpp"

namespace grove {

namespace {

std::int64_t histogram_total(std::span<const std::int64_t> counts) {
  std::int64_t total = 0;
  for (std::int64_t c : counts) {
    if (c < 0) throw ValidationError("negative histogram count");
    total += c;
  }
  return total;
}

void check_nonempty(const Dataset& ds) {
  if (ds.size() == 0) throw ValidationError("dataset is empty");
}

}  // namespace

double entropy(std::span<const std::int64_t> counts, int num_classes) {
  const std::int64_t total = histogram_total(counts);
  if (total == 0) throw ValidationError("entropy of an all-zero histogram");
  double h = 0.0;
  for (std::int64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  h /= std::log(static_cast<double>(std::max(num_classes, 2)));
  return std::clamp(h, 0.0, 1.0);
}

double gini(std::span<const std::int64_t> counts, int /*num_classes*/) {
  const std::int64_t total = histogram_total(counts);
  if (total == 0) throw ValidationError("gini of an all-zero histogram");
  double sum_sq = 0.0;
  for (std::int64_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return std::clamp(1.0 - sum_sq, 0.0, 1.0);
}

double split_purity(PurityIndex index, std::span<const std::int64_t> left,
                    std::span<const std::int64_t> right, int num_classes) {
  const std::int64_t nl = histogram_total(left);
  const std::int64_t nr = histogram_total(right);
  if (nl + nr == 0) throw ValidationError("split purity of two empty children");
  const auto eval = [&](std::span<const std::int64_t> c) {
    return index == PurityIndex::Entropy ? entropy(c, num_classes)
                                         : gini(c, num_classes);
  };
  const double wl = nl > 0 ? static_cast<double>(nl) * eval(left) : 0.0;
  const double wr = nr > 0 ? static_cast<double>(nr) * eval(right) : 0.0;
  return (wl + wr) / static_cast<double>(nl + nr);
}

double objective(const Weights& w, double acc, double st) {
  return w.w_acc * acc + w.w_stab * st;
}

double accuracy(std::span<const Tree> model, const Dataset& ds) {
  check_nonempty(ds);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (predict_vote(model, ds.row(i)) == label_singleton(ds.labels[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

StabilityStats stability_robustness(std::span<const Tree> model, const Dataset& ds,
                                    const Perturbation& p) {
  check_nonempty(ds);
  StabilityJudge judge(model);
  std::size_t stable = 0, robust = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    switch (judge.judge(ds.row(i), ds.labels[i], p)) {
      case Verdict::StableCorrect:
        ++stable;
        ++robust;
        break;
      case Verdict::StableIncorrect:
        ++stable;
        break;
      case Verdict::Unstable:
        break;
    }
  }
  const double n = static_cast<double>(ds.size());
  return {static_cast<double>(stable) / n, static_cast<double>(robust) / n};
}

std::int64_t total_leaves(std::span<const Tree> model) {
  std::int64_t leaves = 0;
  for (const Tree& t : model) leaves += t.leaf_count();
  return leaves;
}

double efficiency(double metric_value, std::span<const Tree> model) {
  const std::int64_t leaves = total_leaves(model);
  if (leaves < 1) throw ValidationError("model has no leaves");
  return metric_value / static_cast<double>(leaves);
}

MetricsReport evaluate(std::span<const Tree> model, const Dataset& ds,
                       const Weights& w, const Perturbation& p) {
  MetricsReport r;
  r.accuracy = accuracy(model, ds);
  const StabilityStats st = stability_robustness(model, ds, p);
  r.stability = st.stability;
  r.robustness = st.robustness;
  r.objective = objective(w, r.accuracy, r.stability);
  r.leaves = total_leaves(model);
  r.eff_acc = efficiency(r.accuracy, model);
  r.eff_st = efficiency(r.stability, model);
  r.eff_rob = efficiency(r.robustness, model);
  return r;
}

}  // namespace grove
