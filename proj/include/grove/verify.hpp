#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "grove/interval.hpp"
#include "grove/labelset.hpp"
#include "grove/tree.hpp"

namespace grove {

// Axis-aligned perturbation region: the l-infinity ball of radius epsilon
// around a sample, optionally clamped to declared feature ranges.
struct Perturbation {
  double epsilon = 0.0;
  std::optional<std::vector<std::pair<double, double>>> clamp;
};

Box box_of(std::span<const double> x, const Perturbation& p);

struct Outcome {
  LabelSet labels;
  Box witness;  // nonempty sub-box of the query; every point of it votes `labels`
};

struct ReachabilityResult {
  std::vector<Outcome> outcomes;  // distinct label-sets in discovery order
  bool truncated = false;         // an outcome limit stopped the search early
};

struct LeafReach {
  int leaf_index;  // preorder index within the tree
  LabelSet labels;
  Box witness;
};

// Exact set of leaves some point of B reaches, each with the refined box
// that reaches it.
std::vector<LeafReach> reachable_leaves(const Tree& t, const Box& box);

// Exact outcome set {vote(model, x) : x in box}, computed by joint
// depth-first refinement of a shared box across all trees. Every branch
// kept is nonempty, so each witness certifies its outcome (completeness)
// and no refinement is ever dropped (soundness). max_outcomes > 0 stops
// the search once that many distinct outcomes exist; stability queries
// need only two.
ReachabilityResult reachable_outcomes(std::span<const Tree> model, const Box& box,
                                      int max_outcomes = 0);

enum class Verdict { StableCorrect, StableIncorrect, Unstable };

struct StabilityCheck {
  Verdict verdict = Verdict::Unstable;
  LabelSet outcome = 0;  // the single outcome when stable
  // Two points of the region with different voted outputs; set iff unstable.
  std::optional<std::pair<std::vector<double>, std::vector<double>>> counterexample;
};

// Verdict for one sample: stable iff every point of the perturbation box
// votes the same label-set, stable-correct iff that set is exactly {label}.
StabilityCheck check_stable(std::span<const Tree> model, std::span<const double> x,
                            int label, const Perturbation& p);

// Reusable stability query engine; avoids per-sample allocations in
// training loops. Not thread-safe; use one instance per thread.
class StabilityJudge {
 public:
  explicit StabilityJudge(std::span<const Tree> model);

  // Like check_stable but without counterexample extraction.
  Verdict judge(std::span<const double> x, int label, const Perturbation& p);

 private:
  std::span<const Tree> model_;
  Box box_;
  std::vector<const Node*> pos_;
  std::vector<std::pair<std::size_t, const Node*>> undo_;
  std::vector<LabelSet> votes_;
  LabelSet first_ = 0;
  int found_ = 0;

  bool descend();
};

}  // namespace grove
