#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grove/dataset.hpp"
#include "grove/labelset.hpp"

namespace grove {

struct Split {
  int feature = 0;
  double threshold = 0.0;  // left branch: x[feature] <= threshold, right: >
};

struct Node {
  std::optional<Split> split;         // empty = leaf
  std::unique_ptr<Node> left, right;  // both set iff split is set
  std::vector<std::int64_t> counts;   // per-class histogram of routed samples
  std::vector<std::int32_t> samples;  // training rows routed through this node

  bool is_leaf() const { return !split.has_value(); }
};

// Value-semantic CART tree. Editing operations build new trees; an
// existing tree is never mutated in place, so trees can be shared across
// threads freely.
class Tree {
 public:
  Tree() = default;
  Tree(const Tree& other);
  Tree& operator=(const Tree& other);
  Tree(Tree&&) noexcept = default;
  Tree& operator=(Tree&&) noexcept = default;

  std::unique_ptr<Node> root;
  int dim = 0;
  int num_classes = 0;
  std::vector<int> feature_mask;  // sorted, distinct; splits may only use these

  int node_count() const;
  int leaf_count() const;
  int depth() const;  // 0 for a single leaf
  const Node* node_at(int preorder_index) const;
};

std::unique_ptr<Node> clone_node(const Node& n);
std::unique_ptr<Node> make_leaf(std::vector<std::int64_t> counts,
                                std::vector<std::int32_t> samples);

// Node count of the subtree rooted at n; preorder index arithmetic:
// left child of index i is i+1, right child is i+1+subtree_size(left).
int subtree_size(const Node& n);

// Single leaf holding every sample of the dataset; feature_mask covers
// all features.
Tree make_leaf_tree(const Dataset& ds);

// Labels attaining the maximal count in the leaf x is routed to.
LabelSet predict(const Tree& t, std::span<const double> x);

// Majority vote over the trees' predicted sets; a forest of one tree is
// exactly that tree's prediction.
LabelSet predict_vote(std::span<const Tree> model, std::span<const double> x);

// Recomputes counts and samples at every node by sending each row down
// its unique path. Structure is unchanged.
Tree route(Tree t, const Dataset& ds);

// Restores the tree invariants after a structural edit: removes branches
// whose accumulated path constraints are unsatisfiable, re-routes the
// dataset, and collapses each split with an empty side to its nonempty
// side. Idempotent; never increases the leaf count.
Tree enforce_consistency(Tree t, const Dataset& ds);

// Copy of `base` with the node at `preorder_index` replaced by a copy of
// `subtree`. Ancestor counts are left as they were; callers that change
// the routed sample set must re-route.
Tree with_subtree(const Tree& base, int preorder_index, const Node& subtree);

// Merges every internal node at depth `max_depth` into a leaf. Requires
// routed counts/samples at internal nodes.
Tree prune_to_depth(Tree t, int max_depth);

// Canonical structural identity: split features and exact threshold bit
// patterns in preorder. Trees routed on the same dataset have identical
// counts whenever their keys match.
std::string structure_key(const Tree& t);

bool same_structure(const Tree& a, const Tree& b);

// Versioned JSON document. Thresholds use shortest round-trip decimals,
// so serialize/deserialize is bit-exact; leaf counts and the feature mask
// round-trip, internal counts are recomputed, routed samples are not
// stored.
std::string serialize(const Tree& t);
Tree deserialize_tree(const std::string& doc);

}  // namespace grove
