#include "grove/tree.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "grove/detail/tree_json.hpp"
#include "grove/error.hpp"
#include "grove/interval.hpp"

namespace grove {

namespace {

void check_dim(const Tree& t, std::size_t got) {
  if (static_cast<std::size_t>(t.dim) != got) {
    throw ValidationError("input has " + std::to_string(got) +
                          " features, model expects " + std::to_string(t.dim));
  }
}

int count_leaves(const Node* n) {
  if (n->is_leaf()) return 1;
  return count_leaves(n->left.get()) + count_leaves(n->right.get());
}

int node_depth(const Node* n) {
  if (n->is_leaf()) return 0;
  return 1 + std::max(node_depth(n->left.get()), node_depth(n->right.get()));
}

// Preorder: the node itself, then the left subtree, then the right.
const Node* find_preorder(const Node* n, int& index) {
  if (index == 0) return n;
  --index;
  if (n->is_leaf()) return nullptr;
  if (const Node* hit = find_preorder(n->left.get(), index)) return hit;
  return find_preorder(n->right.get(), index);
}

std::unique_ptr<Node> clone_replacing(const Node& n, int& index, const Node& subtree) {
  if (index == 0) {
    --index;
    return clone_node(subtree);
  }
  --index;
  auto out = std::make_unique<Node>();
  out->split = n.split;
  out->counts = n.counts;
  out->samples = n.samples;
  if (!n.is_leaf()) {
    out->left = clone_replacing(*n.left, index, subtree);
    out->right = clone_replacing(*n.right, index, subtree);
  }
  return out;
}

void clear_routing(Node& n, int num_classes) {
  n.counts.assign(num_classes, 0);
  n.samples.clear();
  if (!n.is_leaf()) {
    clear_routing(*n.left, num_classes);
    clear_routing(*n.right, num_classes);
  }
}

void route_in_place(Tree& t, const Dataset& ds) {
  check_dim(t, static_cast<std::size_t>(ds.dim));
  if (t.num_classes != ds.num_classes) {
    throw ValidationError("dataset has " + std::to_string(ds.num_classes) +
                          " classes, model expects " + std::to_string(t.num_classes));
  }
  clear_routing(*t.root, t.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto x = ds.row(i);
    Node* n = t.root.get();
    while (true) {
      n->samples.push_back(static_cast<std::int32_t>(i));
      n->counts[ds.labels[i]] += 1;
      if (n->is_leaf()) break;
      n = x[n->split->feature] <= n->split->threshold ? n->left.get() : n->right.get();
    }
  }
}

// Drops branches unreachable under the path constraints accumulated so
// far. A left branch is unreachable when no point of the path box
// satisfies x_i <= k, in which case the split is redundant and the right
// child takes the node's place (and symmetrically).
std::unique_ptr<Node> prune_infeasible(const Node& n, Box& box) {
  if (n.is_leaf()) return clone_node(n);
  const Split s = *n.split;
  const Interval saved = box[s.feature];
  const Interval left_iv = saved.refined_le(s.threshold);
  const Interval right_iv = saved.refined_gt(s.threshold);
  if (left_iv.empty()) return prune_infeasible(*n.right, box);
  if (right_iv.empty()) return prune_infeasible(*n.left, box);
  auto out = std::make_unique<Node>();
  out->split = s;
  out->counts = n.counts;
  out->samples = n.samples;
  box[s.feature] = left_iv;
  out->left = prune_infeasible(*n.left, box);
  box[s.feature] = right_iv;
  out->right = prune_infeasible(*n.right, box);
  box[s.feature] = saved;
  return out;
}

// Requires routed samples. Collapses each split with an empty side to its
// nonempty side; a node with routed samples always keeps at least one.
std::unique_ptr<Node> collapse_empty(std::unique_ptr<Node> n) {
  if (n->is_leaf()) return n;
  if (n->left->samples.empty()) return collapse_empty(std::move(n->right));
  if (n->right->samples.empty()) return collapse_empty(std::move(n->left));
  n->left = collapse_empty(std::move(n->left));
  n->right = collapse_empty(std::move(n->right));
  return n;
}

std::unique_ptr<Node> depth_prune(std::unique_ptr<Node> n, int budget) {
  if (n->is_leaf()) return n;
  if (budget == 0) {
    return make_leaf(std::move(n->counts), std::move(n->samples));
  }
  n->left = depth_prune(std::move(n->left), budget - 1);
  n->right = depth_prune(std::move(n->right), budget - 1);
  return n;
}

void key_rec(const Node& n, std::string& out) {
  if (n.is_leaf()) {
    out += 'L';
    return;
  }
  char buf[32];
  out += '(';
  auto res = std::to_chars(buf, buf + sizeof(buf), n.split->feature);
  out.append(buf, res.ptr);
  out += ':';
  res = std::to_chars(buf, buf + sizeof(buf),
                      std::bit_cast<std::uint64_t>(n.split->threshold), 16);
  out.append(buf, res.ptr);
  key_rec(*n.left, out);
  key_rec(*n.right, out);
  out += ')';
}

nlohmann::ordered_json node_to_json(const Node& n) {
  nlohmann::ordered_json j;
  if (n.is_leaf()) {
    j["leaf"] = {{"counts", n.counts}};
  } else {
    j["split"] = {{"feature", n.split->feature}, {"threshold", n.split->threshold}};
    j["left"] = node_to_json(*n.left);
    j["right"] = node_to_json(*n.right);
  }
  return j;
}

std::unique_ptr<Node> node_from_json(const nlohmann::ordered_json& j, const Tree& t,
                                     const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": node must be an object");
  if (j.contains("leaf")) {
    const auto& leaf = j.at("leaf");
    if (!leaf.is_object() || !leaf.contains("counts") || !leaf.at("counts").is_array()) {
      throw ValidationError(where + ".leaf: expected a counts array");
    }
    std::vector<std::int64_t> counts;
    std::int64_t total = 0;
    for (const auto& c : leaf.at("counts")) {
      if (!c.is_number_integer() || c.get<std::int64_t>() < 0) {
        throw ValidationError(where + ".leaf.counts: entries must be integers >= 0");
      }
      counts.push_back(c.get<std::int64_t>());
      total += counts.back();
    }
    if (static_cast<int>(counts.size()) != t.num_classes) {
      throw ValidationError(where + ".leaf.counts: expected " +
                            std::to_string(t.num_classes) + " entries, got " +
                            std::to_string(counts.size()));
    }
    if (total <= 0) {
      throw ValidationError(where + ".leaf.counts: leaf holds no samples");
    }
    return make_leaf(std::move(counts), {});
  }
  if (!j.contains("split") || !j.contains("left") || !j.contains("right")) {
    throw ValidationError(where + ": node needs either 'leaf' or 'split'+'left'+'right'");
  }
  const auto& sp = j.at("split");
  if (!sp.is_object() || !sp.contains("feature") || !sp.contains("threshold") ||
      !sp.at("feature").is_number_integer() || !sp.at("threshold").is_number()) {
    throw ValidationError(where + ".split: expected integer 'feature' and numeric 'threshold'");
  }
  auto out = std::make_unique<Node>();
  Split s;
  s.feature = sp.at("feature").get<int>();
  s.threshold = sp.at("threshold").get<double>();
  if (s.feature < 0 || s.feature >= t.dim) {
    throw ValidationError(where + ".split.feature: " + std::to_string(s.feature) +
                          " is outside [0, " + std::to_string(t.dim) + ")");
  }
  if (!std::binary_search(t.feature_mask.begin(), t.feature_mask.end(), s.feature)) {
    throw ValidationError(where + ".split.feature: " + std::to_string(s.feature) +
                          " is not in the feature mask");
  }
  if (!std::isfinite(s.threshold)) {
    throw ValidationError(where + ".split.threshold: must be finite");
  }
  out->split = s;
  out->left = node_from_json(j.at("left"), t, where + ".left");
  out->right = node_from_json(j.at("right"), t, where + ".right");
  out->counts.assign(t.num_classes, 0);
  for (int c = 0; c < t.num_classes; ++c) {
    out->counts[c] = out->left->counts[c] + out->right->counts[c];
  }
  return out;
}

}  // namespace

std::unique_ptr<Node> clone_node(const Node& n) {
  auto out = std::make_unique<Node>();
  out->split = n.split;
  out->counts = n.counts;
  out->samples = n.samples;
  if (!n.is_leaf()) {
    out->left = clone_node(*n.left);
    out->right = clone_node(*n.right);
  }
  return out;
}

std::unique_ptr<Node> make_leaf(std::vector<std::int64_t> counts,
                                std::vector<std::int32_t> samples) {
  auto out = std::make_unique<Node>();
  out->counts = std::move(counts);
  out->samples = std::move(samples);
  return out;
}

Tree::Tree(const Tree& other)
    : root(other.root ? clone_node(*other.root) : nullptr),
      dim(other.dim),
      num_classes(other.num_classes),
      feature_mask(other.feature_mask) {}

Tree& Tree::operator=(const Tree& other) {
  if (this != &other) {
    root = other.root ? clone_node(*other.root) : nullptr;
    dim = other.dim;
    num_classes = other.num_classes;
    feature_mask = other.feature_mask;
  }
  return *this;
}

int subtree_size(const Node& n) {
  if (n.is_leaf()) return 1;
  return 1 + subtree_size(*n.left) + subtree_size(*n.right);
}

int Tree::node_count() const { return root ? subtree_size(*root) : 0; }

int Tree::leaf_count() const { return root ? count_leaves(root.get()) : 0; }

int Tree::depth() const { return root ? node_depth(root.get()) : 0; }

const Node* Tree::node_at(int preorder_index) const {
  if (!root || preorder_index < 0) return nullptr;
  int idx = preorder_index;
  return find_preorder(root.get(), idx);
}

Tree make_leaf_tree(const Dataset& ds) {
  if (ds.size() == 0) throw ValidationError("dataset is empty");
  Tree t;
  t.dim = ds.dim;
  t.num_classes = ds.num_classes;
  t.feature_mask.resize(ds.dim);
  for (int f = 0; f < ds.dim; ++f) t.feature_mask[f] = f;
  std::vector<std::int64_t> counts(ds.num_classes, 0);
  std::vector<std::int32_t> samples(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    counts[ds.labels[i]] += 1;
    samples[i] = static_cast<std::int32_t>(i);
  }
  t.root = make_leaf(std::move(counts), std::move(samples));
  return t;
}

LabelSet predict(const Tree& t, std::span<const double> x) {
  check_dim(t, x.size());
  const Node* n = t.root.get();
  while (!n->is_leaf()) {
    n = x[n->split->feature] <= n->split->threshold ? n->left.get() : n->right.get();
  }
  return argmax_set(n->counts);
}

LabelSet predict_vote(std::span<const Tree> model, std::span<const double> x) {
  if (model.size() == 1) return predict(model[0], x);
  std::vector<LabelSet> votes;
  votes.reserve(model.size());
  for (const Tree& t : model) votes.push_back(predict(t, x));
  return vote_majority(votes);
}

Tree route(Tree t, const Dataset& ds) {
  route_in_place(t, ds);
  return t;
}

Tree enforce_consistency(Tree t, const Dataset& ds) {
  Box box(t.dim);
  t.root = prune_infeasible(*t.root, box);
  route_in_place(t, ds);
  t.root = collapse_empty(std::move(t.root));
  return t;
}

Tree with_subtree(const Tree& base, int preorder_index, const Node& subtree) {
  const int total = base.node_count();
  if (preorder_index < 0 || preorder_index >= total) {
    throw ValidationError("node index " + std::to_string(preorder_index) +
                          " is outside [0, " + std::to_string(total) + ")");
  }
  Tree out;
  out.dim = base.dim;
  out.num_classes = base.num_classes;
  out.feature_mask = base.feature_mask;
  int idx = preorder_index;
  out.root = clone_replacing(*base.root, idx, subtree);
  return out;
}

Tree prune_to_depth(Tree t, int max_depth) {
  if (max_depth < 0) throw ValidationError("max depth must be >= 0");
  t.root = depth_prune(std::move(t.root), max_depth);
  return t;
}

std::string structure_key(const Tree& t) {
  std::string out;
  out.reserve(static_cast<std::size_t>(t.node_count()) * 8);
  key_rec(*t.root, out);
  return out;
}

bool same_structure(const Tree& a, const Tree& b) {
  return a.dim == b.dim && a.num_classes == b.num_classes &&
         structure_key(a) == structure_key(b);
}

std::string serialize(const Tree& t) {
  return detail::tree_to_json(t).dump(2) + "\n";
}

Tree deserialize_tree(const std::string& doc) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(doc);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("model document is not valid JSON: ") + e.what());
  }
  return detail::tree_from_json(j, "model");
}

namespace detail {

nlohmann::ordered_json tree_to_json(const Tree& t) {
  nlohmann::ordered_json j;
  j["format"] = "grove-tree";
  j["version"] = 1;
  j["dim"] = t.dim;
  j["num_classes"] = t.num_classes;
  j["feature_mask"] = t.feature_mask;
  j["root"] = node_to_json(*t.root);
  return j;
}

Tree tree_from_json(const nlohmann::ordered_json& doc, const std::string& where) {
  if (!doc.is_object()) throw ValidationError(where + ": expected an object");
  if (!doc.contains("format") || doc.at("format") != "grove-tree") {
    throw ValidationError(where + ": format must be \"grove-tree\"");
  }
  if (!doc.contains("version") || doc.at("version") != 1) {
    throw ValidationError(where + ": unsupported document version");
  }
  Tree t;
  if (!doc.contains("dim") || !doc.at("dim").is_number_integer() ||
      doc.at("dim").get<int>() < 1) {
    throw ValidationError(where + ".dim: expected a positive integer");
  }
  t.dim = doc.at("dim").get<int>();
  if (!doc.contains("num_classes") || !doc.at("num_classes").is_number_integer()) {
    throw ValidationError(where + ".num_classes: expected an integer");
  }
  t.num_classes = doc.at("num_classes").get<int>();
  if (t.num_classes < 1 || t.num_classes > kMaxClasses) {
    throw ValidationError(where + ".num_classes: must be in [1, " +
                          std::to_string(kMaxClasses) + "]");
  }
  if (!doc.contains("feature_mask") || !doc.at("feature_mask").is_array()) {
    throw ValidationError(where + ".feature_mask: expected an array");
  }
  for (const auto& f : doc.at("feature_mask")) {
    if (!f.is_number_integer()) {
      throw ValidationError(where + ".feature_mask: entries must be integers");
    }
    const int v = f.get<int>();
    if (v < 0 || v >= t.dim) {
      throw ValidationError(where + ".feature_mask: feature " + std::to_string(v) +
                            " is outside [0, " + std::to_string(t.dim) + ")");
    }
    t.feature_mask.push_back(v);
  }
  if (!std::is_sorted(t.feature_mask.begin(), t.feature_mask.end()) ||
      std::adjacent_find(t.feature_mask.begin(), t.feature_mask.end()) !=
          t.feature_mask.end()) {
    throw ValidationError(where + ".feature_mask: must be sorted and distinct");
  }
  if (t.feature_mask.empty()) {
    throw ValidationError(where + ".feature_mask: must not be empty");
  }
  if (!doc.contains("root")) throw ValidationError(where + ": missing 'root'");
  t.root = node_from_json(doc.at("root"), t, where + ".root");
  return t;
}

}  // namespace detail

}  // namespace grove
