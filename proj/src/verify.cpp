#include "grove/verify.hpp"

#include <cmath>
#include <string>

#include "grove/error.hpp"

namespace grove {

namespace {

void check_query(std::span<const Tree> model, const Box& box) {
  if (model.empty()) throw ValidationError("model has no trees");
  for (const Tree& t : model) {
    if (static_cast<std::size_t>(t.dim) != box.size()) {
      throw ValidationError("box has " + std::to_string(box.size()) +
                            " dimensions, model expects " + std::to_string(t.dim));
    }
  }
  if (box_empty(box)) throw ValidationError("query box is empty");
}

void leaves_rec(const Node* n, int idx, Box& box, std::vector<LeafReach>& out) {
  if (n->is_leaf()) {
    out.push_back({idx, argmax_set(n->counts), box});
    return;
  }
  const Split& s = *n->split;
  const Interval saved = box[s.feature];
  const Interval li = saved.refined_le(s.threshold);
  if (!li.empty()) {
    box[s.feature] = li;
    leaves_rec(n->left.get(), idx + 1, box, out);
  }
  const Interval ri = saved.refined_gt(s.threshold);
  if (!ri.empty()) {
    box[s.feature] = ri;
    leaves_rec(n->right.get(), idx + 1 + subtree_size(*n->left), box, out);
  }
  box[s.feature] = saved;
}

// Joint depth-first refinement of one shared box across all trees. Each
// tree first advances through every split the current box decides
// outright; the first undecided split then branches the box. Both
// branches are nonempty by construction, so every terminal region
// certifies its outcome.
class OutcomeSearch {
 public:
  OutcomeSearch(std::span<const Tree> model, const Box& box, int limit)
      : model_(model), box_(box), limit_(limit) {
    pos_.reserve(model.size());
    for (const Tree& t : model) pos_.push_back(t.root.get());
  }

  ReachabilityResult run() {
    descend();
    return std::move(result_);
  }

 private:
  std::span<const Tree> model_;
  Box box_;
  int limit_;
  std::vector<const Node*> pos_;
  std::vector<std::pair<std::size_t, const Node*>> undo_;
  std::vector<LabelSet> votes_;
  ReachabilityResult result_;

  bool limit_reached() const {
    return limit_ > 0 && static_cast<int>(result_.outcomes.size()) >= limit_;
  }

  // Returns false once the outcome limit says to stop.
  bool descend() {
    const std::size_t mark = undo_.size();
    const Node* branch = nullptr;
    std::size_t branch_tree = 0;
    for (std::size_t j = 0; j < pos_.size(); ++j) {
      const Node* n = pos_[j];
      while (!n->is_leaf()) {
        const Split& s = *n->split;
        const Interval& iv = box_[s.feature];
        if (iv.all_le(s.threshold)) {
          n = n->left.get();
        } else if (iv.all_gt(s.threshold)) {
          n = n->right.get();
        } else {
          break;
        }
      }
      if (n != pos_[j]) {
        undo_.emplace_back(j, pos_[j]);
        pos_[j] = n;
      }
      if (!n->is_leaf() && branch == nullptr) {
        branch = n;
        branch_tree = j;
      }
    }
    bool keep_going;
    if (branch == nullptr) {
      emit();
      keep_going = !limit_reached();
      if (!keep_going) result_.truncated = true;
    } else {
      const Split& s = *branch->split;
      const Interval saved = box_[s.feature];
      box_[s.feature] = saved.refined_le(s.threshold);
      pos_[branch_tree] = branch->left.get();
      keep_going = descend();
      if (keep_going) {
        box_[s.feature] = saved.refined_gt(s.threshold);
        pos_[branch_tree] = branch->right.get();
        keep_going = descend();
      }
      box_[s.feature] = saved;
      pos_[branch_tree] = branch;
    }
    while (undo_.size() > mark) {
      pos_[undo_.back().first] = undo_.back().second;
      undo_.pop_back();
    }
    return keep_going;
  }

  void emit() {
    LabelSet out;
    if (pos_.size() == 1) {
      out = argmax_set(pos_[0]->counts);
    } else {
      votes_.clear();
      for (const Node* n : pos_) votes_.push_back(argmax_set(n->counts));
      out = vote_majority(votes_);
    }
    for (const Outcome& o : result_.outcomes) {
      if (o.labels == out) return;
    }
    result_.outcomes.push_back({out, box_});
  }
};

}  // namespace

Box box_of(std::span<const double> x, const Perturbation& p) {
  if (!(p.epsilon >= 0.0) || !std::isfinite(p.epsilon)) {
    throw ValidationError("epsilon must be a finite value >= 0");
  }
  if (p.clamp && p.clamp->size() != x.size()) {
    throw ValidationError("clamp ranges cover " + std::to_string(p.clamp->size()) +
                          " features, input has " + std::to_string(x.size()));
  }
  Box box(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    Interval iv;
    iv.lo = x[j] - p.epsilon;
    iv.hi = x[j] + p.epsilon;
    iv.lo_open = iv.hi_open = false;
    if (p.clamp) {
      const auto [lo, hi] = (*p.clamp)[j];
      iv.lo = std::max(iv.lo, lo);
      iv.hi = std::min(iv.hi, hi);
      if (iv.lo > iv.hi) {
        throw ValidationError("feature " + std::to_string(j) +
                              ": sample lies outside its clamp range");
      }
    }
    box[j] = iv;
  }
  return box;
}

std::vector<LeafReach> reachable_leaves(const Tree& t, const Box& box) {
  check_query({&t, 1}, box);
  std::vector<LeafReach> out;
  Box scratch = box;
  leaves_rec(t.root.get(), 0, scratch, out);
  return out;
}

ReachabilityResult reachable_outcomes(std::span<const Tree> model, const Box& box,
                                      int max_outcomes) {
  check_query(model, box);
  return OutcomeSearch(model, box, max_outcomes).run();
}

StabilityCheck check_stable(std::span<const Tree> model, std::span<const double> x,
                            int label, const Perturbation& p) {
  const Box box = box_of(x, p);
  const ReachabilityResult r = reachable_outcomes(model, box, 2);
  StabilityCheck out;
  if (r.outcomes.size() >= 2) {
    out.verdict = Verdict::Unstable;
    out.outcome = r.outcomes[0].labels;
    out.counterexample = {box_center(r.outcomes[0].witness),
                          box_center(r.outcomes[1].witness)};
    return out;
  }
  out.outcome = r.outcomes[0].labels;
  out.verdict = out.outcome == label_singleton(label) ? Verdict::StableCorrect
                                                      : Verdict::StableIncorrect;
  return out;
}

StabilityJudge::StabilityJudge(std::span<const Tree> model) : model_(model) {
  if (model.empty()) throw ValidationError("model has no trees");
  pos_.resize(model.size());
  votes_.resize(model.size());
}

Verdict StabilityJudge::judge(std::span<const double> x, int label,
                              const Perturbation& p) {
  if (static_cast<std::size_t>(model_[0].dim) != x.size()) {
    throw ValidationError("input has " + std::to_string(x.size()) +
                          " features, model expects " + std::to_string(model_[0].dim));
  }
  if (!(p.epsilon >= 0.0) || !std::isfinite(p.epsilon)) {
    throw ValidationError("epsilon must be a finite value >= 0");
  }
  box_.resize(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    Interval iv;
    iv.lo = x[j] - p.epsilon;
    iv.hi = x[j] + p.epsilon;
    if (p.clamp) {
      const auto [lo, hi] = (*p.clamp)[j];
      iv.lo = std::max(iv.lo, lo);
      iv.hi = std::min(iv.hi, hi);
    }
    box_[j] = iv;
  }
  if (box_empty(box_)) throw ValidationError("perturbation box is empty");
  for (std::size_t j = 0; j < model_.size(); ++j) pos_[j] = model_[j].root.get();
  undo_.clear();
  found_ = 0;
  first_ = 0;
  descend();
  if (found_ >= 2) return Verdict::Unstable;
  return first_ == label_singleton(label) ? Verdict::StableCorrect
                                          : Verdict::StableIncorrect;
}

bool StabilityJudge::descend() {
  const std::size_t mark = undo_.size();
  const Node* branch = nullptr;
  std::size_t branch_tree = 0;
  for (std::size_t j = 0; j < pos_.size(); ++j) {
    const Node* n = pos_[j];
    while (!n->is_leaf()) {
      const Split& s = *n->split;
      const Interval& iv = box_[s.feature];
      if (iv.all_le(s.threshold)) {
        n = n->left.get();
      } else if (iv.all_gt(s.threshold)) {
        n = n->right.get();
      } else {
        break;
      }
    }
    if (n != pos_[j]) {
      undo_.emplace_back(j, pos_[j]);
      pos_[j] = n;
    }
    if (!n->is_leaf() && branch == nullptr) {
      branch = n;
      branch_tree = j;
    }
  }
  bool keep_going = true;
  if (branch == nullptr) {
    LabelSet out;
    if (pos_.size() == 1) {
      out = argmax_set(pos_[0]->counts);
    } else {
      for (std::size_t j = 0; j < pos_.size(); ++j) {
        votes_[j] = argmax_set(pos_[j]->counts);
      }
      out = vote_majority(votes_);
    }
    if (found_ == 0) {
      first_ = out;
      found_ = 1;
    } else if (out != first_) {
      found_ = 2;
      keep_going = false;
    }
  } else {
    const Split& s = *branch->split;
    const Interval saved = box_[s.feature];
    box_[s.feature] = saved.refined_le(s.threshold);
    pos_[branch_tree] = branch->left.get();
    keep_going = descend();
    if (keep_going) {
      box_[s.feature] = saved.refined_gt(s.threshold);
      pos_[branch_tree] = branch->right.get();
      keep_going = descend();
    }
    box_[s.feature] = saved;
    pos_[branch_tree] = branch;
  }
  while (undo_.size() > mark) {
    pos_[undo_.back().first] = undo_.back().second;
    undo_.pop_back();
  }
  return keep_going;
}

}  // namespace grove
