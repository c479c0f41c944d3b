#pragma once

#include <bit>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace grove {

// Set of class labels as a bitmask; label ids are bit positions. Caps the
// supported class count at 64, which covers every target dataset.
using LabelSet = std::uint64_t;

inline constexpr int kMaxClasses = 64;

inline LabelSet label_singleton(int id) { return LabelSet{1} << id; }

inline bool label_in(LabelSet s, int id) { return (s >> id) & 1; }

inline int label_count(LabelSet s) { return std::popcount(s); }

inline std::vector<int> label_list(LabelSet s) {
  std::vector<int> out;
  for (int id = 0; s != 0; ++id, s >>= 1) {
    if (s & 1) out.push_back(id);
  }
  return out;
}

// Labels attaining the maximal count. Nonempty whenever some count is
// positive; all-zero histograms have no majority and yield the empty set,
// which callers must rule out (every leaf holds at least one sample).
inline LabelSet argmax_set(std::span<const std::int64_t> counts) {
  std::int64_t best = 0;
  LabelSet out = 0;
  for (std::size_t id = 0; id < counts.size(); ++id) {
    if (counts[id] <= 0) continue;
    if (counts[id] > best) {
      best = counts[id];
      out = label_singleton(static_cast<int>(id));
    } else if (counts[id] == best) {
      out |= label_singleton(static_cast<int>(id));
    }
  }
  return out;
}

// Majority vote over per-tree predicted sets. A tree voting a k-way tie
// contributes 1/k to each tied label. Scores are integers over a common
// denominator (the lcm of the tie sizes, below 2^96 for sizes <= 64), so
// the comparison is exact and duplicating every tree never changes the
// winner set.
inline LabelSet vote_majority(std::span<const LabelSet> votes) {
  unsigned __int128 denom = 1;
  for (LabelSet v : votes) {
    const std::uint64_t k = static_cast<std::uint64_t>(std::popcount(v));
    if (k == 0) continue;
    const std::uint64_t g = std::gcd(k, static_cast<std::uint64_t>(denom % k));
    denom *= k / g;
  }
  unsigned __int128 score[kMaxClasses] = {};
  LabelSet seen = 0;
  for (LabelSet v : votes) {
    const int k = std::popcount(v);
    if (k == 0) continue;
    const unsigned __int128 w = denom / static_cast<std::uint64_t>(k);
    seen |= v;
    LabelSet rest = v;
    for (int id = 0; rest != 0; ++id, rest >>= 1) {
      if (rest & 1) score[id] += w;
    }
  }
  unsigned __int128 best = 0;
  LabelSet out = 0;
  LabelSet rest = seen;
  for (int id = 0; rest != 0; ++id, rest >>= 1) {
    if (!(rest & 1)) continue;
    if (score[id] > best) {
      best = score[id];
      out = label_singleton(id);
    } else if (score[id] == best) {
      out |= label_singleton(id);
    }
  }
  return out;
}

}  // namespace grove
