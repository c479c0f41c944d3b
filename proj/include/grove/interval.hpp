#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace grove {

// One coordinate of a box region. Endpoints may be infinite. The open
// flags make refinement at split thresholds exact: the right branch of
// (x_i <= k) constrains x_i to (k, hi], which needs an open lower
// endpoint whenever k equals a box boundary.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_open = false;
  bool hi_open = false;

  bool empty() const { return lo > hi || (lo == hi && (lo_open || hi_open)); }

  bool contains(double x) const {
    return (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
  }

  // Every point satisfies x <= k. Holds for hi == k regardless of the
  // open flag, since points never exceed hi.
  bool all_le(double k) const { return hi <= k; }

  // Every point satisfies x > k.
  bool all_gt(double k) const { return lo > k || (lo == k && lo_open); }

  // Intersection with (-inf, k].
  Interval refined_le(double k) const {
    Interval r = *this;
    if (k < r.hi) {
      r.hi = k;
      r.hi_open = false;
    }
    return r;
  }

  // Intersection with (k, +inf).
  Interval refined_gt(double k) const {
    Interval r = *this;
    if (k > r.lo) {
      r.lo = k;
      r.lo_open = true;
    } else if (k == r.lo) {
      r.lo_open = true;
    }
    return r;
  }

  // A point of the interval; the midpoint when both endpoints are finite,
  // the finite bound -/+ 1 when one-sided, 0 when unbounded. Precondition:
  // not empty.
  double representative() const {
    const double inf = std::numeric_limits<double>::infinity();
    if (lo == -inf && hi == inf) return 0.0;
    if (lo == -inf) return hi - 1.0;
    if (hi == inf) return lo + 1.0;
    const double mid = lo + (hi - lo) / 2.0;
    if (contains(mid)) return mid;
    if (!hi_open) return hi;
    if (!lo_open) return lo;
    return std::nextafter(lo, hi);
  }
};

using Box = std::vector<Interval>;

inline bool box_empty(const Box& b) {
  for (const Interval& iv : b) {
    if (iv.empty()) return true;
  }
  return false;
}

inline bool box_contains(const Box& b, std::span<const double> x) {
  if (b.size() != x.size()) return false;
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (!b[j].contains(x[j])) return false;
  }
  return true;
}

inline std::vector<double> box_center(const Box& b) {
  std::vector<double> p(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) p[j] = b[j].representative();
  return p;
}

}  // namespace grove
