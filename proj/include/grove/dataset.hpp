#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace grove {

// Labeled numeric samples with a fixed, ordered class catalog. Immutable
// after construction; safe to share across threads.
struct Dataset {
  std::string name;
  int dim = 0;
  int num_classes = 0;
  std::string label_name = "label";
  std::vector<std::string> feature_names;                 // size dim
  std::vector<std::string> class_names;                   // id = position
  std::vector<double> values;                             // row-major, size()*dim
  std::vector<int> labels;                                // per-row class id
  std::vector<std::pair<double, double>> feature_ranges;  // observed min/max unless supplied

  std::size_t size() const { return labels.size(); }

  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
};

// Loads a UTF-8 comma-separated file. Label ids are assigned by first
// appearance in row order; feature order preserves column order. The
// label column is selected by header name, or by 0-based column index
// when the name does not match (always by index for headerless files).
Dataset load_csv(const std::string& path, const std::string& label_column = "label",
                 bool has_header = true);

void save_csv(const Dataset& ds, const std::string& path);

// Deterministic disjoint partition. The test part gets
// clamp(ceil(test_fraction*n), 1, n-1) samples; both parts keep the
// parent's row order, class catalog, and feature ranges.
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction,
                                  std::uint64_t seed);

// n uniform samples of [0,1]^2 labeled 1 ("inside") iff x1^2 + x2^2 < 0.5.
Dataset synth_circle(std::size_t n, std::uint64_t seed);

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace grove
