#pragma once

#include <string>

#include "grove/genetic.hpp"

namespace grove {

// Everything a training run needs beyond the dataset. Defaults match the
// GaConfig defaults; epsilon has no default and must be given explicitly
// (config file or command line) before training.
struct RunConfig {
  GaConfig ga;
  int n_trees = 1;
  int feature_budget = 0;  // per-tree feature subset size; 0 = all features
  std::string trainer = "genetic";  // "genetic" or "greedy"
  bool clamp = false;  // intersect perturbation boxes with the feature ranges
  bool epsilon_set = false;
};

// Flat key=value format, one pair per line; '#' starts a comment. Unknown
// keys, duplicate keys, and out-of-range values are errors that name
// `source` and the line.
RunConfig parse_config_text(const std::string& text, const std::string& source);
RunConfig load_config(const std::string& path);

// Fixed key order and shortest round-trip numbers: equal strings exactly
// when the configs behave identically.
std::string canonical_config(const RunConfig& cfg);

// FNV-1a of the canonical form, 16 hex digits. Recorded with run outputs
// so results can be traced back to their exact configuration.
std::string config_digest(const RunConfig& cfg);

}  // namespace grove
