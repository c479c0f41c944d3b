#include "grove/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

#include "grove/dataset.hpp"
#include "grove/error.hpp"

namespace grove {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& msg) {
  throw ValidationError(source + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& source, int line, const std::string& key,
                    const std::string& value) {
  double v = 0.0;
  const char* end = value.data() + value.size();
  const auto res = std::from_chars(value.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    fail(source, line, key + ": expected a finite number, got '" + value + "'");
  }
  return v;
}

long long parse_int(const std::string& source, int line, const std::string& key,
                    const std::string& value) {
  long long v = 0;
  const char* end = value.data() + value.size();
  const auto res = std::from_chars(value.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    fail(source, line, key + ": expected an integer, got '" + value + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& source, int line, const std::string& key,
                        const std::string& value) {
  std::uint64_t v = 0;
  const char* end = value.data() + value.size();
  const auto res = std::from_chars(value.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    fail(source, line, key + ": expected an unsigned integer, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& source, int line, const std::string& key,
                const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  fail(source, line, key + ": expected 'true' or 'false', got '" + value + "'");
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::set<std::string> seen;
  bool saw_w_acc = false, saw_w_stab = false;
  double w_acc = 0.0, w_stab = 0.0;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string stripped = trim(raw);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      fail(source, line, "expected key=value, got '" + stripped + "'");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) fail(source, line, "empty key");
    if (value.empty()) fail(source, line, key + ": empty value");
    if (!seen.insert(key).second) fail(source, line, "duplicate key '" + key + "'");

    if (key == "population_size") {
      const long long v = parse_int(source, line, key, value);
      if (v < 2 || v > 1'000'000) fail(source, line, "population_size must be in [2, 1000000]");
      cfg.ga.population_size = static_cast<int>(v);
    } else if (key == "max_iterations") {
      const long long v = parse_int(source, line, key, value);
      if (v < 0 || v > 10'000'000) fail(source, line, "max_iterations must be in [0, 10000000]");
      cfg.ga.max_iterations = static_cast<int>(v);
    } else if (key == "mutation_probability") {
      const double v = parse_double(source, line, key, value);
      if (!(v >= 0.0 && v <= 1.0)) fail(source, line, "mutation_probability must lie in [0, 1]");
      cfg.ga.mutation_probability = v;
    } else if (key == "mutation_strategy") {
      if (value == "grow") {
        cfg.ga.mutation_strategy = MutationStrategy::Grow;
      } else if (value == "grow-or-prune") {
        cfg.ga.mutation_strategy = MutationStrategy::GrowOrPrune;
      } else {
        fail(source, line, "mutation_strategy must be 'grow' or 'grow-or-prune'");
      }
    } else if (key == "aggressiveness") {
      const long long v = parse_int(source, line, key, value);
      if (v < 1 || v > 1'000'000) fail(source, line, "aggressiveness must be in [1, 1000000]");
      cfg.ga.aggressiveness = static_cast<int>(v);
    } else if (key == "w_acc") {
      const double v = parse_double(source, line, key, value);
      if (!(v >= 0.0 && v <= 1.0)) fail(source, line, "w_acc must lie in [0, 1]");
      w_acc = v;
      saw_w_acc = true;
    } else if (key == "w_stab") {
      const double v = parse_double(source, line, key, value);
      if (!(v >= 0.0 && v <= 1.0)) fail(source, line, "w_stab must lie in [0, 1]");
      w_stab = v;
      saw_w_stab = true;
    } else if (key == "epsilon") {
      const double v = parse_double(source, line, key, value);
      if (!(v >= 0.0)) fail(source, line, "epsilon must be >= 0");
      cfg.ga.perturbation.epsilon = v;
      cfg.epsilon_set = true;
    } else if (key == "clamp") {
      cfg.clamp = parse_bool(source, line, key, value);
    } else if (key == "purity") {
      if (value == "entropy") {
        cfg.ga.purity = PurityIndex::Entropy;
      } else if (value == "gini") {
        cfg.ga.purity = PurityIndex::Gini;
      } else {
        fail(source, line, "purity must be 'entropy' or 'gini'");
      }
    } else if (key == "seed") {
      cfg.ga.seed = parse_u64(source, line, key, value);
    } else if (key == "max_depth") {
      const long long v = parse_int(source, line, key, value);
      if (v < 0 || v > 1'000'000) fail(source, line, "max_depth must be in [0, 1000000]");
      cfg.ga.max_depth = static_cast<int>(v);
    } else if (key == "entropy_smoothing") {
      const double v = parse_double(source, line, key, value);
      if (!(v > 0.0)) fail(source, line, "entropy_smoothing must be > 0");
      cfg.ga.entropy_smoothing = v;
    } else if (key == "n_trees") {
      const long long v = parse_int(source, line, key, value);
      if (v < 1 || v > 100'000) fail(source, line, "n_trees must be in [1, 100000]");
      cfg.n_trees = static_cast<int>(v);
    } else if (key == "feature_budget") {
      const long long v = parse_int(source, line, key, value);
      if (v < 0 || v > 1'000'000) fail(source, line, "feature_budget must be in [0, 1000000]");
      cfg.feature_budget = static_cast<int>(v);
    } else if (key == "trainer") {
      if (value != "genetic" && value != "greedy") {
        fail(source, line, "trainer must be 'genetic' or 'greedy'");
      }
      cfg.trainer = value;
    } else {
      fail(source, line, "unknown key '" + key + "'");
    }
  }

  if (saw_w_acc && saw_w_stab) {
    if (std::abs(w_acc + w_stab - 1.0) > 1e-9) {
      throw ValidationError(source + ": w_acc and w_stab must sum to 1");
    }
    cfg.ga.weights = {w_acc, w_stab};
  } else if (saw_w_acc) {
    cfg.ga.weights = {w_acc, 1.0 - w_acc};
  } else if (saw_w_stab) {
    cfg.ga.weights = {1.0 - w_stab, w_stab};
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("cannot read config file: " + path);
  return parse_config_text(buf.str(), path);
}

std::string canonical_config(const RunConfig& cfg) {
  std::string out;
  const auto add = [&out](const std::string& key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  add("trainer", cfg.trainer);
  add("n_trees", std::to_string(cfg.n_trees));
  add("feature_budget", std::to_string(cfg.feature_budget));
  add("population_size", std::to_string(cfg.ga.population_size));
  add("max_iterations", std::to_string(cfg.ga.max_iterations));
  add("mutation_probability", format_double(cfg.ga.mutation_probability));
  add("mutation_strategy",
      cfg.ga.mutation_strategy == MutationStrategy::Grow ? "grow" : "grow-or-prune");
  add("aggressiveness", std::to_string(cfg.ga.aggressiveness));
  add("w_acc", format_double(cfg.ga.weights.w_acc));
  add("w_stab", format_double(cfg.ga.weights.w_stab));
  add("epsilon", cfg.epsilon_set ? format_double(cfg.ga.perturbation.epsilon) : "unset");
  add("clamp", cfg.clamp ? "true" : "false");
  add("purity", cfg.ga.purity == PurityIndex::Entropy ? "entropy" : "gini");
  add("seed", std::to_string(cfg.ga.seed));
  add("max_depth", cfg.ga.max_depth ? std::to_string(*cfg.ga.max_depth) : "none");
  add("entropy_smoothing", format_double(cfg.ga.entropy_smoothing));
  return out;
}

std::string config_digest(const RunConfig& cfg) {
  const std::string canon = canonical_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace grove
