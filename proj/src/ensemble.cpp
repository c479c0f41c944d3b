#include "grove/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <utility>

#include <json.hpp>

#include "grove/detail/tree_json.hpp"
#include "grove/error.hpp"
#include "grove/rng.hpp"

namespace grove {

namespace {

using nlohmann::ordered_json;

void check_nonempty(const Forest& f) {
  if (f.trees.empty()) throw ValidationError("forest has no trees");
}

}  // namespace

std::vector<int> sample_features(int dim, int count, std::uint64_t seed) {
  if (dim < 1) throw ValidationError("dimension must be at least 1");
  if (count < 1 || count > dim) {
    throw ValidationError("feature count " + std::to_string(count) +
                          " is outside [1, " + std::to_string(dim) + "]");
  }
  std::vector<int> pool(static_cast<std::size_t>(dim));
  std::iota(pool.begin(), pool.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first `count` slots end up a uniform sample.
  for (int i = 0; i < count; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) + rng.uniform_index(static_cast<std::size_t>(dim - i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(count));
  std::sort(pool.begin(), pool.end());
  return pool;
}

Forest train_forest(const Dataset& ds, const GaConfig& cfg, int n_trees,
                    int feature_budget, int threads,
                    std::vector<std::vector<TraceRow>>* traces) {
  if (n_trees < 1) throw ValidationError("n_trees must be at least 1");
  if (feature_budget < 0 || feature_budget > ds.dim) {
    throw ValidationError("feature_budget must lie in [0, " + std::to_string(ds.dim) + "]");
  }
  if (threads < 1) throw ValidationError("threads must be at least 1");

  const std::size_t n = static_cast<std::size_t>(n_trees);
  std::vector<std::uint64_t> seeds(n);
  std::vector<std::vector<int>> masks(n);
  for (std::size_t i = 0; i < n; ++i) {
    seeds[i] = n_trees == 1 ? cfg.seed : mix_seed(cfg.seed, i, 0);
    if (feature_budget > 0 && feature_budget < ds.dim) {
      masks[i] = sample_features(ds.dim, feature_budget, mix_seed(cfg.seed, i, 1));
    }
  }

  std::vector<Tree> trees(n);
  if (traces != nullptr) {
    traces->clear();
    traces->resize(n);
  }

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        GaConfig c = cfg;
        c.seed = seeds[i];
        EvolveResult r = evolve(ds, c, masks[i]);
        trees[i] = std::move(r.best);
        if (traces != nullptr) (*traces)[i] = std::move(r.trace);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int workers = std::min(threads, n_trees);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  Forest f;
  f.trees = std::move(trees);
  f.dim = ds.dim;
  f.num_classes = ds.num_classes;
  f.tree_seeds = std::move(seeds);
  return f;
}

LabelSet predict_forest(const Forest& f, std::span<const double> x) {
  check_nonempty(f);
  return predict_vote(f.trees, x);
}

std::string serialize_forest(const Forest& f) {
  check_nonempty(f);
  ordered_json doc;
  doc["format"] = "grove-forest";
  doc["version"] = 1;
  doc["dim"] = f.dim;
  doc["num_classes"] = f.num_classes;
  doc["voting"] = "majority";
  ordered_json arr = ordered_json::array();
  for (const Tree& t : f.trees) arr.push_back(detail::tree_to_json(t));
  doc["trees"] = std::move(arr);
  if (!f.tree_seeds.empty()) doc["tree_seeds"] = f.tree_seeds;
  return doc.dump(2) + "\n";
}

namespace {

Forest forest_from_json(const ordered_json& doc) {
  if (!doc.contains("version") || doc.at("version") != 1) {
    throw ValidationError("model: unsupported document version");
  }
  Forest f;
  if (!doc.contains("dim") || !doc.at("dim").is_number_integer() ||
      doc.at("dim").get<int>() < 1) {
    throw ValidationError("model.dim: expected a positive integer");
  }
  f.dim = doc.at("dim").get<int>();
  if (!doc.contains("num_classes") || !doc.at("num_classes").is_number_integer() ||
      doc.at("num_classes").get<int>() < 1) {
    throw ValidationError("model.num_classes: expected a positive integer");
  }
  f.num_classes = doc.at("num_classes").get<int>();
  if (doc.contains("voting") && doc.at("voting") != "majority") {
    throw ValidationError("model.voting: only \"majority\" is supported");
  }
  if (!doc.contains("trees") || !doc.at("trees").is_array() || doc.at("trees").empty()) {
    throw ValidationError("model.trees: expected a nonempty array");
  }
  std::size_t i = 0;
  for (const auto& tj : doc.at("trees")) {
    Tree t = detail::tree_from_json(tj, "trees[" + std::to_string(i) + "]");
    if (t.dim != f.dim || t.num_classes != f.num_classes) {
      throw ValidationError("trees[" + std::to_string(i) +
                            "]: dim or num_classes disagrees with the forest");
    }
    f.trees.push_back(std::move(t));
    ++i;
  }
  if (doc.contains("tree_seeds")) {
    const auto& arr = doc.at("tree_seeds");
    if (!arr.is_array() || arr.size() != f.trees.size()) {
      throw ValidationError("model.tree_seeds: expected one seed per tree");
    }
    for (const auto& s : arr) {
      if (!s.is_number_unsigned() && !s.is_number_integer()) {
        throw ValidationError("model.tree_seeds: entries must be integers");
      }
      f.tree_seeds.push_back(s.get<std::uint64_t>());
    }
  }
  return f;
}

ordered_json parse_model_json(const std::string& text) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("model document is not valid JSON: ") + e.what());
  }
}

}  // namespace

Forest deserialize_forest(const std::string& text) {
  const ordered_json doc = parse_model_json(text);
  if (!doc.is_object() || !doc.contains("format") || doc.at("format") != "grove-forest") {
    throw ValidationError("model: format must be \"grove-forest\"");
  }
  return forest_from_json(doc);
}

Forest load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("cannot read model file: " + path);
  const std::string text = buf.str();

  const ordered_json doc = parse_model_json(text);
  if (!doc.is_object() || !doc.contains("format") || !doc.at("format").is_string()) {
    throw ValidationError("model: missing document format");
  }
  const std::string format = doc.at("format").get<std::string>();
  if (format == "grove-tree") {
    Forest f;
    Tree t = detail::tree_from_json(doc, "model");
    f.dim = t.dim;
    f.num_classes = t.num_classes;
    f.trees.push_back(std::move(t));
    return f;
  }
  if (format == "grove-forest") return forest_from_json(doc);
  throw ValidationError("model: unknown format \"" + format + "\"");
}

void save_model(const std::string& path, const Forest& f) {
  check_nonempty(f);
  const std::string text =
      f.trees.size() == 1 ? serialize(f.trees[0]) : serialize_forest(f);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << text;
  out.flush();
  if (!out) throw IoError("cannot write model file: " + path);
}

}  // namespace grove
