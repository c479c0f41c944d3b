#include "grove/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "grove/error.hpp"
#include "grove/labelset.hpp"
#include "grove/rng.hpp"

namespace grove {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string cell = line.substr(start, comma == std::string::npos
                                              ? std::string::npos
                                              : comma - start);
    // Trim ASCII whitespace; keeps hand-edited files usable.
    const auto is_space = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!cell.empty() && is_space(cell.front())) cell.erase(cell.begin());
    while (!cell.empty() && is_space(cell.back())) cell.pop_back();
    cells.push_back(std::move(cell));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no, std::size_t col_no) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end || cell.empty()) {
    throw ValidationError("line " + std::to_string(line_no) + ", column " +
                          std::to_string(col_no + 1) + ": cell '" + cell +
                          "' is not a number");
  }
  if (!std::isfinite(v)) {
    throw ValidationError("line " + std::to_string(line_no) + ", column " +
                          std::to_string(col_no + 1) + ": cell '" + cell +
                          "' is not finite");
  }
  return v;
}

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows,
                  const char* suffix) {
  Dataset out;
  out.name = ds.name + suffix;
  out.dim = ds.dim;
  out.num_classes = ds.num_classes;
  out.label_name = ds.label_name;
  out.feature_names = ds.feature_names;
  out.class_names = ds.class_names;
  out.feature_ranges = ds.feature_ranges;
  out.values.reserve(rows.size() * static_cast<std::size_t>(ds.dim));
  out.labels.reserve(rows.size());
  for (std::size_t i : rows) {
    const auto r = ds.row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Dataset load_csv(const std::string& path, const std::string& label_column,
                 bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  while (!lines.empty() && lines.back().find_first_not_of(" \t\r") == std::string::npos) {
    lines.pop_back();
  }
  if (lines.empty()) throw ValidationError(path + ": file is empty");

  std::size_t first_data = 0;
  std::vector<std::string> header;
  if (has_header) {
    header = split_line(lines[0]);
    first_data = 1;
  }
  if (first_data >= lines.size()) throw ValidationError(path + ": no data rows");

  const std::size_t arity = split_line(lines[first_data]).size();
  if (arity < 2) {
    throw ValidationError(path + ": rows need at least one feature and a label");
  }
  if (has_header && header.size() != arity) {
    throw ValidationError(path + ": header has " + std::to_string(header.size()) +
                          " columns but data rows have " + std::to_string(arity));
  }

  // Resolve the label column: header name first, then a 0-based index.
  std::size_t label_col = arity;
  if (has_header) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == label_column) {
        label_col = c;
        break;
      }
    }
  }
  if (label_col == arity) {
    std::size_t idx = 0;
    const auto res = std::from_chars(label_column.data(),
                                     label_column.data() + label_column.size(), idx);
    if (res.ec == std::errc() && res.ptr == label_column.data() + label_column.size() &&
        idx < arity) {
      label_col = idx;
    } else {
      throw ValidationError(path + ": label column '" + label_column + "' not found");
    }
  }

  Dataset ds;
  ds.name = std::filesystem::path(path).stem().string();
  ds.dim = static_cast<int>(arity - 1);
  if (has_header) {
    ds.label_name = header[label_col];
    for (std::size_t c = 0; c < arity; ++c) {
      if (c != label_col) ds.feature_names.push_back(header[c]);
    }
  } else {
    ds.label_name = "label";
    for (int f = 0; f < ds.dim; ++f) ds.feature_names.push_back("f" + std::to_string(f));
  }

  std::unordered_map<std::string, int> class_ids;
  for (std::size_t r = first_data; r < lines.size(); ++r) {
    const std::size_t line_no = r + 1;
    const auto cells = split_line(lines[r]);
    if (cells.size() != arity) {
      throw ValidationError(path + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(arity));
    }
    for (std::size_t c = 0; c < arity; ++c) {
      if (c == label_col) continue;
      ds.values.push_back(parse_cell(cells[c], line_no, c));
    }
    const std::string& cls = cells[label_col];
    auto [it, inserted] = class_ids.emplace(cls, static_cast<int>(ds.class_names.size()));
    if (inserted) {
      if (ds.class_names.size() == kMaxClasses) {
        throw ValidationError(path + ": more than " + std::to_string(kMaxClasses) +
                              " distinct labels");
      }
      ds.class_names.push_back(cls);
    }
    ds.labels.push_back(it->second);
  }
  ds.num_classes = static_cast<int>(ds.class_names.size());

  ds.feature_ranges.resize(ds.dim);
  for (int f = 0; f < ds.dim; ++f) {
    double lo = ds.values[f], hi = ds.values[f];
    for (std::size_t i = 1; i < ds.size(); ++i) {
      const double v = ds.row(i)[f];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    ds.feature_ranges[f] = {lo, hi};
  }
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  const auto check_name = [&](const std::string& s) {
    if (s.find_first_of(",\n\r") != std::string::npos) {
      throw ValidationError("name '" + s + "' cannot be written to CSV");
    }
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (const auto& n : ds.feature_names) {
    check_name(n);
    out << n << ',';
  }
  check_name(ds.label_name);
  out << ds.label_name << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto r = ds.row(i);
    for (double v : r) out << format_double(v) << ',';
    check_name(ds.class_names[ds.labels[i]]);
    out << ds.class_names[ds.labels[i]] << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction,
                                  std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test fraction must be in (0,1), got " +
                          format_double(test_fraction));
  }
  const std::size_t n = ds.size();
  if (n < 2) throw ValidationError("cannot split a dataset with fewer than 2 samples");
  const auto want = static_cast<std::size_t>(
      std::ceil(test_fraction * static_cast<double>(n)));
  const std::size_t test_n = std::clamp<std::size_t>(want, 1, n - 1);

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(idx[i], idx[rng.uniform_index(i + 1)]);
  }
  std::vector<std::size_t> test_rows(idx.begin(), idx.begin() + test_n);
  std::vector<std::size_t> train_rows(idx.begin() + test_n, idx.end());
  std::sort(test_rows.begin(), test_rows.end());
  std::sort(train_rows.begin(), train_rows.end());
  return {take_rows(ds, train_rows, "-train"), take_rows(ds, test_rows, "-test")};
}

Dataset synth_circle(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("synthetic dataset needs at least one sample");
  Dataset ds;
  ds.name = "synth-circle";
  ds.dim = 2;
  ds.num_classes = 2;
  ds.feature_names = {"x1", "x2"};
  ds.class_names = {"outside", "inside"};
  ds.feature_ranges = {{0.0, 1.0}, {0.0, 1.0}};
  ds.values.reserve(2 * n);
  ds.labels.reserve(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = rng.uniform01();
    const double x2 = rng.uniform01();
    ds.values.push_back(x1);
    ds.values.push_back(x2);
    ds.labels.push_back(x1 * x1 + x2 * x2 < 0.5 ? 1 : 0);
  }
  return ds;
}

}  // namespace grove
