#pragma once

#include <stdexcept>
#include <string>

namespace grove {

// Invalid user input: malformed CSV cells, bad config values, dimension
// mismatches. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem problems: missing files, unwritable outputs. The CLI maps
// this to exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace grove
