#pragma once

#include <string>

#include <json.hpp>

#include "grove/tree.hpp"

// Shared between the tree and forest document writers; not part of the
// public API.
namespace grove::detail {

nlohmann::ordered_json tree_to_json(const Tree& t);

// `where` prefixes every diagnostic, e.g. "trees[3]".
Tree tree_from_json(const nlohmann::ordered_json& doc, const std::string& where);

}  // namespace grove::detail
