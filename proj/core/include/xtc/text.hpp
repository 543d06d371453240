#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace xtc {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
/// Lowercase alphanumeric runs; everything else separates tokens.
std::vector<std::string> tokenize(std::string_view s);
std::set<std::string> token_set(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Locates the JSON value a model response ends with (trailing code fences are
/// ignored). Returns nullopt when the text does not end in a JSON object or array.
std::optional<nlohmann::json> extract_trailing_json(std::string_view text);

}  // namespace xtc
