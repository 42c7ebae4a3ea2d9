#pragma once

#include <json.hpp>

#include <optional>
#include <string>

namespace introspect::parsing {

/// First balanced JSON object found in free-form text, if any. Model output
/// routinely wraps JSON in prose or code fences.
std::optional<nlohmann::json> extract_json_object(const std::string& text);

std::optional<std::string> json_string_field(const nlohmann::json& obj, const std::string& key);
std::optional<int> json_int_field(const nlohmann::json& obj, const std::string& key);
std::optional<std::vector<std::string>> json_string_array_field(const nlohmann::json& obj,
                                                                const std::string& key);

}  // namespace introspect::parsing
