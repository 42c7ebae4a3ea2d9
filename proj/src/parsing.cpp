#include "introspect/parsing.hpp"

#include <cctype>
#include <cstdlib>

namespace introspect::parsing {

using nlohmann::json;

std::optional<json> extract_json_object(const std::string& text) {
  std::size_t start = 0;
  while ((start = text.find('{', start)) != std::string::npos) {
    // Balanced-brace scan that respects string literals and escapes.
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          json parsed = json::parse(text.substr(start, i - start + 1), nullptr, false);
          if (!parsed.is_discarded() && parsed.is_object()) return parsed;
          break;
        }
      }
    }
    ++start;
  }
  return std::nullopt;
}

std::optional<std::string> json_string_field(const json& obj, const std::string& key) {
  if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
  const auto& value = obj.at(key);
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number() || value.is_boolean()) return value.dump();
  return std::nullopt;
}

std::optional<int> json_int_field(const json& obj, const std::string& key) {
  if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
  const auto& value = obj.at(key);
  if (value.is_number_integer()) return value.get<int>();
  if (value.is_number_float()) return static_cast<int>(value.get<double>());
  if (value.is_string()) {
    const std::string s = value.get<std::string>();
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end != s.c_str() && end != nullptr) {
      while (*end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
      if (*end == '\0') return static_cast<int>(v);
    }
  }
  return std::nullopt;
}

std::optional<std::vector<std::string>> json_string_array_field(const json& obj,
                                                                const std::string& key) {
  if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
  const auto& value = obj.at(key);
  std::vector<std::string> out;
  if (value.is_string()) {
    out.push_back(value.get<std::string>());
    return out;
  }
  if (!value.is_array()) return std::nullopt;
  for (const auto& item : value) {
    if (item.is_string()) {
      out.push_back(item.get<std::string>());
    } else {
      out.push_back(item.dump());
    }
  }
  return out;
}

}  // namespace introspect::parsing
