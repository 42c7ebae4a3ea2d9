#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "introspect/errors.hpp"

namespace introspect::tasks {

/// Named prompt templates with `{placeholder}` substitution. The shipped
/// defaults live both embedded here and as text files under templates/; the
/// two must stay byte-identical (tested).
class PromptLibrary {
 public:
  static PromptLibrary builtin();

  /// Builtin templates, each overridden by <name>.txt when present.
  static PromptLibrary from_directory(const std::filesystem::path& dir);

  const std::string& raw(const std::string& name) const;
  std::string render(const std::string& name,
                     const std::map<std::string, std::string>& vars) const;

  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::string> templates_;
};

/// Replace every `{key}` with its value; unknown braces are left untouched.
std::string render_placeholders(std::string text,
                                const std::map<std::string, std::string>& vars);

}  // namespace introspect::tasks
