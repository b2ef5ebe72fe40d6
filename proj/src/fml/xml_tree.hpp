// Minimal element tree over expat, keeping source line numbers.
#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aifml::detail {

struct XmlElement {
  std::string name;
  int line = 0;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<std::unique_ptr<XmlElement>> children;
  std::string text;  // concatenated character data directly inside this element

  const std::string* attribute(std::string_view key) const {
    for (const auto& [k, v] : attributes)
      if (k == key) return &v;
    return nullptr;
  }
};

struct XmlParseResult {
  std::unique_ptr<XmlElement> root;
  int error_line = 0;
  std::string error;  // empty on success
};

XmlParseResult parse_xml(std::string_view text);

}  // namespace aifml::detail
