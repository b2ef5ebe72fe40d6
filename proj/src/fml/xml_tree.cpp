#include "fml/xml_tree.hpp"

#include <expat.h>

#include <climits>

namespace aifml::detail {
namespace {

struct Builder {
  XML_Parser parser = nullptr;
  std::unique_ptr<XmlElement> root;
  std::vector<XmlElement*> stack;
};

void XMLCALL on_start(void* user, const XML_Char* name, const XML_Char** attrs) {
  auto* b = static_cast<Builder*>(user);
  auto element = std::make_unique<XmlElement>();
  element->name = name;
  element->line = static_cast<int>(XML_GetCurrentLineNumber(b->parser));
  for (int i = 0; attrs[i] != nullptr; i += 2) element->attributes.emplace_back(attrs[i], attrs[i + 1]);
  XmlElement* raw = element.get();
  if (b->stack.empty())
    b->root = std::move(element);
  else
    b->stack.back()->children.push_back(std::move(element));
  b->stack.push_back(raw);
}

void XMLCALL on_end(void* user, const XML_Char*) { static_cast<Builder*>(user)->stack.pop_back(); }

void XMLCALL on_text(void* user, const XML_Char* s, int len) {
  auto* b = static_cast<Builder*>(user);
  if (!b->stack.empty()) b->stack.back()->text.append(s, static_cast<std::size_t>(len));
}

}  // namespace

XmlParseResult parse_xml(std::string_view text) {
  XmlParseResult result;
  if (text.size() > static_cast<std::size_t>(INT_MAX)) {
    result.error = "document too large";
    return result;
  }
  Builder b;
  b.parser = XML_ParserCreate("UTF-8");
  XML_SetUserData(b.parser, &b);
  XML_SetElementHandler(b.parser, on_start, on_end);
  XML_SetCharacterDataHandler(b.parser, on_text);
  if (XML_Parse(b.parser, text.data(), static_cast<int>(text.size()), XML_TRUE) == XML_STATUS_ERROR) {
    result.error = XML_ErrorString(XML_GetErrorCode(b.parser));
    result.error_line = static_cast<int>(XML_GetCurrentLineNumber(b.parser));
  } else {
    result.root = std::move(b.root);
  }
  XML_ParserFree(b.parser);
  return result;
}

}  // namespace aifml::detail
