#include <algorithm>
#include <array>
#include <map>

#include "aifml/fml.hpp"
#include "fml/xml_tree.hpp"
#include "number_format.hpp"

namespace aifml {
namespace {

using detail::XmlElement;

// IEEE 1855 vocabulary that this engine deliberately does not implement.
constexpr std::array kUnsupportedElements = {
    "tskRuleBase",      "tsukamotoRuleBase",     "anYaRuleBase",     "tskVariable",
    "tsukamotoVariable", "aggregatedFuzzyVariable", "anYaDataCloud",  "tskConsequent",
    "tskTerm",          "tsukamotoTerm",         "piShape",          "sShape",
    "zShape",           "rectangularShape",      "pointSetShape",    "pointSetMonotonicShape",
    "circularDefinition", "customShape",         "customMonotonicShape", "else",
};

struct ShapeTag {
  std::string_view element;
  Shape shape;
};

constexpr std::array kShapeTags = {
    ShapeTag{"triangularShape", Shape::triangular},   ShapeTag{"trapezoidShape", Shape::trapezoidal},
    ShapeTag{"gaussianShape", Shape::gaussian},       ShapeTag{"singletonShape", Shape::singleton},
    ShapeTag{"leftLinearShape", Shape::left_linear},  ShapeTag{"rightLinearShape", Shape::right_linear},
};

bool is_unsupported_element(std::string_view name) {
  return std::find(kUnsupportedElements.begin(), kUnsupportedElements.end(), name) !=
         kUnsupportedElements.end();
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

std::string trimmed(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

class Parser {
 public:
  FuzzySystem run(const XmlElement& root) {
    if (root.name != "fuzzySystem") {
      error(root, "", "root element must be <fuzzySystem>, found <" + root.name + ">");
      return {};
    }
    FuzzySystem sys;
    record("", root);
    check_attributes(root, "", {"name"}, /*allow_xmlns=*/true);
    sys.name = required(root, "", "name");
    no_text(root, "");

    bool have_kb = false, have_rb = false;
    std::optional<std::pair<Defuzzifier, AccumulationMethod>> output_methods;
    for (const auto& child : root.children) {
      if (child->name == "knowledgeBase") {
        if (have_kb) error(*child, "", "only one <knowledgeBase> is allowed");
        have_kb = true;
        parse_knowledge_base(*child, sys, output_methods);
      } else if (child->name == "mamdaniRuleBase") {
        if (have_rb) {
          error(*child, "rule_base", "unsupported: more than one rule base");
          continue;
        }
        have_rb = true;
        parse_rule_base(*child, sys.rule_base);
      } else {
        reject_element(*child, "");
      }
    }
    if (!have_kb) error(root, "", "missing <knowledgeBase>");
    if (!have_rb) error(root, "", "missing <mamdaniRuleBase>");
    if (output_methods) {
      sys.rule_base.defuzzifier = output_methods->first;
      sys.rule_base.accumulation_method = output_methods->second;
    }
    return sys;
  }

  std::vector<Diagnostic>& diagnostics() { return diagnostics_; }

  /// Line of the deepest recorded element that prefixes `path`.
  int line_for(const std::string& path) const {
    int line = 0;
    std::size_t best = 0;
    for (const auto& [prefix, l] : lines_) {
      if (path.compare(0, prefix.size(), prefix) == 0 &&
          (prefix.empty() || path.size() == prefix.size() || path[prefix.size()] == '.' ||
           path[prefix.size()] == '[') &&
          prefix.size() >= best) {
        best = prefix.size();
        line = l;
      }
    }
    return line;
  }

  void record(const std::string& path, const XmlElement& e) { lines_[path] = e.line; }

 private:
  void error(const XmlElement& e, std::string path, std::string message) {
    diagnostics_.push_back({e.line, std::move(path), std::move(message)});
  }

  void reject_element(const XmlElement& e, const std::string& path) {
    if (is_unsupported_element(e.name))
      error(e, path, "unsupported element <" + e.name + ">");
    else
      error(e, path, "unknown element <" + e.name + ">");
  }

  void no_text(const XmlElement& e, const std::string& path) {
    if (!is_blank(e.text)) error(e, path, "unexpected text inside <" + e.name + ">");
  }

  void check_attributes(const XmlElement& e, const std::string& path,
                        std::initializer_list<std::string_view> allowed, bool allow_xmlns = false) {
    for (const auto& [key, value] : e.attributes) {
      if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
      if (allow_xmlns && (key == "xmlns" || key.rfind("xmlns:", 0) == 0 ||
                          key.rfind("xsi:", 0) == 0))
        continue;
      if (key == "modifier" || key == "networkAddress" || key == "andMethod" ||
          key == "orMethod")
        error(e, path, "unsupported attribute '" + key + "' on <" + e.name + ">");
      else
        error(e, path, "unknown attribute '" + key + "' on <" + e.name + ">");
    }
  }

  std::string required(const XmlElement& e, const std::string& path, std::string_view key) {
    if (const std::string* v = e.attribute(key)) return *v;
    error(e, path, "<" + e.name + "> requires attribute '" + std::string(key) + "'");
    return {};
  }

  double number(const XmlElement& e, const std::string& path, std::string_view key,
                std::optional<double> fallback = std::nullopt) {
    const std::string* v = e.attribute(key);
    if (v == nullptr) {
      if (fallback) return *fallback;
      error(e, path, "<" + e.name + "> requires attribute '" + std::string(key) + "'");
      return 0.0;
    }
    if (auto parsed = detail::parse_number(*v)) return *parsed;
    error(e, path, "attribute '" + std::string(key) + "' is not a finite number: '" + *v + "'");
    return 0.0;
  }

  template <typename Enum>
  Enum method(const XmlElement& e, const std::string& path, std::string_view key, Enum fallback,
              std::initializer_list<std::pair<std::string_view, Enum>> table) {
    const std::string* v = e.attribute(key);
    if (v == nullptr) return fallback;
    for (const auto& [text, value] : table)
      if (*v == text) return value;
    error(e, path, "unsupported " + std::string(key) + " '" + *v + "'");
    return fallback;
  }

  void parse_knowledge_base(const XmlElement& kb, FuzzySystem& sys,
                            std::optional<std::pair<Defuzzifier, AccumulationMethod>>& methods) {
    record("variables", kb);
    check_attributes(kb, "", {});
    no_text(kb, "");
    for (const auto& child : kb.children) {
      if (child->name != "fuzzyVariable") {
        reject_element(*child, "variables");
        continue;
      }
      const std::string path = "variables[" + std::to_string(sys.variables.size()) + "]";
      record(path, *child);
      sys.variables.push_back(parse_variable(*child, path, methods));
    }
  }

  LinguisticVariable parse_variable(
      const XmlElement& e, const std::string& path,
      std::optional<std::pair<Defuzzifier, AccumulationMethod>>& methods) {
    check_attributes(e, path,
                     {"name", "domainleft", "domainright", "scale", "type", "accumulation",
                      "defuzzifier", "defaultValue"});
    no_text(e, path);
    LinguisticVariable var;
    var.name = required(e, path, "name");
    var.lo = number(e, path, "domainleft");
    var.hi = number(e, path, "domainright");
    if (const std::string* scale = e.attribute("scale")) var.units = *scale;
    var.role = method(e, path, "type", Role::input,
                      {{"input", Role::input}, {"output", Role::output}});

    if (var.role == Role::output) {
      const auto defuzzifier = method(e, path, "defuzzifier", Defuzzifier::cog,
                                      {{"COG", Defuzzifier::cog}, {"MOM", Defuzzifier::mom}});
      const auto accumulation = method(e, path, "accumulation", AccumulationMethod::max,
                                       {{"MAX", AccumulationMethod::max}});
      if (!methods) {
        methods.emplace(defuzzifier, accumulation);
      } else if (methods->first != defuzzifier || methods->second != accumulation) {
        error(e, path, "unsupported: output variables must share one defuzzifier and accumulation");
      }
      if (e.attribute("defaultValue") != nullptr) var.default_value = number(e, path, "defaultValue");
    } else {
      for (std::string_view key : {"accumulation", "defuzzifier", "defaultValue"})
        if (e.attribute(key) != nullptr)
          error(e, path, "attribute '" + std::string(key) + "' is only valid on output variables");
    }

    for (const auto& child : e.children) {
      if (child->name != "fuzzyTerm") {
        reject_element(*child, path);
        continue;
      }
      const std::string tpath = path + ".terms[" + std::to_string(var.terms.size()) + "]";
      record(tpath, *child);
      var.terms.push_back(parse_term(*child, tpath));
    }
    return var;
  }

  FuzzyTerm parse_term(const XmlElement& e, const std::string& path) {
    check_attributes(e, path, {"name", "complement"});
    no_text(e, path);
    FuzzyTerm term;
    term.name = required(e, path, "name");
    term.complement = method(e, path, "complement", false, {{"false", false}, {"true", true}});

    const XmlElement* shape_element = nullptr;
    for (const auto& child : e.children) {
      const auto tag = std::find_if(kShapeTags.begin(), kShapeTags.end(),
                                    [&](const ShapeTag& t) { return t.element == child->name; });
      if (tag == kShapeTags.end()) {
        reject_element(*child, path);
        continue;
      }
      if (shape_element != nullptr) {
        error(*child, path, "term '" + term.name + "' declares more than one shape");
        continue;
      }
      shape_element = child.get();
      const std::string mpath = path + ".mf";
      record(mpath, *child);
      term.mf.shape = tag->shape;
      const std::size_t n = parameter_count(tag->shape);
      std::vector<std::string> names;
      for (std::size_t i = 1; i <= n; ++i) names.push_back("param" + std::to_string(i));
      for (const auto& [key, value] : child->attributes) {
        if (std::find(names.begin(), names.end(), key) == names.end())
          error(*child, mpath, "unknown attribute '" + key + "' on <" + child->name + ">");
      }
      no_text(*child, mpath);
      for (const auto& grandchild : child->children) reject_element(*grandchild, mpath);
      for (const auto& key : names) term.mf.params.push_back(number(*child, mpath, key));
    }
    if (shape_element == nullptr) error(e, path, "term '" + term.name + "' has no shape");
    return term;
  }

  void parse_rule_base(const XmlElement& e, RuleBase& rb) {
    const std::string path = "rule_base";
    record(path, e);
    check_attributes(e, path, {"name", "activationMethod", "andMethod", "orMethod"});
    no_text(e, path);
    rb.activation_method =
        method(e, path, "activationMethod", ActivationMethod::min,
               {{"MIN", ActivationMethod::min}, {"PROD", ActivationMethod::prod}});
    rb.and_method =
        method(e, path, "andMethod", AndMethod::min, {{"MIN", AndMethod::min}, {"PROD", AndMethod::prod}});
    rb.or_method =
        method(e, path, "orMethod", OrMethod::max, {{"MAX", OrMethod::max}, {"PROBOR", OrMethod::probor}});
    for (const auto& child : e.children) {
      if (child->name != "rule") {
        reject_element(*child, path);
        continue;
      }
      const std::string rpath = path + ".rules[" + std::to_string(rb.rules.size()) + "]";
      record(rpath, *child);
      rb.rules.push_back(parse_rule(*child, rpath));
    }
  }

  FuzzyRule parse_rule(const XmlElement& e, const std::string& path) {
    check_attributes(e, path, {"name", "connector", "weight"});
    no_text(e, path);
    FuzzyRule rule;
    rule.id = required(e, path, "name");
    rule.connector =
        method(e, path, "connector", Connector::and_, {{"and", Connector::and_}, {"or", Connector::or_}});
    rule.weight = number(e, path, "weight", 1.0);
    bool have_antecedent = false, have_consequent = false;
    for (const auto& child : e.children) {
      if (child->name == "antecedent") {
        if (have_antecedent) error(*child, path, "rule '" + rule.id + "' has two antecedents");
        have_antecedent = true;
        check_attributes(*child, path, {});
        no_text(*child, path);
        parse_clauses(*child, path + ".antecedent", rule.antecedent);
      } else if (child->name == "consequent") {
        if (have_consequent) error(*child, path, "rule '" + rule.id + "' has two consequents");
        have_consequent = true;
        check_attributes(*child, path, {});
        no_text(*child, path);
        bool have_then = false;
        for (const auto& part : child->children) {
          if (part->name != "then") {
            reject_element(*part, path + ".consequent");
            continue;
          }
          if (have_then) error(*part, path, "rule '" + rule.id + "' has two <then> blocks");
          have_then = true;
          check_attributes(*part, path, {});
          no_text(*part, path);
          parse_clauses(*part, path + ".consequent", rule.consequent);
        }
      } else {
        reject_element(*child, path);
      }
    }
    return rule;
  }

  void parse_clauses(const XmlElement& e, const std::string& path, std::vector<Clause>& out) {
    for (const auto& child : e.children) {
      if (child->name != "clause") {
        reject_element(*child, path);
        continue;
      }
      const std::string cpath = path + "[" + std::to_string(out.size()) + "]";
      record(cpath, *child);
      check_attributes(*child, cpath, {});
      no_text(*child, cpath);
      Clause clause;
      bool have_var = false, have_term = false;
      for (const auto& part : child->children) {
        std::string* target = nullptr;
        bool* seen = nullptr;
        if (part->name == "variable") {
          target = &clause.variable;
          seen = &have_var;
        } else if (part->name == "term") {
          target = &clause.term;
          seen = &have_term;
        } else {
          reject_element(*part, cpath);
          continue;
        }
        check_attributes(*part, cpath, {});
        for (const auto& nested : part->children) reject_element(*nested, cpath);
        if (*seen) error(*part, cpath, "duplicate <" + part->name + "> in clause");
        *seen = true;
        *target = trimmed(part->text);
      }
      if (!have_var) error(*child, cpath, "clause requires <variable>");
      if (!have_term) error(*child, cpath, "clause requires <term>");
      out.push_back(std::move(clause));
    }
  }

  std::vector<Diagnostic> diagnostics_;
  std::map<std::string, int> lines_;
};

}  // namespace

FuzzySystem parse_fml(std::string_view text) {
  auto xml = detail::parse_xml(text);
  if (!xml.error.empty())
    throw FmlError({{xml.error_line, "", "malformed XML: " + xml.error}});

  Parser parser;
  FuzzySystem sys = parser.run(*xml.root);
  auto& diagnostics = parser.diagnostics();
  if (diagnostics.empty()) {
    for (auto& v : validate(sys))
      diagnostics.push_back({parser.line_for(v.path), v.path, v.message});
  }
  if (!diagnostics.empty()) throw FmlError(std::move(diagnostics));
  return sys;
}

}  // namespace aifml
