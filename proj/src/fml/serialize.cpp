#include <sstream>

#include "aifml/fml.hpp"
#include "number_format.hpp"

namespace aifml {
namespace {

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string_view shape_element(Shape shape) {
  switch (shape) {
    case Shape::triangular: return "triangularShape";
    case Shape::trapezoidal: return "trapezoidShape";
    case Shape::gaussian: return "gaussianShape";
    case Shape::singleton: return "singletonShape";
    case Shape::left_linear: return "leftLinearShape";
    case Shape::right_linear: return "rightLinearShape";
  }
  return "";
}

void write_clauses(std::ostringstream& out, const std::vector<Clause>& clauses,
                   std::string_view indent) {
  for (const auto& c : clauses) {
    out << indent << "<clause>\n"
        << indent << "  <variable>" << escape(c.variable) << "</variable>\n"
        << indent << "  <term>" << escape(c.term) << "</term>\n"
        << indent << "</clause>\n";
  }
}

}  // namespace

std::string serialize_fml(const FuzzySystem& sys) {
  using detail::format_number;
  const auto& rb = sys.rule_base;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<fuzzySystem name=\"" << escape(sys.name) << "\">\n";
  out << "  <knowledgeBase>\n";
  for (const auto& var : sys.variables) {
    out << "    <fuzzyVariable name=\"" << escape(var.name) << "\" domainleft=\""
        << format_number(var.lo) << "\" domainright=\"" << format_number(var.hi) << "\"";
    if (!var.units.empty()) out << " scale=\"" << escape(var.units) << "\"";
    out << " type=\"" << (var.role == Role::input ? "input" : "output") << "\"";
    if (var.role == Role::output) {
      out << " accumulation=\"" << to_string(rb.accumulation_method) << "\" defuzzifier=\""
          << to_string(rb.defuzzifier) << "\"";
      if (var.default_value) out << " defaultValue=\"" << format_number(*var.default_value) << "\"";
    }
    out << ">\n";
    for (const auto& term : var.terms) {
      out << "      <fuzzyTerm name=\"" << escape(term.name) << "\"";
      if (term.complement) out << " complement=\"true\"";
      out << ">\n        <" << shape_element(term.mf.shape);
      for (std::size_t i = 0; i < term.mf.params.size(); ++i)
        out << " param" << (i + 1) << "=\"" << format_number(term.mf.params[i]) << "\"";
      out << "/>\n      </fuzzyTerm>\n";
    }
    out << "    </fuzzyVariable>\n";
  }
  out << "  </knowledgeBase>\n";
  out << "  <mamdaniRuleBase name=\"rules\" activationMethod=\"" << to_string(rb.activation_method)
      << "\" andMethod=\"" << to_string(rb.and_method) << "\" orMethod=\""
      << to_string(rb.or_method) << "\">\n";
  for (const auto& rule : rb.rules) {
    out << "    <rule name=\"" << escape(rule.id) << "\" connector=\"" << to_string(rule.connector)
        << "\" weight=\"" << format_number(rule.weight) << "\">\n";
    out << "      <antecedent>\n";
    write_clauses(out, rule.antecedent, "        ");
    out << "      </antecedent>\n";
    out << "      <consequent>\n        <then>\n";
    write_clauses(out, rule.consequent, "          ");
    out << "        </then>\n      </consequent>\n";
    out << "    </rule>\n";
  }
  out << "  </mamdaniRuleBase>\n";
  out << "</fuzzySystem>\n";
  return out.str();
}

}  // namespace aifml
