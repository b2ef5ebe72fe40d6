#include "aifml/fml.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "number_format.hpp"

namespace aifml {

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::triangular: return "triangular";
    case Shape::trapezoidal: return "trapezoidal";
    case Shape::gaussian: return "gaussian";
    case Shape::singleton: return "singleton";
    case Shape::left_linear: return "left-linear";
    case Shape::right_linear: return "right-linear";
  }
  return "?";
}

std::string_view to_string(AndMethod m) { return m == AndMethod::min ? "MIN" : "PROD"; }
std::string_view to_string(OrMethod m) { return m == OrMethod::max ? "MAX" : "PROBOR"; }
std::string_view to_string(ActivationMethod m) {
  return m == ActivationMethod::min ? "MIN" : "PROD";
}
std::string_view to_string(AccumulationMethod) { return "MAX"; }
std::string_view to_string(Defuzzifier m) { return m == Defuzzifier::cog ? "COG" : "MOM"; }
std::string_view to_string(Connector c) { return c == Connector::and_ ? "and" : "or"; }

int LinguisticVariable::term_index(std::string_view term) const {
  for (std::size_t i = 0; i < terms.size(); ++i)
    if (terms[i].name == term) return static_cast<int>(i);
  return -1;
}

int FuzzySystem::variable_index(std::string_view var) const {
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i].name == var) return static_cast<int>(i);
  return -1;
}

const LinguisticVariable* FuzzySystem::find_variable(std::string_view var) const {
  const int i = variable_index(var);
  return i < 0 ? nullptr : &variables[static_cast<std::size_t>(i)];
}

std::vector<const LinguisticVariable*> FuzzySystem::inputs() const {
  std::vector<const LinguisticVariable*> out;
  for (const auto& v : variables)
    if (v.role == Role::input) out.push_back(&v);
  return out;
}

std::vector<const LinguisticVariable*> FuzzySystem::outputs() const {
  std::vector<const LinguisticVariable*> out;
  for (const auto& v : variables)
    if (v.role == Role::output) out.push_back(&v);
  return out;
}

bool is_identifier(std::string_view name) {
  if (name.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!alpha(name.front())) return false;
  for (char c : name)
    if (!alpha(c) && !(c >= '0' && c <= '9') && c != '-' && c != '.') return false;
  return true;
}

std::string format_diagnostic(const Diagnostic& d) {
  std::string out;
  if (d.line > 0) out += "line " + std::to_string(d.line) + ": ";
  if (!d.path.empty()) out += d.path + ": ";
  out += d.message;
  return out;
}

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& diagnostics) {
  std::string out;
  for (const auto& d : diagnostics) {
    if (!out.empty()) out += '\n';
    out += format_diagnostic(d);
  }
  return out;
}

std::string idx(std::string_view field, std::size_t i) {
  return std::string(field) + "[" + std::to_string(i) + "]";
}

void check_mf(const MembershipFunction& mf, const LinguisticVariable& var, const std::string& path,
              std::vector<Violation>& out) {
  const auto& p = mf.params;
  if (p.size() != parameter_count(mf.shape)) {
    out.push_back({path, std::string(to_string(mf.shape)) + " takes " +
                             std::to_string(parameter_count(mf.shape)) + " parameters, got " +
                             std::to_string(p.size())});
    return;
  }
  for (double v : p) {
    if (!std::isfinite(v)) {
      out.push_back({path, "parameters must be finite"});
      return;
    }
  }
  switch (mf.shape) {
    case Shape::triangular:
      if (!(p[0] <= p[1] && p[1] <= p[2])) out.push_back({path, "parameter order a ≤ b ≤ c violated"});
      break;
    case Shape::trapezoidal:
      if (!(p[0] <= p[1] && p[1] <= p[2] && p[2] <= p[3]))
        out.push_back({path, "parameter order a ≤ b ≤ c ≤ d violated"});
      break;
    case Shape::gaussian:
      if (!(p[1] > 0.0)) out.push_back({path, "σ > 0 violated"});
      break;
    case Shape::left_linear:
    case Shape::right_linear:
      if (!(p[0] < p[1])) out.push_back({path, "parameter order a < b violated"});
      break;
    case Shape::singleton: break;
  }
  // Gaussian width is a scale, not a location; only the center is bounded.
  const std::size_t located = mf.shape == Shape::gaussian ? 1 : p.size();
  for (std::size_t i = 0; i < located; ++i) {
    if (p[i] < var.lo || p[i] > var.hi) {
      out.push_back({path, "parameter " + std::to_string(i + 1) + " (" +
                               detail::format_number(p[i]) + ") outside domain [" +
                               detail::format_number(var.lo) + ", " +
                               detail::format_number(var.hi) + "]"});
    }
  }
}

void check_clause(const FuzzySystem& sys, const FuzzyRule& rule, const Clause& clause,
                  Role expected, const std::string& path, std::vector<Violation>& out) {
  const LinguisticVariable* var = sys.find_variable(clause.variable);
  if (var == nullptr) {
    out.push_back({path, "rule '" + rule.id + "' references undeclared variable '" +
                             clause.variable + "'"});
    return;
  }
  if (var->role != expected) {
    out.push_back({path, "rule '" + rule.id + "' uses " +
                             (var->role == Role::input ? std::string("input") : std::string("output")) +
                             " variable '" + var->name + "' in its " +
                             (expected == Role::input ? "antecedent" : "consequent")});
  }
  if (var->term_index(clause.term) < 0) {
    out.push_back({path, "rule '" + rule.id + "' references term '" + clause.term +
                             "' not declared on variable '" + var->name + "'"});
  }
}

}  // namespace

FmlError::FmlError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(join_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::vector<Violation> validate(const FuzzySystem& sys) {
  std::vector<Violation> out;
  if (!is_identifier(sys.name)) out.push_back({"name", "system name must be an identifier"});

  std::size_t inputs = 0, outputs = 0;
  std::set<std::string> var_names;
  for (std::size_t i = 0; i < sys.variables.size(); ++i) {
    const auto& var = sys.variables[i];
    const std::string vpath = idx("variables", i);
    (var.role == Role::input ? inputs : outputs)++;
    if (!is_identifier(var.name))
      out.push_back({vpath + ".name", "'" + var.name + "' is not an identifier"});
    if (!var_names.insert(var.name).second)
      out.push_back({vpath + ".name", "duplicate variable name '" + var.name + "'"});
    if (!std::isfinite(var.lo) || !std::isfinite(var.hi) || !(var.lo < var.hi)) {
      out.push_back({vpath + ".domain", "domain requires lo < hi"});
      continue;  // per-term domain checks would only repeat this
    }
    if (var.default_value) {
      if (var.role != Role::output)
        out.push_back({vpath + ".default_value", "default value is only allowed on outputs"});
      else if (!(*var.default_value >= var.lo && *var.default_value <= var.hi))
        out.push_back({vpath + ".default_value", "default value outside domain"});
    }
    if (var.terms.empty()) out.push_back({vpath + ".terms", "variable needs at least one term"});
    std::set<std::string> term_names;
    for (std::size_t j = 0; j < var.terms.size(); ++j) {
      const auto& term = var.terms[j];
      const std::string tpath = vpath + "." + idx("terms", j);
      if (!is_identifier(term.name))
        out.push_back({tpath + ".name", "'" + term.name + "' is not an identifier"});
      if (!term_names.insert(term.name).second)
        out.push_back({tpath + ".name", "duplicate term name '" + term.name + "'"});
      check_mf(term.mf, var, tpath + ".mf", out);
    }
  }
  if (inputs == 0) out.push_back({"variables", "at least one input variable required"});
  if (outputs == 0) out.push_back({"variables", "at least one output variable required"});

  const auto& rb = sys.rule_base;
  if (rb.rules.empty()) out.push_back({"rule_base.rules", "rule base needs at least one rule"});
  std::set<std::string> rule_ids;
  for (std::size_t k = 0; k < rb.rules.size(); ++k) {
    const auto& rule = rb.rules[k];
    const std::string rpath = "rule_base." + idx("rules", k);
    if (!is_identifier(rule.id))
      out.push_back({rpath + ".id", "'" + rule.id + "' is not an identifier"});
    if (!rule_ids.insert(rule.id).second)
      out.push_back({rpath + ".id", "duplicate rule id '" + rule.id + "'"});
    if (!(rule.weight >= 0.0 && rule.weight <= 1.0))
      out.push_back({rpath + ".weight", "weight must lie in [0, 1]"});
    if (rule.antecedent.empty())
      out.push_back({rpath + ".antecedent", "rule '" + rule.id + "' has an empty antecedent"});
    if (rule.consequent.empty())
      out.push_back({rpath + ".consequent", "rule '" + rule.id + "' has an empty consequent"});
    std::set<std::string> seen;
    for (std::size_t m = 0; m < rule.antecedent.size(); ++m) {
      const auto& clause = rule.antecedent[m];
      const std::string cpath = rpath + "." + idx("antecedent", m);
      check_clause(sys, rule, clause, Role::input, cpath, out);
      if (!seen.insert(clause.variable).second)
        out.push_back({cpath, "variable '" + clause.variable + "' appears twice in rule '" +
                                  rule.id + "'"});
    }
    for (std::size_t m = 0; m < rule.consequent.size(); ++m)
      check_clause(sys, rule, rule.consequent[m], Role::output,
                   rpath + "." + idx("consequent", m), out);
  }
  return out;
}

}  // namespace aifml
