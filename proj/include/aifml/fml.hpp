// Document model for the supported IEEE 1855 (FML) subset.
//
// A FuzzySystem is a knowledge base (linguistic variables with their fuzzy
// terms) plus a single Mamdani rule base. Values of these types are plain
// aggregates; they are checked by validate() and produced by parse_fml().
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aifml {

enum class Shape { triangular, trapezoidal, gaussian, singleton, left_linear, right_linear };

/// Number of parameters each shape carries.
constexpr std::size_t parameter_count(Shape shape) {
  switch (shape) {
    case Shape::triangular: return 3;
    case Shape::trapezoidal: return 4;
    case Shape::gaussian: return 2;
    case Shape::singleton: return 1;
    case Shape::left_linear:
    case Shape::right_linear: return 2;
  }
  return 0;
}

std::string_view to_string(Shape shape);

struct MembershipFunction {
  Shape shape = Shape::triangular;
  /// triangular a,b,c; trapezoidal a,b,c,d; gaussian center,sigma;
  /// singleton location; left/right-linear a,b.
  std::vector<double> params;

  bool operator==(const MembershipFunction&) const = default;
};

struct FuzzyTerm {
  std::string name;
  MembershipFunction mf;
  bool complement = false;

  bool operator==(const FuzzyTerm&) const = default;
};

enum class Role { input, output };

struct LinguisticVariable {
  std::string name;
  Role role = Role::input;
  double lo = 0.0;
  double hi = 1.0;
  std::string units;
  std::optional<double> default_value;
  std::vector<FuzzyTerm> terms;

  double width() const { return hi - lo; }
  /// Index of the named term, or -1.
  int term_index(std::string_view term) const;

  bool operator==(const LinguisticVariable&) const = default;
};

enum class AndMethod { min, prod };
enum class OrMethod { max, probor };
enum class ActivationMethod { min, prod };
enum class AccumulationMethod { max };
enum class Defuzzifier { cog, mom };
enum class Connector { and_, or_ };

std::string_view to_string(AndMethod m);
std::string_view to_string(OrMethod m);
std::string_view to_string(ActivationMethod m);
std::string_view to_string(AccumulationMethod m);
std::string_view to_string(Defuzzifier m);
std::string_view to_string(Connector c);

struct Clause {
  std::string variable;
  std::string term;

  bool operator==(const Clause&) const = default;
};

struct FuzzyRule {
  std::string id;
  double weight = 1.0;
  Connector connector = Connector::and_;
  std::vector<Clause> antecedent;
  std::vector<Clause> consequent;

  bool operator==(const FuzzyRule&) const = default;
};

struct RuleBase {
  AndMethod and_method = AndMethod::min;
  OrMethod or_method = OrMethod::max;
  ActivationMethod activation_method = ActivationMethod::min;
  AccumulationMethod accumulation_method = AccumulationMethod::max;
  Defuzzifier defuzzifier = Defuzzifier::cog;
  std::vector<FuzzyRule> rules;

  bool operator==(const RuleBase&) const = default;
};

struct FuzzySystem {
  std::string name;
  std::vector<LinguisticVariable> variables;
  RuleBase rule_base;

  /// Index of the named variable, or -1.
  int variable_index(std::string_view name) const;
  const LinguisticVariable* find_variable(std::string_view name) const;
  std::vector<const LinguisticVariable*> inputs() const;
  std::vector<const LinguisticVariable*> outputs() const;

  bool operator==(const FuzzySystem&) const = default;
};

/// One violated invariant. `path` addresses the offending field, e.g.
/// "variables[0].terms[2].mf".
struct Violation {
  std::string path;
  std::string message;

  bool operator==(const Violation&) const = default;
};

/// Checks every invariant of the model. An empty result means valid.
std::vector<Violation> validate(const FuzzySystem& sys);

/// Names accepted for systems, variables, terms and rules.
bool is_identifier(std::string_view name);

/// A located diagnostic from parse_fml(). `line` is 0 when unknown.
struct Diagnostic {
  int line = 0;
  std::string path;
  std::string message;
};

std::string format_diagnostic(const Diagnostic& d);

/// Raised by parse_fml() with every diagnostic found.
class FmlError : public std::runtime_error {
 public:
  explicit FmlError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Parses an FML document. Throws FmlError on malformed XML, elements or
/// attributes outside the supported subset, and any invariant violation.
FuzzySystem parse_fml(std::string_view text);

/// Canonical FML text for a valid system: deterministic, LF line endings,
/// numbers in shortest round-trip form.
std::string serialize_fml(const FuzzySystem& sys);

}  // namespace aifml
