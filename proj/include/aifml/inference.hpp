// Mamdani inference: fuzzify, evaluate rules, implicate, accumulate,
// defuzzify.
#pragma once

#include <Eigen/Core>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aifml/fml.hpp"
#include "aifml/membership.hpp"

namespace aifml {

/// Uniform sample count per output domain used for defuzzification.
inline constexpr Eigen::Index kDefaultResolution = 1001;

using TermDegrees = std::map<std::string, double>;
/// Input variable name -> (term name -> degree).
using FuzzifiedInput = std::map<std::string, TermDegrees>;
using CrispInputs = std::map<std::string, double>;

/// Membership degrees sampled on a uniform grid over [lo, hi].
template <typename Scalar = double>
struct SampledFunction {
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Scalar lo{};
  Scalar hi{};
  Values values;

  Eigen::Index resolution() const { return values.size(); }
  Scalar point(Eigen::Index i) const { return grid_point(lo, hi, resolution(), i); }

  static Scalar grid_point(Scalar lo, Scalar hi, Eigen::Index n, Eigen::Index i) {
    return lo + (hi - lo) * Scalar(i) / Scalar(n - 1);
  }
};

template <typename Scalar = double>
SampledFunction<Scalar> sample_term(const FuzzyTerm& term, Scalar lo, Scalar hi,
                                    Eigen::Index resolution) {
  if (resolution < 2) throw std::invalid_argument("resolution must be at least 2");
  SampledFunction<Scalar> f{lo, hi, typename SampledFunction<Scalar>::Values(resolution)};
  for (Eigen::Index i = 0; i < resolution; ++i)
    f.values[i] = membership_degree<Scalar>(term.mf, term.complement,
                                            SampledFunction<Scalar>::grid_point(lo, hi, resolution, i));
  return f;
}

/// Folds `consequent` (already sampled) into `aggregate` under MAX
/// accumulation, after implication with `activation`.
template <typename Scalar>
void accumulate(SampledFunction<Scalar>& aggregate, const SampledFunction<Scalar>& consequent,
                Scalar activation, ActivationMethod implication) {
  if (implication == ActivationMethod::min)
    aggregate.values = aggregate.values.max(consequent.values.min(activation));
  else
    aggregate.values = aggregate.values.max(consequent.values * activation);
}

/// Degrees for every term of `var` at `x`; `x` is clamped into the domain.
/// Throws std::invalid_argument for non-finite `x`.
TermDegrees fuzzify(const LinguisticVariable& var, double x);

/// Folds clause degrees with the connector's method, then applies the rule
/// weight.
double combine_clauses(std::span<const double> degrees, Connector connector, AndMethod and_method,
                       OrMethod or_method, double weight);

double antecedent_strength(const FuzzyRule& rule, const FuzzifiedInput& fz, AndMethod and_method,
                           OrMethod or_method);

/// Aggregate fuzzy output of `out_var`. `activations` is aligned with
/// sys.rule_base.rules.
template <typename Scalar = double>
SampledFunction<Scalar> aggregate_output(const FuzzySystem& sys, std::span<const double> activations,
                                         const LinguisticVariable& out_var,
                                         Eigen::Index resolution = kDefaultResolution) {
  const auto& rules = sys.rule_base.rules;
  if (activations.size() != rules.size())
    throw std::invalid_argument("one activation per rule required");
  const Scalar lo(out_var.lo), hi(out_var.hi);
  SampledFunction<Scalar> aggregate{lo, hi, SampledFunction<Scalar>::Values::Zero(resolution)};
  for (std::size_t r = 0; r < rules.size(); ++r) {
    if (!(activations[r] > 0.0)) continue;
    for (const auto& clause : rules[r].consequent) {
      if (clause.variable != out_var.name) continue;
      const int t = out_var.term_index(clause.term);
      if (t < 0) throw std::invalid_argument("unknown term '" + clause.term + "'");
      accumulate(aggregate, sample_term<Scalar>(out_var.terms[static_cast<std::size_t>(t)], lo, hi, resolution),
                 Scalar(activations[r]), sys.rule_base.activation_method);
    }
  }
  return aggregate;
}

template <typename Scalar = double>
struct Defuzzified {
  Scalar value{};
  bool defaulted = false;
};

/// COG or MOM over the sampled aggregate. An empty aggregate (zero mass for
/// COG, zero maximum for MOM) yields `fallback` with defaulted = true.
template <typename Scalar = double>
Defuzzified<Scalar> defuzzify(const SampledFunction<Scalar>& f, Defuzzifier method, Scalar fallback) {
  const Eigen::Index n = f.resolution();
  if (n < 2) throw std::invalid_argument("sampled function needs at least 2 points");
  Scalar numerator(0), denominator(0);
  if (method == Defuzzifier::cog) {
    for (Eigen::Index i = 0; i < n; ++i) {
      numerator += f.point(i) * f.values[i];
      denominator += f.values[i];
    }
  } else {
    const Scalar peak = f.values.maxCoeff();
    if (peak > Scalar(0)) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (f.values[i] == peak) {
          numerator += f.point(i);
          denominator += Scalar(1);
        }
      }
    }
  }
  if (!(denominator > Scalar(0))) return {fallback, true};
  return {std::clamp(numerator / denominator, f.lo, f.hi), false};
}

struct OutputValue {
  std::string variable;
  double value = 0.0;
  bool defaulted = false;

  bool operator==(const OutputValue&) const = default;
};

struct RuleActivation {
  std::string rule_id;
  double strength = 0.0;

  bool operator==(const RuleActivation&) const = default;
};

/// Outputs in output-variable declaration order, activations in rule order.
struct InferenceResult {
  std::vector<OutputValue> outputs;
  std::vector<RuleActivation> rule_activations;

  const OutputValue* output(std::string_view variable) const;

  bool operator==(const InferenceResult&) const = default;
};

/// Fallback crisp value when no rule reaches an output.
double fallback_value(const LinguisticVariable& out_var);

/// A validated system compiled for repeated inference: clause references are
/// resolved to indices and every output term is pre-sampled.
class InferenceEngine {
 public:
  /// Throws std::invalid_argument if `sys` does not validate.
  explicit InferenceEngine(FuzzySystem sys, Eigen::Index resolution = kDefaultResolution);

  const FuzzySystem& system() const { return sys_; }
  Eigen::Index resolution() const { return resolution_; }
  /// Names of input variables, in declaration order.
  const std::vector<std::string>& input_names() const { return input_names_; }
  const std::vector<std::string>& output_names() const { return output_names_; }

  /// Throws std::invalid_argument on a missing or non-finite input. Names not
  /// declared as inputs are ignored.
  InferenceResult infer(const CrispInputs& inputs) const;

  /// Positional form: `inputs` in input order, `outputs` receives crisp values
  /// in output order.
  void infer_crisp(std::span<const double> inputs, std::span<double> outputs) const;

 private:
  struct ClauseRef {
    std::size_t variable;  // position among inputs (antecedent) or outputs (consequent)
    std::size_t term;
  };
  struct CompiledRule {
    std::vector<ClauseRef> antecedent;
    std::vector<ClauseRef> consequent;
  };

  void activations(std::span<const double> inputs, std::vector<double>& out) const;
  Defuzzified<double> evaluate_output(std::size_t output, std::span<const double> activations) const;

  FuzzySystem sys_;
  Eigen::Index resolution_;
  std::vector<std::size_t> inputs_;  // indices into sys_.variables
  std::vector<std::size_t> outputs_;
  std::vector<std::string> input_names_;
  std::vector<std::string> output_names_;
  std::vector<CompiledRule> rules_;
  std::vector<std::vector<SampledFunction<double>>> output_terms_;
};

/// One-shot inference; compiles `sys` on every call.
InferenceResult infer(const FuzzySystem& sys, const CrispInputs& inputs,
                      Eigen::Index resolution = kDefaultResolution);

}  // namespace aifml
