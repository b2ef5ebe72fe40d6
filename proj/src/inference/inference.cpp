#include "aifml/inference.hpp"

#include <cmath>

namespace aifml {
namespace {

double clamp_to_domain(const LinguisticVariable& var, double x) {
  if (!std::isfinite(x))
    throw std::invalid_argument("input '" + var.name + "' is not a finite number");
  return std::clamp(x, var.lo, var.hi);
}

std::string describe(const std::vector<Violation>& violations) {
  std::string out = "invalid fuzzy system";
  for (const auto& v : violations) out += "\n  " + v.path + ": " + v.message;
  return out;
}

}  // namespace

TermDegrees fuzzify(const LinguisticVariable& var, double x) {
  const double clamped = clamp_to_domain(var, x);
  TermDegrees out;
  for (const auto& term : var.terms) out[term.name] = membership_degree(term.mf, term.complement, clamped);
  return out;
}

double combine_clauses(std::span<const double> degrees, Connector connector, AndMethod and_method,
                       OrMethod or_method, double weight) {
  if (degrees.empty()) return 0.0;
  double acc = degrees[0];
  for (std::size_t i = 1; i < degrees.size(); ++i) {
    const double d = degrees[i];
    if (connector == Connector::and_)
      acc = and_method == AndMethod::min ? std::min(acc, d) : acc * d;
    else
      acc = or_method == OrMethod::max ? std::max(acc, d) : acc + d - acc * d;
  }
  return std::clamp(acc * weight, 0.0, 1.0);
}

double antecedent_strength(const FuzzyRule& rule, const FuzzifiedInput& fz, AndMethod and_method,
                           OrMethod or_method) {
  std::vector<double> degrees;
  degrees.reserve(rule.antecedent.size());
  for (const auto& clause : rule.antecedent) {
    const auto var = fz.find(clause.variable);
    if (var == fz.end()) throw std::invalid_argument("no degrees for variable '" + clause.variable + "'");
    const auto term = var->second.find(clause.term);
    if (term == var->second.end())
      throw std::invalid_argument("no degree for term '" + clause.term + "' of '" + clause.variable + "'");
    degrees.push_back(term->second);
  }
  return combine_clauses(degrees, rule.connector, and_method, or_method, rule.weight);
}

double fallback_value(const LinguisticVariable& out_var) {
  return out_var.default_value.value_or((out_var.lo + out_var.hi) / 2.0);
}

const OutputValue* InferenceResult::output(std::string_view variable) const {
  for (const auto& o : outputs)
    if (o.variable == variable) return &o;
  return nullptr;
}

InferenceEngine::InferenceEngine(FuzzySystem sys, Eigen::Index resolution)
    : sys_(std::move(sys)), resolution_(resolution) {
  if (resolution_ < 2) throw std::invalid_argument("resolution must be at least 2");
  if (auto violations = validate(sys_); !violations.empty())
    throw std::invalid_argument(describe(violations));

  std::vector<std::size_t> position(sys_.variables.size());
  for (std::size_t i = 0; i < sys_.variables.size(); ++i) {
    auto& list = sys_.variables[i].role == Role::input ? inputs_ : outputs_;
    position[i] = list.size();
    list.push_back(i);
    (sys_.variables[i].role == Role::input ? input_names_ : output_names_).push_back(sys_.variables[i].name);
  }
  auto resolve = [&](const Clause& c) {
    const auto v = static_cast<std::size_t>(sys_.variable_index(c.variable));
    return ClauseRef{position[v], static_cast<std::size_t>(sys_.variables[v].term_index(c.term))};
  };
  for (const auto& rule : sys_.rule_base.rules) {
    CompiledRule compiled;
    for (const auto& c : rule.antecedent) compiled.antecedent.push_back(resolve(c));
    for (const auto& c : rule.consequent) compiled.consequent.push_back(resolve(c));
    rules_.push_back(std::move(compiled));
  }
  for (std::size_t o : outputs_) {
    const auto& var = sys_.variables[o];
    auto& sampled = output_terms_.emplace_back();
    for (const auto& term : var.terms) sampled.push_back(sample_term(term, var.lo, var.hi, resolution_));
  }
}

void InferenceEngine::activations(std::span<const double> inputs, std::vector<double>& out) const {
  const auto& rb = sys_.rule_base;
  out.assign(rules_.size(), 0.0);
  std::vector<double> degrees;
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    degrees.clear();
    for (const auto& ref : rules_[r].antecedent) {
      const auto& var = sys_.variables[inputs_[ref.variable]];
      const auto& term = var.terms[ref.term];
      degrees.push_back(membership_degree(term.mf, term.complement, inputs[ref.variable]));
    }
    const auto& rule = rb.rules[r];
    out[r] = combine_clauses(degrees, rule.connector, rb.and_method, rb.or_method, rule.weight);
  }
}

Defuzzified<double> InferenceEngine::evaluate_output(std::size_t output,
                                                     std::span<const double> activations) const {
  const auto& var = sys_.variables[outputs_[output]];
  const auto& rb = sys_.rule_base;
  SampledFunction<double> aggregate{var.lo, var.hi, SampledFunction<double>::Values::Zero(resolution_)};
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    if (!(activations[r] > 0.0)) continue;
    for (const auto& ref : rules_[r].consequent) {
      if (ref.variable != output) continue;
      accumulate(aggregate, output_terms_[output][ref.term], activations[r], rb.activation_method);
    }
  }
  return defuzzify(aggregate, rb.defuzzifier, fallback_value(var));
}

void InferenceEngine::infer_crisp(std::span<const double> inputs, std::span<double> outputs) const {
  if (inputs.size() != inputs_.size() || outputs.size() != outputs_.size())
    throw std::invalid_argument("input/output arity mismatch");
  std::vector<double> clamped(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i)
    clamped[i] = clamp_to_domain(sys_.variables[inputs_[i]], inputs[i]);
  std::vector<double> act;
  activations(clamped, act);
  for (std::size_t o = 0; o < outputs_.size(); ++o) outputs[o] = evaluate_output(o, act).value;
}

InferenceResult InferenceEngine::infer(const CrispInputs& inputs) const {
  std::vector<double> clamped;
  for (std::size_t i : inputs_) {
    const auto& var = sys_.variables[i];
    const auto it = inputs.find(var.name);
    if (it == inputs.end()) throw std::invalid_argument("missing input '" + var.name + "'");
    clamped.push_back(clamp_to_domain(var, it->second));
  }
  std::vector<double> act;
  activations(clamped, act);

  InferenceResult result;
  for (std::size_t o = 0; o < outputs_.size(); ++o) {
    const auto value = evaluate_output(o, act);
    result.outputs.push_back({output_names_[o], value.value, value.defaulted});
  }
  for (std::size_t r = 0; r < act.size(); ++r)
    result.rule_activations.push_back({sys_.rule_base.rules[r].id, act[r]});
  return result;
}

InferenceResult infer(const FuzzySystem& sys, const CrispInputs& inputs, Eigen::Index resolution) {
  return InferenceEngine(sys, resolution).infer(inputs);
}

}  // namespace aifml
