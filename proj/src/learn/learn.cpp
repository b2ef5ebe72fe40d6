#include "aifml/learn.hpp"

#include <algorithm>
#include <cmath>

#include "number_format.hpp"

namespace aifml {
namespace {

constexpr double kWidthEpsilon = 1e-6;

bool is_ordered_group(Shape shape) { return shape != Shape::gaussian && shape != Shape::singleton; }

}  // namespace

void check_config(const PsoConfig& cfg) {
  if (cfg.swarm_size < 2) throw std::invalid_argument("swarm_size must be at least 2");
  if (cfg.max_evaluations < cfg.swarm_size)
    throw std::invalid_argument("max_evaluations must be at least swarm_size");
  if (!(cfg.velocity_clamp_fraction > 0.0 && cfg.velocity_clamp_fraction <= 1.0))
    throw std::invalid_argument("velocity_clamp_fraction must lie in (0, 1]");
  if (!std::isfinite(cfg.inertia) || !std::isfinite(cfg.cognitive) || !std::isfinite(cfg.social))
    throw std::invalid_argument("PSO coefficients must be finite");
}

SearchBox<double> ParameterSpec::box() const {
  SearchBox<double> box{ParameterVector(static_cast<Eigen::Index>(slots.size())),
                        ParameterVector(static_cast<Eigen::Index>(slots.size()))};
  for (std::size_t i = 0; i < slots.size(); ++i) {
    box.lower[static_cast<Eigen::Index>(i)] = slots[i].lower;
    box.upper[static_cast<Eigen::Index>(i)] = slots[i].upper;
  }
  return box;
}

EncodedSystem encode(const FuzzySystem& sys) {
  EncodedSystem out;
  std::vector<double> values;
  for (std::size_t v = 0; v < sys.variables.size(); ++v) {
    const auto& var = sys.variables[v];
    for (std::size_t t = 0; t < var.terms.size(); ++t) {
      const auto& mf = var.terms[t].mf;
      for (std::size_t p = 0; p < mf.params.size(); ++p) {
        ParameterSlot slot{v, t, p, var.lo, var.hi,
                           "variables[" + std::to_string(v) + "].terms[" + std::to_string(t) +
                               "].mf.params[" + std::to_string(p) + "]"};
        if (mf.shape == Shape::gaussian && p == 1) {
          slot.lower = std::min(kWidthEpsilon * var.width(), mf.params[p]);
          slot.upper = std::max(var.width(), mf.params[p]);
        }
        out.spec.slots.push_back(std::move(slot));
        values.push_back(mf.params[p]);
      }
    }
  }
  if (values.empty()) throw std::invalid_argument("system has no tunable parameters");
  out.vector = Eigen::Map<const ParameterVector>(values.data(), static_cast<Eigen::Index>(values.size()));
  return out;
}

ParameterVector repair(const FuzzySystem& tmpl, const ParameterSpec& spec, ParameterVector v) {
  if (static_cast<std::size_t>(v.size()) != spec.size())
    throw std::invalid_argument("parameter vector has " + std::to_string(v.size()) + " entries, spec has " +
                                std::to_string(spec.size()));
  for (std::size_t i = 0; i < spec.size(); ++i) {
    auto& x = v[static_cast<Eigen::Index>(i)];
    x = std::clamp(x, spec.slots[i].lower, spec.slots[i].upper);
  }
  // Slots of one term are contiguous; walk them group by group.
  for (std::size_t begin = 0; begin < spec.size();) {
    const auto& first = spec.slots[begin];
    std::size_t end = begin;
    while (end < spec.size() && spec.slots[end].variable == first.variable && spec.slots[end].term == first.term)
      ++end;
    const auto& var = tmpl.variables.at(first.variable);
    const Shape shape = var.terms.at(first.term).mf.shape;
    auto group = v.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
    if (is_ordered_group(shape)) std::sort(group.begin(), group.end());
    if ((shape == Shape::left_linear || shape == Shape::right_linear) && group.size() == 2 &&
        !(group[0] < group[1])) {
      const double gap = kWidthEpsilon * var.width();
      if (group[0] + gap <= var.hi)
        group[1] = group[0] + gap;
      else
        group[0] = group[1] - gap;
    }
    begin = end;
  }
  return v;
}

FuzzySystem decode(const FuzzySystem& tmpl, const ParameterSpec& spec, const ParameterVector& v) {
  const ParameterVector fixed = repair(tmpl, spec, v);
  FuzzySystem out = tmpl;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& slot = spec.slots[i];
    out.variables.at(slot.variable).terms.at(slot.term).mf.params.at(slot.param) =
        fixed[static_cast<Eigen::Index>(i)];
  }
  return out;
}

double fitness_mse(const InferenceEngine& engine, const Dataset& data) {
  if (data.rows() == 0) throw DataError("dataset is empty");
  auto columns_of = [&](const std::vector<std::string>& names) {
    std::vector<Eigen::Index> cols;
    for (const auto& name : names) {
      const Eigen::Index c = data.column(name);
      if (c < 0) throw DataError("dataset has no column for variable '" + name + "'");
      cols.push_back(c);
    }
    return cols;
  };
  const auto in_cols = columns_of(engine.input_names());
  const auto out_cols = columns_of(engine.output_names());

  std::vector<double> inputs(in_cols.size()), outputs(out_cols.size());
  double total = 0.0;
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (std::size_t i = 0; i < in_cols.size(); ++i) inputs[i] = data.values(r, in_cols[i]);
    engine.infer_crisp(inputs, outputs);
    for (std::size_t o = 0; o < out_cols.size(); ++o) {
      const double err = outputs[o] - data.values(r, out_cols[o]);
      total += err * err;
    }
  }
  return total / static_cast<double>(data.rows());
}

double fitness_mse(const FuzzySystem& sys, const Dataset& data) {
  return fitness_mse(InferenceEngine(sys), data);
}

TrainedSystem pso_train(const FuzzySystem& tmpl, const Dataset& data, const PsoConfig& cfg,
                        const PsoProgress& progress) {
  if (data.rows() == 0) throw DataError("dataset is empty");
  const auto encoded = encode(tmpl);
  const auto box = encoded.spec.box();
  auto objective = [&](const ParameterVector& x) {
    return fitness_mse(InferenceEngine(decode(tmpl, encoded.spec, x)), data);
  };
  auto fix = [&](const ParameterVector& x) { return repair(tmpl, encoded.spec, x); };
  auto outcome = pso_minimize<double>(objective, box, encoded.vector, cfg, fix, progress);

  TrainedSystem out{decode(tmpl, encoded.spec, outcome.best), {}};
  out.history.best_so_far = std::move(outcome.best_so_far);
  out.history.best = std::move(outcome.best);
  out.history.evaluations = outcome.evaluations;
  return out;
}

std::vector<SweepRow> sensitivity_sweep(const FuzzySystem& tmpl, const Dataset& data,
                                        const std::vector<int>& particle_counts,
                                        const std::vector<int>& eval_budgets,
                                        const std::vector<std::uint64_t>& seeds, const PsoConfig& base) {
  if (particle_counts.empty() || eval_budgets.empty() || seeds.empty())
    throw std::invalid_argument("sweep lists must be non-empty");
  std::vector<SweepRow> rows;
  for (int particles : particle_counts) {
    for (int budget : eval_budgets) {
      for (std::uint64_t seed : seeds) {
        PsoConfig cfg = base;
        cfg.swarm_size = particles;
        cfg.max_evaluations = budget;
        cfg.seed = seed;
        const auto trained = pso_train(tmpl, data, cfg);
        rows.push_back({particles, budget, seed, trained.history.best_so_far.back()});
      }
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "particles,budget,seed,final_mse\n";
  for (const auto& r : rows)
    out += std::to_string(r.particles) + "," + std::to_string(r.budget) + "," + std::to_string(r.seed) + "," +
           detail::format_number(r.final_mse) + "\n";
  return out;
}

std::string history_csv(const TrainingHistory& history) {
  std::string out = "evaluation,best_fitness\n";
  for (std::size_t i = 0; i < history.best_so_far.size(); ++i)
    out += std::to_string(i + 1) + "," + detail::format_number(history.best_so_far[i]) + "\n";
  return out;
}

}  // namespace aifml
