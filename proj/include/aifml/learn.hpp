// PSO tuning of membership-function parameters against a dataset.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "aifml/dataset.hpp"
#include "aifml/fml.hpp"
#include "aifml/inference.hpp"
#include "aifml/pso.hpp"

namespace aifml {

/// One tunable membership-function parameter and its search bounds.
struct ParameterSlot {
  std::size_t variable = 0;
  std::size_t term = 0;
  std::size_t param = 0;
  double lower = 0.0;
  double upper = 0.0;
  std::string path;  // e.g. "variables[0].terms[1].mf.params[2]"
};

/// Every tunable parameter of a system, in document order.
struct ParameterSpec {
  std::vector<ParameterSlot> slots;

  std::size_t size() const { return slots.size(); }
  SearchBox<double> box() const;
};

using ParameterVector = Eigen::VectorXd;

struct EncodedSystem {
  ParameterSpec spec;
  ParameterVector vector;
};

/// Bounds are the owning variable's domain; a gaussian width is bounded to
/// [1e-6 (hi - lo), hi - lo] (widened to include the current width).
EncodedSystem encode(const FuzzySystem& sys);

/// Makes `v` feasible: clamp to bounds, sort each ordered parameter group,
/// keep linear-shape breakpoints strictly apart and gaussian widths at or
/// above their lower bound. Idempotent.
ParameterVector repair(const FuzzySystem& tmpl, const ParameterSpec& spec, ParameterVector v);

/// Writes the repaired `v` into a copy of `tmpl`. The result validates.
/// Throws std::invalid_argument on a length mismatch.
FuzzySystem decode(const FuzzySystem& tmpl, const ParameterSpec& spec, const ParameterVector& v);

/// Mean over rows of the squared output error, summed over outputs.
/// Throws DataError on an empty dataset or a missing column.
double fitness_mse(const FuzzySystem& sys, const Dataset& data);
double fitness_mse(const InferenceEngine& engine, const Dataset& data);

struct TrainingHistory {
  /// Best fitness after each evaluation, non-increasing.
  std::vector<double> best_so_far;
  ParameterVector best;
  int evaluations = 0;
};

struct TrainedSystem {
  FuzzySystem system;
  TrainingHistory history;
};

/// Global-best PSO over encode(tmpl); particle 0 is the template itself.
TrainedSystem pso_train(const FuzzySystem& tmpl, const Dataset& data, const PsoConfig& cfg,
                        const PsoProgress& progress = {});

struct SweepRow {
  int particles = 0;
  int budget = 0;
  std::uint64_t seed = 0;
  double final_mse = 0.0;
};

/// One pso_train per (particles, budget, seed) cell, in that nesting order.
/// Coefficients come from `base`.
std::vector<SweepRow> sensitivity_sweep(const FuzzySystem& tmpl, const Dataset& data,
                                        const std::vector<int>& particle_counts,
                                        const std::vector<int>& eval_budgets,
                                        const std::vector<std::uint64_t>& seeds,
                                        const PsoConfig& base = {});

/// "particles,budget,seed,final_mse" table.
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// "evaluation,best_fitness" table, evaluations numbered from 1.
std::string history_csv(const TrainingHistory& history);

}  // namespace aifml
