// Global-best particle swarm minimization over a box.
//
// Each particle draws from its own generator stream, so results depend only
// on (objective, box, anchor, config) and never on evaluation scheduling.
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace aifml {

struct PsoConfig {
  int swarm_size = 20;
  /// Fitness-evaluation budget; the stopping criterion.
  int max_evaluations = 2000;
  double inertia = 0.7298;
  double cognitive = 1.49618;
  double social = 1.49618;
  /// Velocity limit per dimension as a fraction of that dimension's width.
  double velocity_clamp_fraction = 0.1;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument when the config breaks its invariants.
void check_config(const PsoConfig& cfg);

/// Uniform [0, 1) doubles from mt19937_64. The generator is seeded through
/// std::seed_seq with (seed low word, seed high word, stream index), and the
/// conversion uses the top 53 bits, so the sequence is identical on every
/// conforming standard library.
class ParticleStream {
 public:
  ParticleStream(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
    engine_.seed(seq);
  }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

template <typename Scalar = double>
struct SearchBox {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector lower;
  Vector upper;

  Eigen::Index dims() const { return lower.size(); }
};

template <typename Scalar = double>
struct PsoOutcome {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector best;
  Scalar best_fitness{};
  /// Best fitness seen after each evaluation; size == evaluations.
  std::vector<Scalar> best_so_far;
  int evaluations = 0;
};

/// Called after every evaluation with (evaluations so far, best fitness).
using PsoProgress = std::function<void(int, double)>;

/// Minimizes `objective` over `box`. Particle 0 starts at `anchor`; the rest
/// start uniformly in the box. `repair` maps every candidate position to a
/// feasible one before evaluation (it receives and returns a Vector).
template <typename Scalar, typename Objective, typename Repair>
PsoOutcome<Scalar> pso_minimize(Objective&& objective, const SearchBox<Scalar>& box,
                                const typename SearchBox<Scalar>::Vector& anchor, const PsoConfig& cfg,
                                Repair&& repair, const PsoProgress& progress = {}) {
  using Vector = typename SearchBox<Scalar>::Vector;
  check_config(cfg);
  const Eigen::Index dims = box.dims();
  if (dims == 0 || box.upper.size() != dims || anchor.size() != dims)
    throw std::invalid_argument("search box and anchor dimensions disagree");
  if ((box.upper.array() < box.lower.array()).any()) throw std::invalid_argument("empty search box");

  const auto n = static_cast<std::size_t>(cfg.swarm_size);
  const Vector vmax = Scalar(cfg.velocity_clamp_fraction) * (box.upper - box.lower);
  std::vector<ParticleStream> streams;
  streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) streams.emplace_back(cfg.seed, static_cast<std::uint32_t>(i));

  std::vector<Vector> position(n), velocity(n, Vector::Zero(dims)), personal(n);
  std::vector<Scalar> personal_fitness(n);
  PsoOutcome<Scalar> out;
  out.best_so_far.reserve(static_cast<std::size_t>(cfg.max_evaluations));

  auto record = [&](Scalar fitness) {
    const Scalar best = out.best_so_far.empty() ? fitness : std::min(out.best_so_far.back(), fitness);
    out.best_so_far.push_back(best);
    ++out.evaluations;
    if (progress) progress(out.evaluations, static_cast<double>(best));
  };

  std::size_t global = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Vector x = anchor;
    if (i > 0) {
      for (Eigen::Index d = 0; d < dims; ++d)
        x[d] = box.lower[d] + Scalar(streams[i].uniform()) * (box.upper[d] - box.lower[d]);
    }
    position[i] = repair(x);
    personal[i] = position[i];
    personal_fitness[i] = objective(position[i]);
    record(personal_fitness[i]);
    if (personal_fitness[i] < personal_fitness[global]) global = i;
  }
  Vector global_best = personal[global];
  Scalar global_fitness = personal_fitness[global];

  while (out.evaluations < cfg.max_evaluations) {
    const std::size_t active =
        std::min(n, static_cast<std::size_t>(cfg.max_evaluations - out.evaluations));
    for (std::size_t i = 0; i < active; ++i) {
      auto& v = velocity[i];
      auto& x = position[i];
      for (Eigen::Index d = 0; d < dims; ++d) {
        const Scalar r1(streams[i].uniform()), r2(streams[i].uniform());
        const Scalar next = Scalar(cfg.inertia) * v[d] + Scalar(cfg.cognitive) * r1 * (personal[i][d] - x[d]) +
                            Scalar(cfg.social) * r2 * (global_best[d] - x[d]);
        v[d] = std::clamp(next, -vmax[d], vmax[d]);
      }
      x = repair(Vector(x + v));
    }
    // Evaluations are independent; the reduction below is serial and ordered.
    for (std::size_t i = 0; i < active; ++i) {
      const Scalar fitness = objective(position[i]);
      record(fitness);
      if (fitness < personal_fitness[i]) {
        personal_fitness[i] = fitness;
        personal[i] = position[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (personal_fitness[i] < global_fitness) {
        global_fitness = personal_fitness[i];
        global_best = personal[i];
      }
    }
  }
  out.best = global_best;
  out.best_fitness = global_fitness;
  return out;
}

/// Box-clamping repair, for objectives without further structure.
template <typename Scalar>
auto clamp_to_box(const SearchBox<Scalar>& box) {
  return [&box](const typename SearchBox<Scalar>::Vector& x) -> typename SearchBox<Scalar>::Vector {
    return x.cwiseMax(box.lower).cwiseMin(box.upper);
  };
}

}  // namespace aifml
