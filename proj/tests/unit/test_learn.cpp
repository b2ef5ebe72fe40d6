#include <random>

#include "aifml/learn.hpp"
#include "doctest.h"
#include "random_system.hpp"
#include "reference_pso.hpp"
#include "test_files.hpp"

using namespace aifml;

namespace {

FuzzySystem demo() { return parse_fml(testing::read_file(testing::data_path("aircon.fml"))); }

double sphere(const Eigen::VectorXd& x) { return x.squaredNorm(); }

SearchBox<double> cube(int dims, double half) {
  return {Eigen::VectorXd::Constant(dims, -half), Eigen::VectorXd::Constant(dims, half)};
}

// Outputs of `sys` on a grid of inputs, shifted by `offset`.
Dataset labelled(const FuzzySystem& sys, double offset) {
  Dataset d;
  for (const auto& v : sys.variables) d.columns.push_back(v.name);
  d.values.resize(25, 3);
  int r = 0;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j, ++r) {
      const double t = 2.0 + 9.0 * i, h = 5.0 + 22.0 * j;
      d.values(r, 0) = t;
      d.values(r, 1) = h;
      d.values(r, 2) = infer(sys, {{"temp", t}, {"humidity", h}}).outputs[0].value + offset;
    }
  }
  return d;
}

}  // namespace

TEST_CASE("encode lists every parameter in document order") {
  // two variables with three triangular terms each
  auto sys = demo();
  sys.variables.erase(sys.variables.begin() + 1);
  for (auto& rule : sys.rule_base.rules) rule.antecedent.resize(1);
  REQUIRE(validate(sys).empty());
  const auto enc = encode(sys);
  REQUIRE(enc.vector.size() == 18);
  REQUIRE(enc.spec.size() == 18);
  Eigen::Index k = 0;
  for (std::size_t v = 0; v < sys.variables.size(); ++v) {
    for (std::size_t t = 0; t < sys.variables[v].terms.size(); ++t) {
      for (std::size_t p = 0; p < 3; ++p, ++k) {
        const auto& slot = enc.spec.slots[static_cast<std::size_t>(k)];
        CHECK(slot.variable == v);
        CHECK(slot.term == t);
        CHECK(slot.param == p);
        CHECK(slot.lower == sys.variables[v].lo);
        CHECK(slot.upper == sys.variables[v].hi);
        CHECK(enc.vector[k] == sys.variables[v].terms[t].mf.params[p]);
      }
    }
  }
  CHECK(enc.spec.slots[5].path == "variables[0].terms[1].mf.params[2]");
  CHECK(encode(demo()).vector.size() == 27);
  CHECK(decode(sys, enc.spec, enc.vector) == sys);
}

TEST_CASE("a single triangular term encodes to three values") {
  FuzzySystem sys;
  sys.name = "one";
  LinguisticVariable x{"x", Role::input, 0, 10, "", std::nullopt, {{"a", {Shape::triangular, {1, 2, 3}}, false}}};
  LinguisticVariable y{"y", Role::output, 0, 1, "", std::nullopt, {{"b", {Shape::singleton, {0.5}}, false}}};
  sys.variables = {x, y};
  sys.rule_base.rules.push_back({"r", 1.0, Connector::and_, {{"x", "a"}}, {{"y", "b"}}});
  // the singleton output is tunable too
  CHECK(encode(sys).vector.size() == 4);
  sys.variables[1].terms[0].mf = {Shape::triangular, {0, 0.5, 1}};
  sys.variables.erase(sys.variables.begin() + 1);
  CHECK(encode(sys).vector.size() == 3);
}

TEST_CASE("repair sorts ordered groups") {
  const auto sys = demo();
  auto enc = encode(sys);
  enc.vector.head(3) << 9, 2, 5;
  const auto fixed = repair(sys, enc.spec, enc.vector);
  CHECK(fixed.head(3) == Eigen::Vector3d(2, 5, 9));
  const auto decoded = decode(sys, enc.spec, enc.vector);
  CHECK(decoded.variables[0].terms[0].mf.params == std::vector<double>{2, 5, 9});

  // in bounds and ordered: untouched
  CHECK(repair(sys, enc.spec, encode(sys).vector) == encode(sys).vector);
  // clamped to the lower bound before sorting
  enc.vector.head(3) << 9, -7, 5;
  CHECK(repair(sys, enc.spec, enc.vector).head(3) == Eigen::Vector3d(0, 5, 9));
}

TEST_CASE("decode of any vector validates and repair is idempotent") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 1.0);
  testing::RandomSystemOptions opt;
  for (int i = 0; i < 200; ++i) {
    const auto sys = testing::random_system(rng, opt);
    const auto enc = encode(sys);
    CHECK(decode(sys, enc.spec, enc.vector) == sys);
    Eigen::VectorXd v(enc.vector.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      const auto& s = enc.spec.slots[static_cast<std::size_t>(k)];
      v[k] = s.lower + (s.upper - s.lower) * (0.5 + noise(rng));
    }
    const auto once = repair(sys, enc.spec, v);
    CHECK(repair(sys, enc.spec, once) == once);
    const auto out = decode(sys, enc.spec, v);
    const auto violations = validate(out);
    CHECK(violations.empty());
    if (!violations.empty()) MESSAGE(violations[0].path << ": " << violations[0].message);
  }
  CHECK_THROWS_AS(decode(demo(), encode(demo()).spec, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("fitness is the mean squared output error") {
  const auto sys = demo();
  CHECK(fitness_mse(sys, labelled(sys, 0.0)) == 0.0);
  CHECK(fitness_mse(sys, labelled(sys, 0.75)) == doctest::Approx(0.5625).epsilon(1e-12));
  CHECK(rmse(sys, labelled(sys, 0.75)) == doctest::Approx(0.75).epsilon(1e-12));
  // two rows composed by hand from separate inference calls
  const double y1 = infer(sys, {{"temp", 35.0}, {"humidity", 80.0}}).outputs[0].value;
  const double y2 = infer(sys, {{"temp", 12.0}, {"humidity", 30.0}}).outputs[0].value;
  Dataset two{{"temp", "humidity", "ac_level"}, Eigen::MatrixXd(2, 3)};
  two.values << 35, 80, 7.5, 12, 30, 1.0;
  CHECK(fitness_mse(sys, two) == doctest::Approx(((y1 - 7.5) * (y1 - 7.5) + (y2 - 1.0) * (y2 - 1.0)) / 2).epsilon(1e-14));
  Dataset empty{{"temp", "humidity", "ac_level"}, Eigen::MatrixXd(0, 3)};
  CHECK_THROWS_AS(fitness_mse(sys, empty), DataError);
}

TEST_CASE("pso minimizes the sphere") {
  const auto box = cube(10, 5.0);
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PsoConfig cfg;
    cfg.seed = seed;
    const auto out = pso_minimize<double>(sphere, box, Eigen::VectorXd::Constant(10, 4.0), cfg, clamp_to_box(box));
    if (out.best_fitness <= 1e-2) ++hits;
  }
  CHECK(hits >= 9);
}

TEST_CASE("a textbook pso reaches the same sphere target") {
  const std::vector<double> lo(10, -5.0), hi(10, 5.0);
  auto f = [](const std::vector<double>& x) {
    double s = 0;
    for (double v : x) s += v * v;
    return s;
  };
  int hits = 0;
  for (std::uint32_t seed = 0; seed < 10; ++seed) {
    const auto r = testing::reference_pso(f, lo, hi, 20, 2000, seed);
    CHECK(r.evaluations == 2000);
    if (r.best_fitness <= 1e-2) ++hits;
  }
  CHECK(hits >= 9);
}

TEST_CASE("pso bookkeeping") {
  const auto box = cube(4, 3.0);
  const Eigen::VectorXd anchor = Eigen::VectorXd::Constant(4, 1.0);
  PsoConfig cfg;
  cfg.swarm_size = 7;
  cfg.max_evaluations = 103;
  cfg.seed = 99;
  std::vector<double> first;
  int calls = 0;
  auto objective = [&](const Eigen::VectorXd& x) {
    if (calls++ == 0) first.push_back(sphere(x));
    return sphere(x);
  };
  int last_progress = 0;
  const auto out = pso_minimize<double>(objective, box, anchor, cfg, clamp_to_box(box),
                                        [&](int n, double) { last_progress = n; });
  CHECK(out.evaluations == 103);
  CHECK(calls == 103);
  CHECK(last_progress == 103);
  CHECK(out.best_so_far.size() == 103);
  CHECK(first[0] == 4.0);  // particle 0 sits on the anchor
  CHECK(out.best_so_far[0] == 4.0);
  for (std::size_t i = 1; i < out.best_so_far.size(); ++i) CHECK(out.best_so_far[i] <= out.best_so_far[i - 1]);
  CHECK(out.best_fitness == out.best_so_far.back());
  CHECK(sphere(out.best) == out.best_fitness);
  CHECK(((out.best.array() >= box.lower.array()) && (out.best.array() <= box.upper.array())).all());

  const auto again = pso_minimize<double>(sphere, box, anchor, cfg, clamp_to_box(box));
  CHECK(again.best == out.best);
  CHECK(again.best_so_far == out.best_so_far);
  cfg.seed = 100;
  CHECK(pso_minimize<double>(sphere, box, anchor, cfg, clamp_to_box(box)).best_so_far != out.best_so_far);
}

TEST_CASE("pso rejects broken configurations") {
  const auto box = cube(2, 1.0);
  const Eigen::VectorXd anchor = Eigen::VectorXd::Zero(2);
  PsoConfig cfg;
  cfg.swarm_size = 1;
  CHECK_THROWS_AS(pso_minimize<double>(sphere, box, anchor, cfg, clamp_to_box(box)), std::invalid_argument);
  cfg = {};
  cfg.max_evaluations = 5;
  CHECK_THROWS_AS(pso_minimize<double>(sphere, box, anchor, cfg, clamp_to_box(box)), std::invalid_argument);
  cfg = {};
  cfg.velocity_clamp_fraction = 0.0;
  CHECK_THROWS_AS(pso_minimize<double>(sphere, box, anchor, cfg, clamp_to_box(box)), std::invalid_argument);
}

TEST_CASE("a longer budget replays the shorter one") {
  const auto box = cube(3, 2.0);
  const Eigen::VectorXd anchor = Eigen::VectorXd::Constant(3, 1.5);
  PsoConfig shortc, longc;
  shortc.max_evaluations = 500;
  longc.max_evaluations = 2000;
  const auto a = pso_minimize<double>(sphere, box, anchor, shortc, clamp_to_box(box));
  const auto b = pso_minimize<double>(sphere, box, anchor, longc, clamp_to_box(box));
  REQUIRE(b.best_so_far.size() == 2000);
  CHECK(std::equal(a.best_so_far.begin(), a.best_so_far.end(), b.best_so_far.begin()));
  CHECK(b.best_fitness <= a.best_fitness);
}

TEST_CASE("pso_train never does worse than the template") {
  const auto sys = demo();
  const auto data = make_demo_dataset(40, 5);
  PsoConfig cfg;
  cfg.max_evaluations = 200;
  cfg.seed = 1;
  const auto trained = pso_train(sys, data, cfg);
  CHECK(validate(trained.system).empty());
  CHECK(trained.history.evaluations == 200);
  CHECK(trained.history.best_so_far.front() == fitness_mse(sys, data));
  CHECK(fitness_mse(trained.system, data) == doctest::Approx(trained.history.best_so_far.back()).epsilon(1e-12));
  CHECK(fitness_mse(trained.system, data) <= fitness_mse(sys, data));

  const auto csv = history_csv(trained.history);
  CHECK(csv.rfind("evaluation,best_fitness\n1,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 201);
}

TEST_CASE("sweep rows nest particles, budget, seed") {
  const auto rows = sensitivity_sweep(demo(), make_demo_dataset(20, 2), {4, 6}, {24, 36}, {0, 1});
  REQUIRE(rows.size() == 8);
  CHECK(rows[0].particles == 4);
  CHECK(rows[0].budget == 24);
  CHECK(rows[1].seed == 1);
  CHECK(rows[2].budget == 36);
  CHECK(rows[4].particles == 6);
  const auto csv = sweep_csv(rows);
  CHECK(csv.rfind("particles,budget,seed,final_mse\n4,24,0,", 0) == 0);
}

TEST_CASE("initialization-only budget returns the best initial particle") {
  const auto sys = demo();
  const auto data = make_demo_dataset(30, 6);
  PsoConfig cfg;
  cfg.swarm_size = 12;
  cfg.max_evaluations = 12;
  const auto trained = pso_train(sys, data, cfg);
  const auto& h = trained.history.best_so_far;
  CHECK(trained.history.evaluations == 12);
  CHECK(h.back() == *std::min_element(h.begin(), h.end()));
  CHECK(fitness_mse(trained.system, data) <= fitness_mse(sys, data));
}

TEST_CASE("a one-cell sweep is a direct pso_train") {
  const auto sys = demo();
  const auto data = make_demo_dataset(30, 6);
  PsoConfig cfg;
  cfg.swarm_size = 8;
  cfg.max_evaluations = 80;
  cfg.seed = 21;
  const auto rows = sensitivity_sweep(sys, data, {8}, {80}, {21});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].final_mse == pso_train(sys, data, cfg).history.best_so_far.back());
}

TEST_CASE("training on the bundled data beats the hand-built KB") {
  const auto sys = demo();
  const auto data = load_dataset(testing::read_file(testing::data_path("aircon.csv")), sys);
  const double untrained = rmse(sys, data);
  int better = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PsoConfig cfg;
    cfg.seed = seed;
    if (rmse(pso_train(sys, data, cfg).system, data) < untrained) ++better;
  }
  CHECK(better >= 9);
}
