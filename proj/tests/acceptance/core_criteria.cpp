#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "aifml/learn.hpp"
#include "criteria.hpp"
#include "random_system.hpp"
#include "reference_mamdani.hpp"
#include "test_files.hpp"

namespace aifml::acceptance {
namespace {

constexpr double kOracleTolerance = 1e-3;  // fraction of output-domain width
constexpr double kSphereTarget = 1e-2;

FuzzySystem demo() { return parse_fml(testing::read_file(testing::data_path("aircon.fml"))); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome parser_round_trip() {
  std::mt19937_64 rng(50);
  int failures = 0;
  for (int i = 0; i < 50; ++i) {
    const auto sys = testing::random_system(rng);
    const auto text = serialize_fml(sys);
    const auto back = parse_fml(text);
    if (!(back == sys) || serialize_fml(back) != text) ++failures;
  }
  return {failures == 0, "50 systems, " + std::to_string(failures) + " failures"};
}

Outcome rejection_suite() {
  int documents = 0, rejected = 0;
  std::string first_miss;
  for (const auto& entry : std::filesystem::directory_iterator(std::filesystem::path(AIFML_TEST_DATA_DIR) / "invalid")) {
    ++documents;
    const auto text = testing::read_file(entry.path());
    const auto open = text.find("<!-- expect: ") + 13;
    const auto expect = text.substr(open, text.find(" -->", open) - open);
    bool ok = false;
    try {
      parse_fml(text);
    } catch (const FmlError& e) {
      for (const auto& d : e.diagnostics())
        if (d.line > 0 && d.message.find(expect) != std::string::npos) ok = true;
    }
    if (ok)
      ++rejected;
    else if (first_miss.empty())
      first_miss = entry.path().filename().string();
  }
  std::string detail = std::to_string(rejected) + "/" + std::to_string(documents) + " rejected with a located diagnostic";
  if (!first_miss.empty()) detail += ", first miss " + first_miss;
  return {documents >= 12 && rejected == documents, detail};
}

Outcome inference_oracle() {
  // Seed fixed before the first run of this criterion.
  std::mt19937_64 rng(20261016);
  std::map<std::string, int> failures{{"COG", 0}, {"MOM", 0}};
  int cases = 0;
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const auto sys = testing::random_system(rng);
    CrispInputs inputs;
    for (const auto* var : sys.inputs()) inputs[var->name] = testing::random_input(rng, *var);
    const auto result = infer(sys, inputs);
    const auto ref = testing::reference_mamdani(sys, inputs, 1'000'000);
    for (const auto& o : result.outputs) {
      ++cases;
      const double rel = std::abs(o.value - ref.at(o.variable).value) / sys.find_variable(o.variable)->width();
      worst = std::max(worst, rel);
      if (rel > kOracleTolerance || o.defaulted != ref.at(o.variable).defaulted)
        ++failures[std::string(to_string(sys.rule_base.defuzzifier))];
    }
  }
  std::ostringstream detail;
  detail << "100 systems, " << cases << " outputs, failures COG " << failures["COG"] << " MOM " << failures["MOM"]
         << ", worst |d|/width " << worst;
  return {failures["COG"] + failures["MOM"] == 0, detail.str()};
}

Outcome membership_fuzzing() {
  std::mt19937_64 rng(100000);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> shape(0, 5), decade(-6, 6);
  auto draw = [&] { return u(rng) * std::pow(10.0, decade(rng)); };
  int bad = 0;
  for (int i = 0; i < 100000; ++i) {
    MembershipFunction mf{static_cast<Shape>(shape(rng)), {}};
    if (mf.shape == Shape::gaussian) {
      mf.params = {draw(), std::abs(draw()) + 1e-300};
    } else {
      mf.params.resize(parameter_count(mf.shape));
      for (auto& p : mf.params) p = draw();
      std::sort(mf.params.begin(), mf.params.end());
      if (mf.shape == Shape::left_linear || mf.shape == Shape::right_linear)
        if (mf.params[0] == mf.params[1]) mf.params[1] = std::nextafter(mf.params[1], INFINITY);
    }
    const double x = i % 10 == 0 ? mf.params[static_cast<std::size_t>(i / 10) % mf.params.size()] : draw();
    const double d = membership_degree(mf, (rng() & 1) != 0, x);
    if (!std::isfinite(d) || d < 0.0 || d > 1.0) ++bad;
  }
  return {bad == 0, "100000 samples, " + std::to_string(bad) + " out of range or non-finite"};
}

Outcome pso_properties() {
  const auto tmpl = demo();
  const auto data = load_dataset(testing::read_file(testing::data_path("aircon.csv")), tmpl);
  const double initial = fitness_mse(tmpl, data);
  std::mt19937_64 rng(20);
  std::uniform_int_distribution<int> swarm(2, 40);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int det = 0, mono = 0, budget = 0, anchor = 0;
  for (int i = 0; i < 20; ++i) {
    PsoConfig cfg;
    cfg.swarm_size = swarm(rng);
    cfg.max_evaluations = cfg.swarm_size + static_cast<int>(rng() % 400);
    cfg.inertia = 0.3 + 0.6 * u(rng);
    cfg.cognitive = 0.5 + 1.5 * u(rng);
    cfg.social = 0.5 + 1.5 * u(rng);
    cfg.velocity_clamp_fraction = 0.01 + 0.99 * u(rng);
    cfg.seed = rng();
    int calls = 0;
    const auto a = pso_train(tmpl, data, cfg, [&](int, double) { ++calls; });
    const auto b = pso_train(tmpl, data, cfg);
    const auto& h = a.history.best_so_far;
    if (h == b.history.best_so_far && a.history.best == b.history.best && a.system == b.system) ++det;
    if (std::is_sorted(h.rbegin(), h.rend())) ++mono;
    if (calls == cfg.max_evaluations && a.history.evaluations == cfg.max_evaluations &&
        static_cast<int>(h.size()) == cfg.max_evaluations)
      ++budget;
    if (h.front() == initial && fitness_mse(a.system, data) <= initial) ++anchor;
  }
  std::ostringstream detail;
  detail << "20 configs: determinism " << det << ", monotone " << mono << ", budget " << budget << ", anchoring "
         << anchor;
  return {det == 20 && mono == 20 && budget == 20 && anchor == 20, detail.str()};
}

Outcome pso_efficacy() {
  const SearchBox<double> box{Eigen::VectorXd::Constant(10, -5.0), Eigen::VectorXd::Constant(10, 5.0)};
  const Eigen::VectorXd anchor = Eigen::VectorXd::Constant(10, 4.0);
  int hits = 0;
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PsoConfig cfg;
    cfg.seed = seed;
    const auto out = pso_minimize<double>([](const Eigen::VectorXd& x) { return x.squaredNorm(); }, box, anchor, cfg,
                                          clamp_to_box(box));
    if (out.best_fitness <= kSphereTarget) ++hits;
    worst = std::max(worst, out.best_fitness);
  }
  std::ostringstream detail;
  detail << hits << "/10 seeds reach " << kSphereTarget << ", worst " << worst;
  return {hits >= 9, detail.str()};
}

Outcome sweep_reproduction() {
  const auto start = std::chrono::steady_clock::now();
  const auto tmpl = demo();
  const auto data = load_dataset(testing::read_file(testing::data_path("aircon.csv")), tmpl);
  std::vector<std::uint64_t> seeds(11);
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = i;
  const auto full = sensitivity_sweep(tmpl, data, {10, 20, 40}, {500, 2000}, seeds);
  {
    std::ofstream out("acceptance_sweep.csv", std::ios::binary);
    out << sweep_csv(full);
  }
  std::map<std::pair<int, std::uint64_t>, double> at500, at2000;
  std::map<int, std::vector<double>> finals;
  for (const auto& row : full) {
    (row.budget == 500 ? at500 : at2000)[{row.particles, row.seed}] = row.final_mse;
    if (row.budget == 2000) finals[row.particles].push_back(row.final_mse);
  }
  int prefix_ok = 0;
  for (const auto& [key, mse] : at2000)
    if (mse <= at500.at(key)) ++prefix_ok;
  const double m10 = median(finals[10]), m20 = median(finals[20]), m40 = median(finals[40]);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream detail;
  detail << "median MSE 10/20/40 particles " << m10 << " / " << m20 << " / " << m40 << ", MSE(2000) <= MSE(500) on "
         << prefix_ok << "/33, " << seconds << " s, acceptance_sweep.csv";
  return {m40 <= m10 && prefix_ok == 33 && seconds <= 600.0, detail.str()};
}

}  // namespace

void register_core(std::vector<Criterion>& out) {
  out.push_back({"parser round-trip", parser_round_trip});
  out.push_back({"rejection suite", rejection_suite});
  out.push_back({"inference oracle", inference_oracle});
  out.push_back({"membership fuzzing", membership_fuzzing});
  out.push_back({"pso properties", pso_properties});
  out.push_back({"pso efficacy", pso_efficacy});
  out.push_back({"sweep reproduction", sweep_reproduction});
}

}  // namespace aifml::acceptance
