#include "aifml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "aifml/learn.hpp"
#include "aifml/pso.hpp"
#include "number_format.hpp"

namespace aifml {
namespace {

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

Dataset take_rows(const Dataset& data, const std::vector<Eigen::Index>& rows) {
  Dataset out{data.columns, Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), data.values.cols())};
  for (std::size_t i = 0; i < rows.size(); ++i) out.values.row(static_cast<Eigen::Index>(i)) = data.values.row(rows[i]);
  return out;
}

}  // namespace

Eigen::Index Dataset::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<Eigen::Index>(i);
  return -1;
}

Dataset load_dataset(std::string_view csv, const FuzzySystem& sys) {
  const auto lines = lines_of(csv);
  if (lines.empty()) throw DataError("dataset is empty");

  const auto header = split_line(lines.front());
  // file column -> dataset column (system declaration order)
  std::vector<Eigen::Index> target(header.size(), -1);
  std::vector<bool> seen(sys.variables.size(), false);
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = trim(header[c]);
    const int v = sys.variable_index(name);
    if (v < 0) throw DataError("column '" + std::string(name) + "' does not name a system variable");
    if (seen[static_cast<std::size_t>(v)]) throw DataError("column '" + std::string(name) + "' appears twice");
    seen[static_cast<std::size_t>(v)] = true;
    target[c] = v;
  }
  for (std::size_t v = 0; v < sys.variables.size(); ++v) {
    if (!seen[v]) {
      const auto& var = sys.variables[v];
      throw DataError(std::string("missing ") + (var.role == Role::input ? "input" : "output") + " column '" +
                      var.name + "'");
    }
  }
  if (lines.size() < 2) throw DataError("dataset has a header but no rows");

  Dataset data;
  for (const auto& var : sys.variables) data.columns.push_back(var.name);
  data.values.resize(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(header.size()));
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_line(lines[r]);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(r) + " has " + std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto value = detail::parse_number(cells[c]);
      if (!value)
        throw DataError("non-numeric cell '" + std::string(trim(cells[c])) + "' at (" + std::to_string(r) + "," +
                        std::to_string(c + 1) + ")");
      data.values(static_cast<Eigen::Index>(r - 1), target[c]) = *value;
    }
  }
  return data;
}

std::string write_dataset_csv(const Dataset& data) {
  std::string out;
  for (std::size_t c = 0; c < data.columns.size(); ++c) out += (c ? "," : "") + data.columns[c];
  out += '\n';
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.values.cols(); ++c)
      out += (c ? "," : "") + detail::format_number(data.values(r, c));
    out += '\n';
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train fraction must lie in (0, 1)");
  if (data.rows() < 2) throw DataError("split needs at least 2 rows");
  const auto n = static_cast<std::size_t>(data.rows());
  const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n)));
  if (n_train == 0) throw DataError("empty training set");
  if (n_train >= n) throw DataError("empty test set");

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::vector<Eigen::Index> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<Eigen::Index> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return {take_rows(data, train), take_rows(data, test)};
}

double rmse(const FuzzySystem& sys, const Dataset& data) { return std::sqrt(fitness_mse(sys, data)); }

double demo_target(double temp, double humidity) {
  return 10.0 / (1.0 + std::exp(-(0.45 * (temp - 27.0) + 0.05 * (humidity - 55.0))));
}

Dataset make_demo_dataset(std::size_t rows, std::uint64_t seed) {
  ParticleStream rng(seed, 0);
  auto round3 = [](double x) { return std::round(x * 1000.0) / 1000.0; };
  Dataset data{{"temp", "humidity", "ac_level"}, Eigen::MatrixXd(static_cast<Eigen::Index>(rows), 3)};
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(rows); ++r) {
    const double temp = round3(10.0 + 30.0 * rng.uniform());
    const double humidity = round3(20.0 + 75.0 * rng.uniform());
    const double u1 = rng.uniform(), u2 = rng.uniform();
    const double noise = std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
    data.values(r, 0) = temp;
    data.values(r, 1) = humidity;
    data.values(r, 2) = round3(std::clamp(demo_target(temp, humidity) + 0.25 * noise, 0.0, 10.0));
  }
  return data;
}

}  // namespace aifml
