// Training data: CSV ingestion, splitting, error metrics and the bundled
// air-conditioner demo assets.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aifml/fml.hpp"

namespace aifml {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rows of crisp values. Columns carry the names of the system variables
/// they were matched to, in the system's declaration order.
struct Dataset {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;  // rows x columns

  Eigen::Index rows() const { return values.rows(); }
  /// Column position of `name`, or -1.
  Eigen::Index column(std::string_view name) const;
};

/// Parses comma-separated text with a header row. Columns are matched to the
/// variables of `sys` by exact name in any order; missing or extra columns,
/// non-numeric cells, ragged rows and empty input are DataErrors. Row and
/// column numbers in messages are 1-based and count data rows only.
Dataset load_dataset(std::string_view csv, const FuzzySystem& sys);

/// CSV text with LF endings and shortest round-trip numbers.
std::string write_dataset_csv(const Dataset& data);

/// Seeded shuffle then split; |train| = round(train_fraction * rows).
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed);

/// Square root of fitness_mse().
double rmse(const FuzzySystem& sys, const Dataset& data);

/// Ground truth behind the bundled demo dataset: a logistic comfort curve
/// 10 / (1 + exp(-(0.45 (temp - 27) + 0.05 (humidity - 55)))).
double demo_target(double temp, double humidity);

/// Demo rows: temp ~ U[10, 40], humidity ~ U[20, 95], ac_level =
/// demo_target + N(0, 0.25^2) clamped to [0, 10]; values rounded to 3
/// decimals. Columns are temp, humidity, ac_level.
Dataset make_demo_dataset(std::size_t rows, std::uint64_t seed);

}  // namespace aifml
