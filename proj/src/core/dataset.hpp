#ifndef WDDP_CORE_DATASET_HPP
#define WDDP_CORE_DATASET_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rng.hpp"

namespace wddp {

// Binary classification dataset with rows inside the unit l2 ball (the
// precondition for the G=1 logistic gradient certificate).
struct LabeledDataset {
  std::vector<double> features;  // row-major, rows x cols
  std::vector<int> labels;       // values in {0, 1}
  std::int64_t rows = 0;
  std::int64_t cols = 0;

  std::span<const double> row(std::int64_t i) const {
    return {features.data() + i * cols, static_cast<std::size_t>(cols)};
  }

  double max_row_norm() const;

  // Throws ValidationError naming the first offending row when some row has
  // l2 norm above 1 + tol or a label outside {0, 1}.
  void validate_normalized(double tol = 1e-12) const;
};

struct CsvSpec {
  std::string path;
  std::string label_column;
  std::string positive_label;
  std::vector<std::string> categorical_columns;
  // Columns to min-max scale to [0,1]. Absent = all numeric columns; an
  // explicit empty list disables scaling.
  std::optional<std::vector<std::string>> minmax_columns;
  char delimiter = ',';
  double train_fraction = 0.8;
  // Row normalization is part of the ingestion contract; the switch exists so
  // certificate checks can be pointed at deliberately bad data.
  bool normalize_rows = true;
};

struct SyntheticSpec {
  std::int64_t n = 2000;
  int dim = 10;
  double separation = 4.0;   // distance between the two cloud centers
  double cluster_std = 1.0;
  double positive_fraction = 0.5;
  double train_fraction = 0.8;
};

struct LoadReport {
  std::vector<std::string> warnings;
  std::vector<std::string> dropped_columns;
  std::vector<std::string> feature_names;
};

// Reads a delimited text file with a header row: declared categorical columns
// are one-hot encoded, scaled columns are min-max mapped to [0,1], constant
// columns are dropped with a warning, labels are mapped to {0,1}, and finally
// every row is rescaled by the maximum row norm.
LabeledDataset load_csv(const CsvSpec& spec, LoadReport* report = nullptr);

// Two Gaussian clouds centered at +/- (separation/2) * u for a seed-derived
// unit direction u, then row-normalized. Labels follow the cloud.
LabeledDataset make_two_gaussians(const SyntheticSpec& spec, Rng& rng);

// Deterministic shuffled split; both parts non-empty or ValidationError.
std::pair<LabeledDataset, LabeledDataset> train_test_split(const LabeledDataset& data,
                                                           double fraction, Rng& rng);

// Divides every row by the maximum row norm so the largest row lands exactly
// on the unit sphere. Idempotent: a second call sees max norm 1 and leaves
// the data untouched.
void normalize_rows_to_unit_ball(LabeledDataset& data);

// Copies the selected rows into a new dataset.
LabeledDataset take_rows(const LabeledDataset& data, std::span<const std::int32_t> indices);

}  // namespace wddp

#endif  // WDDP_CORE_DATASET_HPP
