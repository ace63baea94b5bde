#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "errors.hpp"

namespace wddp {

namespace {

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream stream(line);
  while (std::getline(stream, field, delimiter)) fields.push_back(field);
  if (!line.empty() && line.back() == delimiter) fields.emplace_back();
  return fields;
}

std::string strip(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

double LabeledDataset::max_row_norm() const {
  double max_norm = 0.0;
  for (std::int64_t i = 0; i < rows; ++i) {
    double sq = 0.0;
    for (const double v : row(i)) sq += v * v;
    max_norm = std::max(max_norm, std::sqrt(sq));
  }
  return max_norm;
}

void LabeledDataset::validate_normalized(double tol) const {
  for (std::int64_t i = 0; i < rows; ++i) {
    double sq = 0.0;
    for (const double v : row(i)) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > 1.0 + tol) {
      throw ValidationError("dataset row " + std::to_string(i) + " has l2 norm " +
                            std::to_string(norm) + " > 1");
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw ValidationError("dataset label at row " + std::to_string(i) + " is not binary");
    }
  }
}

void normalize_rows_to_unit_ball(LabeledDataset& data) {
  const double max_norm = data.max_row_norm();
  if (max_norm == 0.0 || std::abs(max_norm - 1.0) <= 1e-12) return;
  for (double& v : data.features) v /= max_norm;
}

LabeledDataset take_rows(const LabeledDataset& data, std::span<const std::int32_t> indices) {
  LabeledDataset out;
  out.rows = static_cast<std::int64_t>(indices.size());
  out.cols = data.cols;
  out.features.reserve(indices.size() * static_cast<std::size_t>(data.cols));
  out.labels.reserve(indices.size());
  for (const std::int32_t i : indices) {
    const auto r = data.row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(data.labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

LabeledDataset load_csv(const CsvSpec& spec, LoadReport* report) {
  std::ifstream file(spec.path);
  if (!file) throw IoError("cannot open dataset file: " + spec.path);

  std::string line;
  if (!std::getline(file, line)) throw ParseError("empty dataset file: " + spec.path);
  std::vector<std::string> header = split_line(line, spec.delimiter);
  for (auto& name : header) name = strip(name);
  if (header.empty()) throw ParseError("no header columns in: " + spec.path);

  std::int64_t label_index = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == spec.label_column) label_index = static_cast<std::int64_t>(c);
  }
  if (label_index < 0) {
    throw ParseError("label column '" + spec.label_column + "' not found in: " + spec.path);
  }
  const std::set<std::string> categorical(spec.categorical_columns.begin(),
                                          spec.categorical_columns.end());
  for (const auto& name : spec.categorical_columns) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw ParseError("categorical column '" + name + "' not found in: " + spec.path);
    }
  }

  std::vector<std::vector<std::string>> records;
  std::int64_t line_number = 1;
  while (std::getline(file, line)) {
    ++line_number;
    if (strip(line).empty()) continue;
    std::vector<std::string> fields = split_line(line, spec.delimiter);
    if (fields.size() != header.size()) {
      throw ParseError("row " + std::to_string(line_number) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(header.size()) + " in: " + spec.path);
    }
    records.push_back(std::move(fields));
  }
  if (records.empty()) throw ParseError("dataset has a header but no rows: " + spec.path);

  // Label mapping: exactly two distinct values, one of them the positive one.
  std::vector<int> labels(records.size());
  std::set<std::string> label_values;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const std::string value = strip(records[r][static_cast<std::size_t>(label_index)]);
    label_values.insert(value);
    if (label_values.size() > 2) {
      throw ParseError("label column has more than two distinct values; third value '" + value +
                       "' at row " + std::to_string(r + 2));
    }
    labels[r] = (value == spec.positive_label) ? 1 : 0;
  }
  if (label_values.find(spec.positive_label) == label_values.end()) {
    throw ParseError("positive label '" + spec.positive_label + "' never occurs in column '" +
                     spec.label_column + "'");
  }

  // Assemble feature columns: categorical ones expand to sorted one-hot
  // indicators, numeric ones parse as doubles.
  struct Column {
    std::string name;
    std::vector<double> values;
  };
  std::vector<Column> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (static_cast<std::int64_t>(c) == label_index) continue;
    if (categorical.count(header[c]) > 0) {
      std::set<std::string> levels;
      for (const auto& rec : records) levels.insert(strip(rec[c]));
      for (const auto& level : levels) {
        Column col;
        col.name = header[c] + "=" + level;
        col.values.resize(records.size());
        for (std::size_t r = 0; r < records.size(); ++r) {
          col.values[r] = (strip(records[r][c]) == level) ? 1.0 : 0.0;
        }
        columns.push_back(std::move(col));
      }
    } else {
      Column col;
      col.name = header[c];
      col.values.resize(records.size());
      for (std::size_t r = 0; r < records.size(); ++r) {
        const std::string text = strip(records[r][c]);
        try {
          std::size_t consumed = 0;
          col.values[r] = std::stod(text, &consumed);
          if (consumed != text.size()) throw std::invalid_argument(text);
        } catch (const std::exception&) {
          throw ParseError("cannot parse numeric value '" + text + "' at row " +
                           std::to_string(r + 2) + ", column '" + header[c] + "'");
        }
      }
      columns.push_back(std::move(col));
    }
  }

  const bool scale_all = !spec.minmax_columns.has_value();
  std::set<std::string> scale_set;
  if (!scale_all) scale_set.insert(spec.minmax_columns->begin(), spec.minmax_columns->end());

  std::vector<Column> kept;
  for (auto& col : columns) {
    const auto [min_it, max_it] = std::minmax_element(col.values.begin(), col.values.end());
    if (*min_it == *max_it) {
      if (report) {
        report->dropped_columns.push_back(col.name);
        report->warnings.push_back("constant column dropped: " + col.name);
      }
      continue;
    }
    const bool original_numeric = categorical.count(col.name.substr(0, col.name.find('='))) == 0;
    if (original_numeric && (scale_all || scale_set.count(col.name) > 0)) {
      const double lo = *min_it;
      const double range = *max_it - lo;
      for (double& v : col.values) v = (v - lo) / range;
    }
    kept.push_back(std::move(col));
  }
  if (kept.empty()) throw ParseError("no usable feature columns remain in: " + spec.path);

  LabeledDataset data;
  data.rows = static_cast<std::int64_t>(records.size());
  data.cols = static_cast<std::int64_t>(kept.size());
  data.labels = std::move(labels);
  data.features.resize(static_cast<std::size_t>(data.rows * data.cols));
  for (std::int64_t r = 0; r < data.rows; ++r) {
    for (std::int64_t c = 0; c < data.cols; ++c) {
      data.features[static_cast<std::size_t>(r * data.cols + c)] =
          kept[static_cast<std::size_t>(c)].values[static_cast<std::size_t>(r)];
    }
  }
  if (report) {
    for (const auto& col : kept) report->feature_names.push_back(col.name);
  }
  if (spec.normalize_rows) normalize_rows_to_unit_ball(data);
  return data;
}

LabeledDataset make_two_gaussians(const SyntheticSpec& spec, Rng& rng) {
  if (spec.n < 2) throw ValidationError("synthetic dataset: n must be >= 2");
  if (spec.dim < 1) throw ValidationError("synthetic dataset: dim must be >= 1");
  if (!(spec.positive_fraction > 0.0) || !(spec.positive_fraction < 1.0)) {
    throw ValidationError("synthetic dataset: positive_fraction must lie in (0, 1)");
  }

  // Seed-derived unit direction for the cloud axis.
  std::vector<double> direction(static_cast<std::size_t>(spec.dim));
  Rng dir_rng = rng.split(0x64697265);
  double norm_sq = 0.0;
  for (double& v : direction) {
    v = dir_rng.normal(1.0);
    norm_sq += v * v;
  }
  const double inv_norm = 1.0 / std::sqrt(norm_sq);
  for (double& v : direction) v *= inv_norm;

  LabeledDataset data;
  data.rows = spec.n;
  data.cols = spec.dim;
  data.features.resize(static_cast<std::size_t>(spec.n) * static_cast<std::size_t>(spec.dim));
  data.labels.resize(static_cast<std::size_t>(spec.n));
  Rng sample_rng = rng.split(0x73616d70);
  for (std::int64_t i = 0; i < spec.n; ++i) {
    const int label = sample_rng.uniform01() < spec.positive_fraction ? 1 : 0;
    const double sign = label == 1 ? 1.0 : -1.0;
    data.labels[static_cast<std::size_t>(i)] = label;
    for (int d = 0; d < spec.dim; ++d) {
      const double center = sign * 0.5 * spec.separation * direction[static_cast<std::size_t>(d)];
      data.features[static_cast<std::size_t>(i * spec.dim + d)] =
          center + sample_rng.normal(spec.cluster_std);
    }
  }
  normalize_rows_to_unit_ball(data);
  return data;
}

std::pair<LabeledDataset, LabeledDataset> train_test_split(const LabeledDataset& data,
                                                           double fraction, Rng& rng) {
  if (!(fraction > 0.0) || !(fraction < 1.0)) {
    throw ValidationError("train_test_split: fraction must lie in (0, 1)");
  }
  const std::int64_t train_size = static_cast<std::int64_t>(
      std::llround(fraction * static_cast<double>(data.rows)));
  if (train_size < 1 || train_size >= data.rows) {
    throw ValidationError("train_test_split: degenerate split (train size " +
                          std::to_string(train_size) + " of " + std::to_string(data.rows) + ")");
  }
  std::vector<std::int32_t> order(static_cast<std::size_t>(data.rows));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::int32_t>(i);
  rng.shuffle(order);
  const std::span<const std::int32_t> all(order);
  return {take_rows(data, all.subspan(0, static_cast<std::size_t>(train_size))),
          take_rows(data, all.subspan(static_cast<std::size_t>(train_size)))};
}

}  // namespace wddp
