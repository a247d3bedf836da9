#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "clipsgd/harness/csv.hpp"
#include "clipsgd/objectives.hpp"

namespace clipsgd::harness {

struct IngestOptions {
  std::uint64_t shuffle_seed = 0;
  bool shuffle = true;
  /// Encode a k-level categorical column with k - 1 indicators (the first
  /// level in sorted order is dropped) so the design matrix with its bias
  /// column keeps full column rank. Off by default: k indicators.
  bool drop_first_level = false;
};

struct IngestReport {
  std::size_t rows_in = 0;
  std::size_t rows_dropped = 0;  // missing target
  std::vector<std::string> numeric_columns;
  std::vector<std::string> categorical_columns;
  std::vector<std::string> dropped_columns;  // constant after imputation
  std::vector<std::string> warnings;
  /// Target mean and standard deviation before standardisation.
  double target_mean = 0.0;
  double target_std = 1.0;
};

/// Preprocessing, in order: mean imputation of numeric columns and mode
/// imputation of categorical ones, one-hot encoding, standardisation of
/// numeric features and the target (population variance), row shuffle,
/// and a leading column of ones. A column is categorical when any present
/// cell does not parse as a number. Rows with a missing target are
/// dropped. Constant numeric columns are dropped with a warning.
RegressionData ingest_table(const CsvTable& table, const std::string& target,
                            const IngestOptions& options = {}, IngestReport* report = nullptr);

RegressionData ingest_csv(const std::filesystem::path& path, const std::string& target,
                          const IngestOptions& options = {}, IngestReport* report = nullptr);

/// CSV with the feature names (bias column excluded) followed by the target.
std::string regression_data_to_csv(const RegressionData& data);

}  // namespace clipsgd::harness
