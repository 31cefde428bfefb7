#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twopart/config.hpp"
#include "twopart/linalg.hpp"

namespace twopart {

/// Which columns of a delimited file hold what. Empty covariate lists mean
/// "every column whose name starts with the prefix", in file order.
struct ColumnMapping {
  std::string id = "id";
  std::string y = "y";
  std::string w_prefix = "w_";
  std::string x_prefix = "x_";
  std::vector<std::string> w_columns;
  std::vector<std::string> x_columns;
  std::string area = "area";
  std::string in_sample = "in_sample";
  /// Prediction files may omit the response.
  bool require_y = true;
};

/// Units with response y >= 0 (delta = I(y > 0), z = y where delta = 1),
/// occurrence covariates W (n x r) and intensity covariates X (n x p).
struct SemicontinuousDataset {
  std::vector<std::string> ids;
  Vector y;
  bool has_y = true;
  Matrix W;
  Matrix X;
  std::vector<std::string> w_names;
  std::vector<std::string> x_names;
  std::optional<std::vector<std::string>> areas;
  std::optional<std::vector<int>> in_sample;

  int n() const { return static_cast<int>(ids.size()); }
  int r() const { return static_cast<int>(W.cols()); }
  int p() const { return static_cast<int>(X.cols()); }

  std::vector<int> delta() const;
  int positives() const;
  /// Rows (z, x') of the positive-response units, z optionally logged.
  Matrix positive_rows(bool log_z = false) const;
  SemicontinuousDataset subset(std::span<const int> rows) const;
  /// "n=..., positive=..., zero=..." one-liner.
  std::string summary_line() const;
};

/// Reads comma-delimited text with a header line; lines starting with '#'
/// are skipped. Throws DataError naming the line and column for negative
/// y, empty cells, non-numeric fields, or an empty file.
SemicontinuousDataset parse_dataset(std::istream& in, const ColumnMapping& mapping = {});
SemicontinuousDataset load_dataset(const std::filesystem::path& path,
                                   const ColumnMapping& mapping = {});

/// Header: id, y, w columns, x columns, then area and in_sample if present.
void write_dataset(std::ostream& out, const SemicontinuousDataset& data);
void write_dataset(const std::filesystem::path& path, const SemicontinuousDataset& data);

/// Column means and covariance of the positive rows, for default_config.
DatasetSummary positive_summary(const SemicontinuousDataset& data, bool log_z = false);

}  // namespace twopart
