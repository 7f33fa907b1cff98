#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace diffbound {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Observations for one analysis: outcome Y, two binary treatments, and a
// numeric covariate matrix. Immutable after construction and safe to share
// across threads by const reference.
class Dataset {
 public:
  Dataset(Eigen::VectorXd y, std::vector<int> z1, std::vector<int> z2,
          Eigen::MatrixXd x);

  Eigen::Index n() const { return y_.size(); }
  Eigen::Index n_covariates() const { return x_.cols(); }
  const Eigen::VectorXd& y() const { return y_; }
  const std::vector<int>& z1() const { return z1_; }
  const std::vector<int>& z2() const { return z2_; }
  const Eigen::MatrixXd& x() const { return x_; }

  Dataset resample(const std::vector<Eigen::Index>& rows) const;

 private:
  Eigen::VectorXd y_;
  std::vector<int> z1_;
  std::vector<int> z2_;
  Eigen::MatrixXd x_;
};

struct CellCounts {
  std::int64_t n00 = 0;  // index order is (z1, z2)
  std::int64_t n01 = 0;
  std::int64_t n10 = 0;
  std::int64_t n11 = 0;

  std::int64_t total() const { return n00 + n01 + n10 + n11; }
  std::int64_t min_cell() const;
};

CellCounts cell_counts(const Dataset& d);

// Row indices of the differential cells (z1, z2) = (1,0) and (0,1).
std::vector<Eigen::Index> cell_rows(const Dataset& d, int z1, int z2);

enum class Severity { Warning, Error };

struct ValidationMessage {
  Severity severity;
  std::string text;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationMessage> messages;

  void add(Severity severity, std::string text) {
    if (severity == Severity::Error) ok = false;
    messages.push_back({severity, std::move(text)});
  }
};

// Structural checks that must hold before estimation: non-empty differential
// cells, non-constant treatments. Small cells are flagged as warnings.
ValidationReport validate(const Dataset& d);

// Column-name mapping for CSV ingestion. Columns are matched by header name,
// never by position.
struct CsvSchema {
  std::string y = "y";
  std::string z1 = "z1";
  std::string z2 = "z2";
  std::vector<std::string> x;  // covariate columns, at least one
};

// Strict CSV reader: UTF-8, comma separator, header row, '.' decimal point.
// Any non-numeric cell, missing column, or z value outside {0,1} is an error
// naming the offending row and column. With drop_missing_rows, rows where a
// mapped cell is empty are skipped instead of rejected; nothing else is ever
// coerced or imputed.
Dataset load_csv(const std::string& path, const CsvSchema& schema,
                 bool drop_missing_rows = false);

// Inverse of load_csv up to floating-point text round-trip (17 significant
// digits).
void write_csv(const std::string& path, const Dataset& d, const CsvSchema& schema);

// Binary item matrix for the IRT diagnostics, read through the same strict
// CSV pipeline.
Eigen::MatrixXi load_binary_items(const std::string& path,
                                  const std::vector<std::string>& item_columns);

}  // namespace diffbound
