#include "diffbound/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace diffbound {

namespace {

bool is_binary(const std::vector<int>& z) {
  return std::all_of(z.begin(), z.end(), [](int v) { return v == 0 || v == 1; });
}

bool is_constant(const std::vector<int>& z) {
  return std::all_of(z.begin(), z.end(), [&](int v) { return v == z.front(); });
}

}  // namespace

Dataset::Dataset(Eigen::VectorXd y, std::vector<int> z1, std::vector<int> z2,
                 Eigen::MatrixXd x)
    : y_(std::move(y)), z1_(std::move(z1)), z2_(std::move(z2)), x_(std::move(x)) {
  const auto n = y_.size();
  if (n < 1) throw Error("dataset is empty");
  if (static_cast<Eigen::Index>(z1_.size()) != n ||
      static_cast<Eigen::Index>(z2_.size()) != n || x_.rows() != n) {
    throw Error("dataset columns have mismatched lengths");
  }
  if (x_.cols() < 1) throw Error("dataset needs at least one covariate column");
  if (!y_.allFinite() || !x_.allFinite()) {
    throw Error("dataset contains non-finite entries");
  }
  if (!is_binary(z1_) || !is_binary(z2_)) {
    throw Error("treatment columns must contain only 0 and 1");
  }
}

Dataset Dataset::resample(const std::vector<Eigen::Index>& rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd y(m);
  std::vector<int> z1(m), z2(m);
  Eigen::MatrixXd x(m, x_.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index r = rows[static_cast<std::size_t>(i)];
    y[i] = y_[r];
    z1[static_cast<std::size_t>(i)] = z1_[static_cast<std::size_t>(r)];
    z2[static_cast<std::size_t>(i)] = z2_[static_cast<std::size_t>(r)];
    x.row(i) = x_.row(r);
  }
  return Dataset(std::move(y), std::move(z1), std::move(z2), std::move(x));
}

std::int64_t CellCounts::min_cell() const {
  return std::min({n00, n01, n10, n11});
}

CellCounts cell_counts(const Dataset& d) {
  CellCounts c;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const int a = d.z1()[k], b = d.z2()[k];
    if (a == 0 && b == 0) ++c.n00;
    else if (a == 0 && b == 1) ++c.n01;
    else if (a == 1 && b == 0) ++c.n10;
    else ++c.n11;
  }
  return c;
}

std::vector<Eigen::Index> cell_rows(const Dataset& d, int z1, int z2) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (d.z1()[k] == z1 && d.z2()[k] == z2) rows.push_back(i);
  }
  return rows;
}

ValidationReport validate(const Dataset& d) {
  ValidationReport report;
  const CellCounts c = cell_counts(d);
  if (c.n10 == 0 || c.n01 == 0) {
    report.add(Severity::Error,
               "empty differential cells: n10=" + std::to_string(c.n10) +
                   ", n01=" + std::to_string(c.n01) +
                   "; the differential effect is undefined");
  }
  if (is_constant(d.z1())) {
    report.add(Severity::Error, "z1 is constant; propensity model is degenerate");
  }
  if (is_constant(d.z2())) {
    report.add(Severity::Error, "z2 is constant; propensity model is degenerate");
  }
  if (report.ok && c.min_cell() < 10) {
    report.add(Severity::Warning,
               "smallest treatment cell has " + std::to_string(c.min_cell()) +
                   " rows (< 10); estimates may be unstable");
  }
  return report;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  fields.push_back(field);
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& raw, std::size_t row,
                    const std::string& column) {
  const std::string cell = trim(raw);
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || cell.empty()) {
    throw Error("row " + std::to_string(row) + ", column '" + column +
                "': '" + cell + "' is not a number");
  }
  if (!std::isfinite(value)) {
    throw Error("row " + std::to_string(row) + ", column '" + column +
                "': non-finite value");
  }
  return value;
}

int parse_binary(const std::string& raw, std::size_t row,
                 const std::string& column) {
  const double v = parse_number(raw, row, column);
  if (v != 0.0 && v != 1.0) {
    throw Error("row " + std::to_string(row) + ", column '" + column +
                "': value " + trim(raw) + " outside {0,1}");
  }
  return v == 1.0 ? 1 : 0;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // data rows, in file order
};

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error("empty file: " + path);
  table.header = split_csv_line(line);
  for (auto& h : table.header) h = trim(h);
  const std::size_t width = table.header.size();
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != width) {
      throw Error("row " + std::to_string(row_number) + ": expected " +
                  std::to_string(width) + " fields, found " +
                  std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.rows.empty()) throw Error("no data rows in file: " + path);
  return table;
}

std::size_t column_index(const CsvTable& table, const std::string& name) {
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (table.header[j] == name) return j;
  }
  throw Error("missing column '" + name + "'");
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema,
                 bool drop_missing_rows) {
  if (schema.x.empty()) {
    throw Error("schema needs at least one covariate column");
  }
  const CsvTable table = read_csv_table(path);
  const std::size_t jy = column_index(table, schema.y);
  const std::size_t jz1 = column_index(table, schema.z1);
  const std::size_t jz2 = column_index(table, schema.z2);
  std::vector<std::size_t> jx;
  for (const auto& name : schema.x) jx.push_back(column_index(table, name));

  std::vector<double> y;
  std::vector<int> z1, z2;
  std::vector<double> xflat;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t file_row = i + 2;  // 1-based, after the header
    if (drop_missing_rows) {
      bool missing = trim(row[jy]).empty() || trim(row[jz1]).empty() ||
                     trim(row[jz2]).empty();
      for (std::size_t k = 0; k < jx.size() && !missing; ++k) {
        missing = trim(row[jx[k]]).empty();
      }
      if (missing) continue;
    }
    y.push_back(parse_number(row[jy], file_row, schema.y));
    z1.push_back(parse_binary(row[jz1], file_row, schema.z1));
    z2.push_back(parse_binary(row[jz2], file_row, schema.z2));
    for (std::size_t k = 0; k < jx.size(); ++k) {
      xflat.push_back(parse_number(row[jx[k]], file_row, schema.x[k]));
    }
  }
  if (y.empty()) throw Error("no usable rows in file: " + path);
  const auto n = static_cast<Eigen::Index>(y.size());
  const auto l = static_cast<Eigen::Index>(jx.size());
  Eigen::VectorXd yv = Eigen::Map<Eigen::VectorXd>(y.data(), n);
  Eigen::MatrixXd x(n, l);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < l; ++k) {
      x(i, k) = xflat[static_cast<std::size_t>(i * l + k)];
    }
  }
  return Dataset(std::move(yv), std::move(z1), std::move(z2), std::move(x));
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_csv(const std::string& path, const Dataset& d, const CsvSchema& schema) {
  if (static_cast<Eigen::Index>(schema.x.size()) != d.n_covariates()) {
    throw Error("schema covariate count does not match dataset");
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  out << schema.y << ',' << schema.z1 << ',' << schema.z2;
  for (const auto& name : schema.x) out << ',' << name;
  out << '\n';
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    out << format_double(d.y()[i]) << ',' << d.z1()[k] << ',' << d.z2()[k];
    for (Eigen::Index j = 0; j < d.n_covariates(); ++j) {
      out << ',' << format_double(d.x()(i, j));
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

Eigen::MatrixXi load_binary_items(const std::string& path,
                                  const std::vector<std::string>& item_columns) {
  if (item_columns.empty()) throw Error("no item columns given");
  const CsvTable table = read_csv_table(path);
  std::vector<std::size_t> cols;
  for (const auto& name : item_columns) cols.push_back(column_index(table, name));
  Eigen::MatrixXi items(static_cast<Eigen::Index>(table.rows.size()),
                        static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      items(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          parse_binary(table.rows[i][cols[k]], i + 2, item_columns[k]);
    }
  }
  return items;
}

}  // namespace diffbound
