#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairsan/common.hpp"

namespace fairsan {

enum class ColumnKind : std::uint8_t { Numeric, Categorical };
enum class ColumnRole : std::uint8_t { Plain, Sensitive, Decision };

std::string kind_name(ColumnKind k);
ColumnKind kind_from_name(const std::string& s);
std::string role_name(ColumnRole r);
ColumnRole role_from_name(const std::string& s);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  ColumnRole role = ColumnRole::Plain;
};

struct Schema {
  std::vector<ColumnSpec> columns;
  std::vector<std::string> log_columns;
  int categorical_threshold = 5;

  const ColumnSpec* find(const std::string& name) const;
  std::size_t sensitive_index() const;
  std::size_t decision_index() const;
  bool is_log_column(const std::string& name) const;

  /// Exactly one sensitive and one decision column; log columns must exist
  /// and be numeric.
  void validate() const;

  std::string to_json_string() const;
  static Schema from_json_string(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static Schema load(const std::filesystem::path& path);
};

/// Raw tabular data: header plus string cells. record_ids are the 0-based
/// data-row numbers from the source file (stable across the empty-row drop).
struct Dataset {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> record_ids;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return header.size(); }
  std::size_t column_index(const std::string& name) const;
};

/// Reads a delimited file with a header row. Rows containing an empty cell
/// are dropped; ragged rows are a DataError.
Dataset read_csv(const std::filesystem::path& path, char delimiter = ',');
Dataset read_csv(std::istream& in, char delimiter = ',');
void write_csv(const Dataset& data, const std::filesystem::path& path, char delimiter = ',');
std::uint64_t dataset_hash(const Dataset& data);

struct SchemaOverrides {
  std::string sensitive;
  std::string decision;
  std::vector<std::string> force_numeric;
  std::vector<std::string> force_categorical;
  std::vector<std::string> log_columns;
  int categorical_threshold = 5;
};

/// Kind inference: a column is numeric when every cell parses as a number
/// AND it has at least `categorical_threshold` distinct values; otherwise
/// categorical. Sensitive/decision columns must end up binary.
Schema infer_schema(const Dataset& data, const SchemaOverrides& overrides);

struct ColumnEncoding {
  ColumnSpec spec;
  // numeric columns: bounds in the (possibly log) transformed domain
  double min = 0.0;
  double max = 0.0;
  bool log_transform = false;
  // categorical columns: sorted category list
  std::vector<std::string> categories;
  // layout
  std::size_t offset = 0;  // first encoded column
  std::size_t width = 1;   // 1 for numeric and for S/Y; |categories| otherwise
};

struct EncodingMeta {
  std::vector<ColumnEncoding> columns;
  std::size_t encoded_width = 0;

  std::size_t s_column() const;  // encoded index of the sensitive column
  std::size_t y_column() const;  // encoded index of the decision column
  std::vector<std::string> encoded_names() const;

  std::string to_json_string() const;
  static EncodingMeta from_json_string(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static EncodingMeta load(const std::filesystem::path& path);
};

/// Preprocessed numeric view of a dataset: every entry in [0,1], row-major.
/// s_col / y_col are -1 when the matrix does not carry that column (e.g.
/// sanitizer output, feature blocks).
struct EncodedMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> values;
  std::vector<std::size_t> record_ids;
  std::vector<std::string> column_names;
  int s_col = -1;
  int y_col = -1;

  double& at(std::size_t r, std::size_t c) { return values[r * n_cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * n_cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values.data() + r * n_cols, n_cols);
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(values.data() + r * n_cols, n_cols);
  }
  std::uint64_t layout_hash() const;
};

/// Fits encoding statistics on the full dataset.
EncodingMeta fit_encoding(const Dataset& data, const Schema& schema);

/// Fold-aware fit: numeric min/max come from `stat_rows` only (no test
/// leakage); category vocabularies still cover the full dataset so the
/// one-hot layout is identical across folds.
EncodingMeta fit_encoding(const Dataset& data, const Schema& schema,
                          std::span<const std::size_t> stat_rows);

/// Encodes with existing statistics; values are clamped to [0,1]. Unknown
/// categories and parse failures are DataErrors carrying the record id.
EncodedMatrix apply_encoding(const Dataset& data, const Schema& schema, const EncodingMeta& meta);

std::pair<EncodedMatrix, EncodingMeta> preprocess(const Dataset& data, const Schema& schema);

/// Inverse transform back to the original attribute space. Accepts either a
/// full layout or one without the sensitive column (sanitizer output); in
/// the latter case the returned dataset has no sensitive column either.
Dataset postprocess(const EncodedMatrix& encoded, const EncodingMeta& meta);

void write_encoded_csv(const EncodedMatrix& m, const std::filesystem::path& path);

/// k-fold assignment. Blocks are a seeded shuffle cut into k near-equal
/// parts; fold f tests on block f and validates on block (f+1) mod k.
struct FoldAssignment {
  int k = 0;
  std::vector<std::vector<std::size_t>> blocks;  // row indices per block

  std::vector<std::size_t> train_indices(int fold) const;
  std::vector<std::size_t> validation_indices(int fold) const;
  std::vector<std::size_t> test_indices(int fold) const;
};

FoldAssignment split_folds(std::size_t n_records, int k, std::uint64_t seed);

EncodedMatrix select_rows(const EncodedMatrix& m, std::span<const std::size_t> rows);
EncodedMatrix drop_column(const EncodedMatrix& m, std::size_t col);
EncodedMatrix select_columns(const EncodedMatrix& m, std::span<const std::size_t> cols);

/// Indices of the plain-attribute columns (everything except S and Y).
std::vector<std::size_t> plain_columns(const EncodedMatrix& m);

/// Column read out as integers (values must be 0/1 up to rounding).
std::vector<int> binary_column(const EncodedMatrix& m, std::size_t col);

}  // namespace fairsan
