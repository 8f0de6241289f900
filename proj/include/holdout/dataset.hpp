#ifndef HOLDOUT_DATASET_HPP
#define HOLDOUT_DATASET_HPP

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "holdout/csv.hpp"

namespace holdout {

enum class Disposition { Holdout, Test, Train };

/// Lowercase wire name: "holdout", "test" or "train".
std::string_view to_string(Disposition d) noexcept;
std::optional<Disposition> parse_disposition(std::string_view text) noexcept;

enum class ColumnKind { Numeric, Categorical };

std::string_view to_string(ColumnKind kind) noexcept;

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Categorical;

  bool operator==(const Column&) const = default;
};

using FeatureValue = std::variant<double, std::string>;

struct Record {
  std::string id;
  std::vector<FeatureValue> features;
  std::string label;
  std::optional<Disposition> disposition;
  std::optional<std::string> hash_key;

  bool operator==(const Record&) const = default;
};

/// Names of the two columns appended to a labeled file.
inline constexpr std::string_view kDispositionColumn = "disposition";
inline constexpr std::string_view kHashKeyColumn = "hash_key";

/// An immutable, fingerprinted table of records.
///
/// The schema covers every input column (id and label columns included,
/// both categorical). Features are the remaining columns in file order.
/// When the source already carries trailing `disposition`/`hash_key`
/// columns they are parsed into each record and excluded from both the
/// schema and the fingerprint, so a labeled file fingerprints identically
/// to the file it was produced from.
class Dataset {
 public:
  /// Builds a dataset from a header and data rows (already split into cells).
  static Dataset from_rows(csv::Row header, std::vector<csv::Row> rows, std::string_view id_column,
                           std::string_view label_column);

  std::size_t size() const noexcept { return records_.size(); }
  const std::vector<Record>& records() const noexcept { return records_; }
  const Record& operator[](std::size_t i) const { return records_[i]; }

  const std::vector<Column>& schema() const noexcept { return schema_; }
  /// Kinds of the feature columns, aligned with Record::features.
  const std::vector<Column>& feature_schema() const noexcept { return features_; }
  const std::string& id_column() const noexcept { return schema_[id_index_].name; }
  const std::string& label_column() const noexcept { return schema_[label_index_].name; }
  const std::string& fingerprint() const noexcept { return fingerprint_; }

  /// Input cells per row, in file order (labeling columns excluded).
  const std::vector<csv::Row>& rows() const noexcept { return rows_; }
  csv::Row header() const;

  /// Sorted distinct class labels.
  std::vector<std::string> classes() const;

  bool is_labeled() const noexcept;

  /// Copy with every record's disposition and hash key replaced.
  Dataset relabeled(std::span<const Disposition> dispositions, std::span<const std::string> hash_keys) const;

 private:
  Dataset() = default;

  std::vector<Column> schema_;
  std::vector<Column> features_;
  std::vector<std::size_t> feature_index_;
  std::size_t id_index_ = 0;
  std::size_t label_index_ = 0;
  std::vector<csv::Row> rows_;
  std::vector<Record> records_;
  std::string fingerprint_;
};

/// SHA-256 over the header line and each data row joined by '\n' (no
/// trailing newline), cells joined by ',' with RFC-4180 quoting.
std::string fingerprint_rows(const csv::Row& header, std::span<const csv::Row> rows);

Dataset load_csv(const std::filesystem::path& path, std::string_view id_column, std::string_view label_column);
Dataset parse_csv_text(std::string_view text, std::string_view id_column, std::string_view label_column);

/// Input columns followed by `disposition` and `hash_key`, rows in file order.
std::string labeled_csv_text(const Dataset& dataset);
void write_labeled_csv(const Dataset& dataset, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace holdout

#endif  // HOLDOUT_DATASET_HPP
