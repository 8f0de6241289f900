#include "holdout/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_set>

#include "holdout/error.hpp"
#include "holdout/sha256.hpp"

namespace holdout {

std::string_view to_string(Disposition d) noexcept {
  switch (d) {
    case Disposition::Holdout: return "holdout";
    case Disposition::Test: return "test";
    case Disposition::Train: return "train";
  }
  return "";
}

std::optional<Disposition> parse_disposition(std::string_view text) noexcept {
  if (text == "holdout") return Disposition::Holdout;
  if (text == "test") return Disposition::Test;
  if (text == "train") return Disposition::Train;
  return std::nullopt;
}

std::string_view to_string(ColumnKind kind) noexcept {
  return kind == ColumnKind::Numeric ? "numeric" : "categorical";
}

namespace {

enum class CellClass { Empty, Decimal, NonFinite, Text };

bool is_lower_hex64(std::string_view s) {
  return s.size() == 64 &&
         std::all_of(s.begin(), s.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

CellClass classify(const std::string& cell) {
  static const std::regex decimal(R"([+-]?([0-9]+\.?[0-9]*|\.[0-9]+)([eE][+-]?[0-9]+)?)");
  static const std::regex non_finite(R"([+-]?(nan|inf|infinity))", std::regex::icase);
  if (cell.empty()) return CellClass::Empty;
  if (std::regex_match(cell, decimal)) {
    errno = 0;
    const double v = std::strtod(cell.c_str(), nullptr);
    if (!std::isfinite(v) || (errno == ERANGE && v != 0.0)) return CellClass::NonFinite;
    return CellClass::Decimal;
  }
  if (std::regex_match(cell, non_finite)) return CellClass::NonFinite;
  return CellClass::Text;
}

std::size_t find_column(const csv::Row& header, std::string_view name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorKind::MissingColumn, "column '" + std::string(name) + "' not in header");
  return static_cast<std::size_t>(std::distance(header.begin(), it));
}

}  // namespace

std::string fingerprint_rows(const csv::Row& header, std::span<const csv::Row> rows) {
  std::string canonical = csv::join(header);
  for (const auto& row : rows) {
    canonical.push_back('\n');
    canonical += csv::join(row);
  }
  return sha256_hex(canonical);
}

Dataset Dataset::from_rows(csv::Row header, std::vector<csv::Row> rows, std::string_view id_column,
                           std::string_view label_column) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      // +2: one for the header, one for 1-based numbering.
      throw Error(ErrorKind::RaggedRow, "row " + std::to_string(r + 2) + " has " + std::to_string(rows[r].size()) +
                                            " cells, header has " + std::to_string(header.size()));
    }
  }
  if (rows.empty()) throw Error(ErrorKind::EmptyDataset, "no data rows");

  // Trailing labeling columns are record metadata, not input columns.
  bool labeled = header.size() >= 2 && header[header.size() - 2] == kDispositionColumn &&
                 header.back() == kHashKeyColumn;
  std::vector<std::pair<std::string, std::string>> labels;
  if (labeled) {
    labels.reserve(rows.size());
    for (auto& row : rows) {
      labels.emplace_back(std::move(row[row.size() - 2]), std::move(row.back()));
      row.resize(row.size() - 2);
    }
    header.resize(header.size() - 2);
  }

  Dataset ds;
  ds.id_index_ = find_column(header, id_column);
  ds.label_index_ = find_column(header, label_column);

  const std::size_t width = header.size();
  ds.schema_.reserve(width);
  for (std::size_t c = 0; c < width; ++c) {
    Column col{header[c], ColumnKind::Categorical};
    if (c != ds.id_index_ && c != ds.label_index_) {
      bool any_decimal = false;
      bool any_text = false;
      std::optional<std::size_t> empty_row;
      std::optional<std::size_t> non_finite_row;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        switch (classify(rows[r][c])) {
          case CellClass::Empty: if (!empty_row) empty_row = r; break;
          case CellClass::Decimal: any_decimal = true; break;
          case CellClass::NonFinite: if (!non_finite_row) non_finite_row = r; break;
          case CellClass::Text: any_text = true; break;
        }
      }
      if (any_decimal && !any_text) {
        if (non_finite_row) {
          throw Error(ErrorKind::NumericOverflow, "column '" + header[c] + "' row " +
                                                      std::to_string(*non_finite_row + 2) + ": non-finite value '" +
                                                      rows[*non_finite_row][c] + "'");
        }
        if (empty_row) {
          throw Error(ErrorKind::MissingCell,
                      "column '" + header[c] + "' row " + std::to_string(*empty_row + 2) + ": empty numeric cell");
        }
        col.kind = ColumnKind::Numeric;
      }
      ds.feature_index_.push_back(c);
      ds.features_.push_back(col);
    }
    ds.schema_.push_back(std::move(col));
  }

  std::unordered_set<std::string> seen;
  ds.records_.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    Record rec;
    rec.id = row[ds.id_index_];
    if (rec.id.empty()) throw Error(ErrorKind::MissingCell, "row " + std::to_string(r + 2) + ": empty record id");
    if (!seen.insert(rec.id).second) throw Error(ErrorKind::DuplicateId, "record id '" + rec.id + "' repeated");
    rec.label = row[ds.label_index_];
    rec.features.reserve(ds.feature_index_.size());
    for (std::size_t f = 0; f < ds.feature_index_.size(); ++f) {
      const std::string& cell = row[ds.feature_index_[f]];
      if (ds.features_[f].kind == ColumnKind::Numeric) {
        rec.features.emplace_back(std::strtod(cell.c_str(), nullptr));
      } else {
        rec.features.emplace_back(cell);
      }
    }
    if (labeled) {
      auto& [disp, key] = labels[r];
      if (!disp.empty() || !key.empty()) {
        const auto d = parse_disposition(disp);
        if (!d || !is_lower_hex64(key)) {
          throw Error(ErrorKind::SchemaViolation,
                      "row " + std::to_string(r + 2) + ": malformed disposition/hash_key pair");
        }
        rec.disposition = *d;
        rec.hash_key = std::move(key);
      }
    }
    ds.records_.push_back(std::move(rec));
  }

  ds.fingerprint_ = fingerprint_rows(header, rows);
  ds.rows_ = std::move(rows);
  return ds;
}

csv::Row Dataset::header() const {
  csv::Row h;
  h.reserve(schema_.size());
  for (const auto& c : schema_) h.push_back(c.name);
  return h;
}

std::vector<std::string> Dataset::classes() const {
  std::set<std::string> s;
  for (const auto& r : records_) s.insert(r.label);
  return {s.begin(), s.end()};
}

bool Dataset::is_labeled() const noexcept {
  return std::all_of(records_.begin(), records_.end(),
                     [](const Record& r) { return r.disposition.has_value() && r.hash_key.has_value(); });
}

Dataset Dataset::relabeled(std::span<const Disposition> dispositions, std::span<const std::string> hash_keys) const {
  if (dispositions.size() != records_.size() || hash_keys.size() != records_.size()) {
    throw Error(ErrorKind::LengthMismatch, "relabel needs one disposition and hash key per record");
  }
  Dataset out = *this;
  for (std::size_t i = 0; i < out.records_.size(); ++i) {
    out.records_[i].disposition = dispositions[i];
    out.records_[i].hash_key = hash_keys[i];
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "read failed for '" + path.string() + "'");
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

Dataset parse_csv_text(std::string_view text, std::string_view id_column, std::string_view label_column) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  auto table = csv::parse(text);
  if (table.empty()) throw Error(ErrorKind::EmptyDataset, "missing header row");
  csv::Row header = std::move(table.front());
  table.erase(table.begin());
  if (header.size() > 1) {
    std::erase_if(table, [](const csv::Row& row) { return row.size() == 1 && row.front().empty(); });
  }
  return Dataset::from_rows(std::move(header), std::move(table), id_column, label_column);
}

Dataset load_csv(const std::filesystem::path& path, std::string_view id_column, std::string_view label_column) {
  return parse_csv_text(read_file(path), id_column, label_column);
}

std::string labeled_csv_text(const Dataset& dataset) {
  const auto& records = dataset.records();
  for (const auto& r : records) {
    if (!r.disposition || !r.hash_key) throw Error(ErrorKind::UnlabeledRecord, "record '" + r.id + "' has no disposition");
  }
  csv::Row header = dataset.header();
  header.emplace_back(kDispositionColumn);
  header.emplace_back(kHashKeyColumn);
  std::string out = csv::join(header);
  out.push_back('\n');
  for (std::size_t i = 0; i < records.size(); ++i) {
    csv::Row row = dataset.rows()[i];
    row.emplace_back(to_string(*records[i].disposition));
    row.push_back(*records[i].hash_key);
    out += csv::join(row);
    out.push_back('\n');
  }
  return out;
}

void write_labeled_csv(const Dataset& dataset, const std::filesystem::path& path) {
  write_file(path, labeled_csv_text(dataset));
}

}  // namespace holdout
