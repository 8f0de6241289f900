#ifndef HOLDOUT_CSV_HPP
#define HOLDOUT_CSV_HPP

#include <string>
#include <string_view>
#include <vector>

namespace holdout::csv {

using Row = std::vector<std::string>;

/// Parses RFC-4180 text. Accepts LF or CRLF line endings; a trailing line
/// break after the final row is optional. Throws Error(RaggedRow) on an
/// unterminated quoted field.
std::vector<Row> parse(std::string_view text);

/// Quotes a cell only when it contains a comma, a double quote, CR or LF.
std::string quote(std::string_view cell);

std::string join(const Row& row);

}  // namespace holdout::csv

#endif  // HOLDOUT_CSV_HPP
