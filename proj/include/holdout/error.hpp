#ifndef HOLDOUT_ERROR_HPP
#define HOLDOUT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace holdout {

enum class ErrorKind {
  // dataset
  MissingColumn,
  DuplicateId,
  RaggedRow,
  EmptyDataset,
  NumericOverflow,
  MissingCell,
  UnlabeledRecord,
  SchemaViolation,
  // partitioner
  InvalidK,
  // evaluator
  DegenerateTraining,
  SchemaMismatch,
  LengthMismatch,
  EmptyInput,
  HoldoutLeak,
  // kselect
  InsufficientData,
  InvalidCandidate,
  // plumbing
  Io,
  Usage,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// All library failures are reported as this exception; `kind()` is the
/// machine-readable category, `what()` the human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace holdout

#endif  // HOLDOUT_ERROR_HPP
