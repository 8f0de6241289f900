#include "holdout/error.hpp"

namespace holdout {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::RaggedRow: return "RaggedRow";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::NumericOverflow: return "NumericOverflow";
    case ErrorKind::MissingCell: return "MissingCell";
    case ErrorKind::UnlabeledRecord: return "UnlabeledRecord";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::InvalidK: return "InvalidK";
    case ErrorKind::DegenerateTraining: return "DegenerateTraining";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::HoldoutLeak: return "HoldoutLeak";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::InvalidCandidate: return "InvalidCandidate";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Usage: return "Usage";
  }
  return "Unknown";
}

}  // namespace holdout
