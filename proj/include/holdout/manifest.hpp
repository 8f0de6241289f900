#ifndef HOLDOUT_MANIFEST_HPP
#define HOLDOUT_MANIFEST_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "holdout/evaluator.hpp"
#include "holdout/kselect.hpp"
#include "holdout/partitioner.hpp"

namespace holdout {

inline constexpr std::string_view kHashScheme = "sha256(study_id|record_id|role|seed)";

/// Audit record binding a dataset fingerprint to the plan that labeled it.
struct Manifest {
  std::string study_id;
  std::string dataset_fingerprint;
  std::string id_column;
  std::string label_column;
  PartitionPlan plan;
  SkillReport skill;
  std::optional<KSelectionReport> k_selection;
  std::string created_at;  // UTC, ISO-8601
  std::string tool_version;

  bool operator==(const Manifest&) const = default;
  /// Equality ignoring created_at.
  bool same_content(const Manifest& other) const;
};

std::string tool_version();
std::string utc_timestamp();

/// Throws SchemaViolation when the plan is inconsistent with itself or the
/// study id (k >= 3 in k-fold mode, one holdout and one test fold).
void validate(const Manifest& manifest);

/// Canonical JSON: sorted keys, two-space indent, trailing newline. Equal
/// manifests serialize to identical bytes.
std::string to_json(const Manifest& manifest);
/// Throws SchemaViolation on malformed JSON or missing/extra fields.
Manifest manifest_from_json(std::string_view text);

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

/// KSelectionReport on its own, in the manifest's encoding.
std::string to_json(const KSelectionReport& report);

VerificationReport verify_partition(const Dataset& labeled, const Manifest& manifest);

}  // namespace holdout

#endif  // HOLDOUT_MANIFEST_HPP
