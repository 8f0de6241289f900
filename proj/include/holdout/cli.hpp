#ifndef HOLDOUT_CLI_HPP
#define HOLDOUT_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace holdout::cli {

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitVerifyFailed = 3;

struct RunConfig {
  std::string command;
  std::filesystem::path input;
  std::optional<std::filesystem::path> output;
  std::optional<std::filesystem::path> manifest;
  std::string study_id;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<std::string> strategy;
  std::vector<std::size_t> candidates;
  std::optional<std::string> positive_class;
  std::optional<double> holdout_frac;
  std::size_t bootstrap_b = 200;
  double tolerance = 0.1;
  bool stratify = false;
  std::optional<std::filesystem::path> scores_csv;
  std::optional<std::filesystem::path> report_json;
  bool force = false;
  std::string id_column = "id";
  std::string label_column = "label";
  unsigned threads = 1;
};

int cmd_split(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_select_k(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_rotate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses `args` (program name excluded), dispatches to a command and maps
/// failures to exit codes: 1 I/O, 2 usage or validation, 3 verification.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace holdout::cli

#endif  // HOLDOUT_CLI_HPP
