#ifndef HOLDOUT_EVALUATOR_HPP
#define HOLDOUT_EVALUATOR_HPP

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "holdout/dataset.hpp"
#include "holdout/partitioner.hpp"

namespace holdout {

// ---------------------------------------------------------------------------
// Scoring

struct ConfusionMatrix {
  std::vector<std::string> classes;             // sorted
  std::vector<std::vector<std::size_t>> counts;  // [truth][predicted]

  std::size_t total() const noexcept;
  std::size_t count(std::string_view truth, std::string_view predicted) const;
};

struct ScoreResult {
  ConfusionMatrix matrix;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double error_rate = 0.0;
};

/// Binary scores for `positive_class` when given, otherwise macro averages
/// over `classes` (or, when empty, the union of labels seen in truth and
/// predicted). Every 0/0 quotient is taken as 0.
ScoreResult score(std::span<const std::string> truth, std::span<const std::string> predicted,
                  std::optional<std::string_view> positive_class = std::nullopt,
                  std::span<const std::string> classes = {});

// ---------------------------------------------------------------------------
// Learners

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::string predict(const Record& record) const = 0;
};

/// Pluggable one-time model. Fitted classifiers live only for the duration
/// of one evaluation and are never serialized.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::unique_ptr<Classifier> fit(std::span<const Record* const> train,
                                          const std::vector<Column>& feature_schema) const = 0;
  virtual std::string descriptor() const = 0;
};

/// One-rule decision stump.
struct StumpModel final : Classifier {
  enum class Rule { Constant, Threshold, Categorical };

  Rule rule = Rule::Constant;
  std::size_t feature = 0;
  double threshold = 0.0;   // Threshold: x <= threshold -> below
  std::string below;
  std::string above;
  std::map<std::string, std::string> by_category;
  std::string fallback;     // training-set majority class
  std::vector<ColumnKind> kinds;
  std::size_t training_errors = 0;
  /// Single training class or no informative feature; the model still
  /// predicts, it just cannot do better than the majority class.
  bool degenerate = false;

  std::string predict(const Record& record) const override;
};

/// Picks the single-feature rule with fewest training errors. Ties go to
/// the lowest feature index, then the lowest threshold. Majority ties go to
/// the lexicographically smallest class. Throws DegenerateTraining on an
/// empty training set.
StumpModel train_stump(std::span<const Record* const> train, const std::vector<Column>& feature_schema);

/// Throws SchemaMismatch when the record's arity or feature kinds differ
/// from the training schema.
std::string predict(const StumpModel& model, const Record& record);

class StumpLearner final : public Learner {
 public:
  std::unique_ptr<Classifier> fit(std::span<const Record* const> train,
                                  const std::vector<Column>& feature_schema) const override;
  std::string descriptor() const override;
};

const Learner& default_learner();

// ---------------------------------------------------------------------------
// Evaluation

struct FoldScore {
  std::size_t fold = 0;
  std::size_t iteration = 0;
  std::size_t scored = 0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double error_rate = 0.0;

  bool operator==(const FoldScore&) const = default;
};

struct SkillReport {
  std::vector<FoldScore> per_fold;
  double mean_f1 = 0.0;
  double mean_error = 0.0;
  std::optional<std::string> positive_class;
  std::string model_descriptor;

  bool operator==(const SkillReport&) const = default;
};

/// Mean of per-fold F1 and error.
void summarize(SkillReport& report);

struct CrossValidation {
  std::vector<FoldScore> per_fold;                   // fold = position in the input list
  std::vector<std::optional<std::string>> predicted;  // per record, file order
  std::vector<std::string> trained_ids;
  std::vector<std::string> scored_ids;
};

struct EvaluateOptions {
  /// Score every non-holdout fold in turn instead of only the current TEST fold.
  bool sweep = false;
  std::optional<std::string> positive_class;
  unsigned threads = 1;
  const Learner* learner = nullptr;  // default_learner() when null
};

/// Rotated cross validation over the given folds: each fold is scored by a
/// model trained on all the other listed folds.
CrossValidation cross_validate(const Dataset& dataset, std::span<const std::vector<std::size_t>> folds,
                               const EvaluateOptions& options);

struct Evaluation {
  SkillReport skill;
  std::vector<std::optional<std::string>> predicted;  // per record, file order
  std::vector<std::string> trained_ids;
  std::vector<std::string> scored_ids;
};

/// Trains on TRAIN folds and scores TEST (or every non-holdout fold when
/// sweeping). Models are discarded on return. Throws HoldoutLeak if a
/// record held out by the plan or by its stored disposition reaches either
/// path.
Evaluation evaluate_plan(const Dataset& dataset, const PartitionPlan& plan, const EvaluateOptions& options = {});

}  // namespace holdout

#endif  // HOLDOUT_EVALUATOR_HPP
