#include "holdout/evaluator.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "holdout/error.hpp"
#include "holdout/parallel.hpp"

namespace holdout {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double precision, double recall) {
  const double sum = precision + recall;
  return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

}  // namespace

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t t = 0;
  for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

std::size_t ConfusionMatrix::count(std::string_view truth, std::string_view predicted) const {
  const auto index = [&](std::string_view c) -> std::optional<std::size_t> {
    const auto it = std::lower_bound(classes.begin(), classes.end(), c);
    if (it == classes.end() || *it != c) return std::nullopt;
    return static_cast<std::size_t>(it - classes.begin());
  };
  const auto t = index(truth);
  const auto p = index(predicted);
  return t && p ? counts[*t][*p] : 0;
}

ScoreResult score(std::span<const std::string> truth, std::span<const std::string> predicted,
                  std::optional<std::string_view> positive_class, std::span<const std::string> classes) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorKind::LengthMismatch,
                std::to_string(truth.size()) + " truths vs " + std::to_string(predicted.size()) + " predictions");
  }
  if (truth.empty()) throw Error(ErrorKind::EmptyInput, "nothing to score");

  std::set<std::string> labels(classes.begin(), classes.end());
  labels.insert(truth.begin(), truth.end());
  labels.insert(predicted.begin(), predicted.end());

  ScoreResult out;
  auto& m = out.matrix;
  m.classes.assign(labels.begin(), labels.end());
  m.counts.assign(m.classes.size(), std::vector<std::size_t>(m.classes.size(), 0));
  const auto index = [&](const std::string& c) {
    return static_cast<std::size_t>(std::lower_bound(m.classes.begin(), m.classes.end(), c) - m.classes.begin());
  };
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++m.counts[index(truth[i])][index(predicted[i])];
    if (truth[i] != predicted[i]) ++wrong;
  }
  out.error_rate = ratio(wrong, truth.size());

  const auto one_vs_rest = [&](std::size_t c) {
    std::size_t tp = m.counts[c][c];
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (std::size_t o = 0; o < m.classes.size(); ++o) {
      if (o == c) continue;
      fp += m.counts[o][c];
      fn += m.counts[c][o];
    }
    const double p = ratio(tp, tp + fp);
    const double r = ratio(tp, tp + fn);
    return std::array<double, 3>{p, r, harmonic(p, r)};
  };

  if (positive_class) {
    const auto it = std::lower_bound(m.classes.begin(), m.classes.end(), *positive_class);
    if (it != m.classes.end() && *it == *positive_class) {
      const auto [p, r, f] = one_vs_rest(static_cast<std::size_t>(it - m.classes.begin()));
      out.precision = p;
      out.recall = r;
      out.f1 = f;
    }
    return out;
  }

  // Macro average over the label set; classes given by the caller count even
  // when absent from this sample.
  std::vector<std::size_t> averaged;
  if (classes.empty()) {
    averaged.resize(m.classes.size());
    std::iota(averaged.begin(), averaged.end(), std::size_t{0});
  } else {
    std::set<std::string> wanted(classes.begin(), classes.end());
    for (std::size_t c = 0; c < m.classes.size(); ++c) {
      if (wanted.count(m.classes[c])) averaged.push_back(c);
    }
  }
  for (const auto c : averaged) {
    const auto [p, r, f] = one_vs_rest(c);
    out.precision += p;
    out.recall += r;
    out.f1 += f;
  }
  const double count = static_cast<double>(averaged.size());
  out.precision /= count;
  out.recall /= count;
  out.f1 /= count;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct ClassIndex {
  std::vector<std::string> names;  // sorted
  std::vector<std::size_t> of_record;

  explicit ClassIndex(std::span<const Record* const> train) {
    std::set<std::string> s;
    for (const Record* r : train) s.insert(r->label);
    names.assign(s.begin(), s.end());
    of_record.reserve(train.size());
    for (const Record* r : train) {
      of_record.push_back(
          static_cast<std::size_t>(std::lower_bound(names.begin(), names.end(), r->label) - names.begin()));
    }
  }
};

/// Majority class and the number of records it gets wrong. Ties go to the
/// lowest class index, which is the lexicographically smallest label.
std::pair<std::size_t, std::size_t> majority(const std::vector<std::size_t>& counts) {
  std::size_t best = 0;
  std::size_t total = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    total += counts[c];
    if (counts[c] > counts[best]) best = c;
  }
  return {best, total - counts[best]};
}

struct Candidate {
  StumpModel::Rule rule = StumpModel::Rule::Constant;
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t below = 0;
  std::size_t above = 0;
  std::map<std::string, std::size_t> by_category;
  std::size_t errors = 0;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.errors != b.errors) return a.errors < b.errors;
  if (a.feature != b.feature) return a.feature < b.feature;
  return a.threshold < b.threshold;
}

std::optional<Candidate> best_threshold(std::span<const Record* const> train, const ClassIndex& cls,
                                        std::size_t feature) {
  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto value = [&](std::size_t i) { return std::get<double>(train[i]->features[feature]); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value(a) < value(b); });

  std::vector<std::size_t> left(cls.names.size(), 0);
  std::vector<std::size_t> right(cls.names.size(), 0);
  for (std::size_t i = 0; i < n; ++i) ++right[cls.of_record[i]];

  std::optional<Candidate> best;
  for (std::size_t pos = 0; pos + 1 < n; ++pos) {
    const std::size_t c = cls.of_record[order[pos]];
    ++left[c];
    --right[c];
    const double lo = value(order[pos]);
    const double hi = value(order[pos + 1]);
    if (!(lo < hi)) continue;
    const auto [lc, le] = majority(left);
    const auto [rc, re] = majority(right);
    Candidate cand;
    cand.rule = StumpModel::Rule::Threshold;
    cand.feature = feature;
    cand.threshold = lo + (hi - lo) / 2.0;
    cand.below = lc;
    cand.above = rc;
    cand.errors = le + re;
    // Thresholds ascend, so strict improvement keeps the lowest on ties.
    if (!best || cand.errors < best->errors) best = std::move(cand);
  }
  return best;
}

Candidate categorical_rule(std::span<const Record* const> train, const ClassIndex& cls, std::size_t feature) {
  std::map<std::string, std::vector<std::size_t>> counts;
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto& row = counts[std::get<std::string>(train[i]->features[feature])];
    row.resize(cls.names.size(), 0);
    ++row[cls.of_record[i]];
  }
  Candidate cand;
  cand.rule = StumpModel::Rule::Categorical;
  cand.feature = feature;
  for (const auto& [category, row] : counts) {
    const auto [c, e] = majority(row);
    cand.by_category.emplace(category, c);
    cand.errors += e;
  }
  return cand;
}

void check_schema(const StumpModel& model, const Record& record) {
  if (record.features.size() != model.kinds.size()) {
    throw Error(ErrorKind::SchemaMismatch, "record '" + record.id + "' has " + std::to_string(record.features.size()) +
                                               " features, model expects " + std::to_string(model.kinds.size()));
  }
  for (std::size_t f = 0; f < model.kinds.size(); ++f) {
    const bool numeric = std::holds_alternative<double>(record.features[f]);
    if (numeric != (model.kinds[f] == ColumnKind::Numeric)) {
      throw Error(ErrorKind::SchemaMismatch, "record '" + record.id + "' feature " + std::to_string(f) + " kind differs");
    }
  }
}

}  // namespace

StumpModel train_stump(std::span<const Record* const> train, const std::vector<Column>& feature_schema) {
  if (train.empty()) throw Error(ErrorKind::DegenerateTraining, "no training records");
  const ClassIndex cls(train);

  StumpModel model;
  model.kinds.reserve(feature_schema.size());
  for (const auto& c : feature_schema) model.kinds.push_back(c.kind);
  for (const Record* r : train) check_schema(model, *r);

  std::vector<std::size_t> totals(cls.names.size(), 0);
  for (const auto c : cls.of_record) ++totals[c];
  const auto [global, global_errors] = majority(totals);
  model.fallback = cls.names[global];

  std::optional<Candidate> best;
  bool informative = false;
  for (std::size_t f = 0; f < feature_schema.size(); ++f) {
    std::optional<Candidate> cand;
    if (feature_schema[f].kind == ColumnKind::Numeric) {
      cand = best_threshold(train, cls, f);
    } else {
      cand = categorical_rule(train, cls, f);
      if (cand->by_category.size() < 2) cand.reset();
    }
    if (!cand) continue;
    informative = true;
    if (!best || better(*cand, *best)) best = std::move(cand);
  }

  model.degenerate = cls.names.size() == 1 || !informative;
  if (!best || cls.names.size() == 1) {
    model.rule = StumpModel::Rule::Constant;
    model.below = model.above = model.fallback;
    model.training_errors = global_errors;
    return model;
  }
  model.rule = best->rule;
  model.feature = best->feature;
  model.training_errors = best->errors;
  if (best->rule == StumpModel::Rule::Threshold) {
    model.threshold = best->threshold;
    model.below = cls.names[best->below];
    model.above = cls.names[best->above];
  } else {
    for (const auto& [category, c] : best->by_category) model.by_category.emplace(category, cls.names[c]);
  }
  return model;
}

std::string StumpModel::predict(const Record& record) const {
  check_schema(*this, record);
  switch (rule) {
    case Rule::Constant:
      return fallback;
    case Rule::Threshold:
      return std::get<double>(record.features[feature]) <= threshold ? below : above;
    case Rule::Categorical: {
      const auto it = by_category.find(std::get<std::string>(record.features[feature]));
      return it == by_category.end() ? fallback : it->second;
    }
  }
  return fallback;
}

std::string predict(const StumpModel& model, const Record& record) { return model.predict(record); }

std::unique_ptr<Classifier> StumpLearner::fit(std::span<const Record* const> train,
                                              const std::vector<Column>& feature_schema) const {
  return std::make_unique<StumpModel>(train_stump(train, feature_schema));
}

std::string StumpLearner::descriptor() const { return "one-rule decision stump (discarded after scoring)"; }

const Learner& default_learner() {
  static const StumpLearner learner;
  return learner;
}

// ---------------------------------------------------------------------------

void summarize(SkillReport& report) {
  report.mean_f1 = 0.0;
  report.mean_error = 0.0;
  if (report.per_fold.empty()) return;
  for (const auto& f : report.per_fold) {
    report.mean_f1 += f.f1;
    report.mean_error += f.error_rate;
  }
  report.mean_f1 /= static_cast<double>(report.per_fold.size());
  report.mean_error /= static_cast<double>(report.per_fold.size());
}

CrossValidation cross_validate(const Dataset& dataset, std::span<const std::vector<std::size_t>> folds,
                               const EvaluateOptions& options) {
  const Learner& learner = options.learner ? *options.learner : default_learner();
  const auto classes = dataset.classes();

  struct FoldResult {
    FoldScore score;
    std::vector<std::pair<std::size_t, std::string>> predictions;
  };
  std::vector<FoldResult> results(folds.size());

  parallel_for(folds.size(), options.threads, [&](std::size_t f) {
    std::vector<const Record*> train;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g == f) continue;
      for (const auto i : folds[g]) train.push_back(&dataset[i]);
    }
    if (folds[f].empty()) throw Error(ErrorKind::EmptyInput, "fold " + std::to_string(f) + " is empty");
    const auto model = learner.fit(train, dataset.feature_schema());
    std::vector<std::string> truth;
    std::vector<std::string> predicted;
    auto& out = results[f];
    for (const auto i : folds[f]) {
      truth.push_back(dataset[i].label);
      predicted.push_back(model->predict(dataset[i]));
      out.predictions.emplace_back(i, predicted.back());
    }
    const auto s = score(truth, predicted, options.positive_class, classes);
    out.score = FoldScore{f, 0, truth.size(), s.f1, s.precision, s.recall, s.error_rate};
  });

  CrossValidation cv;
  cv.predicted.assign(dataset.size(), std::nullopt);
  std::unordered_set<std::size_t> trained;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    cv.per_fold.push_back(results[f].score);
    for (auto& [i, p] : results[f].predictions) {
      cv.predicted[i] = std::move(p);
      cv.scored_ids.push_back(dataset[i].id);
    }
    if (folds.size() > 1) trained.insert(folds[f].begin(), folds[f].end());
  }
  std::vector<std::size_t> trained_sorted(trained.begin(), trained.end());
  std::sort(trained_sorted.begin(), trained_sorted.end());
  for (const auto i : trained_sorted) cv.trained_ids.push_back(dataset[i].id);
  return cv;
}

Evaluation evaluate_plan(const Dataset& dataset, const PartitionPlan& plan, const EvaluateOptions& options) {
  if (plan.fold_of_record.size() != dataset.size()) {
    throw Error(ErrorKind::LengthMismatch, "plan and dataset sizes differ");
  }
  const Learner& learner = options.learner ? *options.learner : default_learner();
  const std::size_t folds = plan.fold_count();
  const std::size_t test = plan.test_fold();

  std::vector<std::vector<std::size_t>> members(folds);
  for (std::size_t i = 0; i < dataset.size(); ++i) members[plan.fold_of_record[i]].push_back(i);

  Evaluation eval;
  eval.skill.positive_class = options.positive_class;
  eval.skill.model_descriptor = learner.descriptor();
  eval.predicted.assign(dataset.size(), std::nullopt);

  if (options.sweep) {
    std::vector<std::vector<std::size_t>> cv_folds;
    std::vector<std::size_t> fold_ids;
    for (std::size_t f = 0; f < folds; ++f) {
      if (plan.role_of_fold[f] == Disposition::Holdout) continue;
      cv_folds.push_back(members[f]);
      fold_ids.push_back(f);
    }
    auto cv = cross_validate(dataset, cv_folds, options);
    const std::size_t period = rotation_period(plan);
    for (std::size_t j = 0; j < cv.per_fold.size(); ++j) {
      FoldScore s = cv.per_fold[j];
      s.fold = fold_ids[j];
      // Rotation step at which this fold holds the TEST role.
      s.iteration = plan.iteration + (s.fold + period - test) % period;
      eval.skill.per_fold.push_back(s);
    }
    eval.predicted = std::move(cv.predicted);
    eval.trained_ids = std::move(cv.trained_ids);
    eval.scored_ids = std::move(cv.scored_ids);
  } else {
    std::vector<const Record*> train;
    for (std::size_t f = 0; f < folds; ++f) {
      if (plan.role_of_fold[f] != Disposition::Train) continue;
      for (const auto i : members[f]) {
        train.push_back(&dataset[i]);
        eval.trained_ids.push_back(dataset[i].id);
      }
    }
    const auto model = learner.fit(train, dataset.feature_schema());
    std::vector<std::string> truth;
    std::vector<std::string> predicted;
    for (const auto i : members[test]) {
      truth.push_back(dataset[i].label);
      predicted.push_back(model->predict(dataset[i]));
      eval.predicted[i] = predicted.back();
      eval.scored_ids.push_back(dataset[i].id);
    }
    const auto classes = dataset.classes();
    const auto s = score(truth, predicted, options.positive_class, classes);
    eval.skill.per_fold.push_back(FoldScore{test, plan.iteration, truth.size(), s.f1, s.precision, s.recall, s.error_rate});
  }
  summarize(eval.skill);

  std::unordered_set<std::string> held_out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (plan.role_of_record(i) == Disposition::Holdout || dataset[i].disposition == Disposition::Holdout) {
      held_out.insert(dataset[i].id);
    }
  }
  for (const auto* ids : {&eval.trained_ids, &eval.scored_ids}) {
    for (const auto& id : *ids) {
      if (held_out.count(id)) throw Error(ErrorKind::HoldoutLeak, "holdout record '" + id + "' reached evaluation");
    }
  }
  return eval;
}

}  // namespace holdout
