#include "holdout/partitioner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "holdout/error.hpp"
#include "holdout/sha256.hpp"

namespace holdout {

void shuffle_in_place(std::vector<std::size_t>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i-- > 1;) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(items[i], items[j]);
  }
}

std::vector<std::size_t> shuffle(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  shuffle_in_place(order, rng);
  return order;
}

std::vector<std::size_t> shuffle(const Dataset& dataset, std::uint64_t seed) { return shuffle(dataset.size(), seed); }

std::vector<FoldRange> make_folds(std::size_t n, std::size_t k) {
  if (k < 2 || k > n) {
    throw Error(ErrorKind::InvalidK, "k=" + std::to_string(k) + " outside [2, " + std::to_string(n) + "]");
  }
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::vector<FoldRange> folds;
  folds.reserve(k);
  std::size_t at = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    folds.push_back({at, at + len});
    at += len;
  }
  return folds;
}

std::string_view to_string(PartitionMode mode) noexcept { return mode == PartitionMode::KFold ? "kfold" : "loocv"; }

std::optional<PartitionMode> parse_partition_mode(std::string_view text) noexcept {
  if (text == "kfold") return PartitionMode::KFold;
  if (text == "loocv") return PartitionMode::Loocv;
  return std::nullopt;
}

std::vector<Disposition> assign_dispositions(std::size_t fold_count, PartitionMode mode) {
  if (fold_count < 3) {
    throw Error(ErrorKind::InvalidK, std::string(to_string(mode)) + " plan needs holdout, test and train folds; got " +
                                         std::to_string(fold_count) + " folds");
  }
  std::vector<Disposition> roles(fold_count, Disposition::Train);
  roles[0] = Disposition::Holdout;
  roles[1] = Disposition::Test;
  return roles;
}

std::string hash_key(std::string_view study_id, std::string_view record_id, Disposition role, std::uint64_t seed) {
  std::string message;
  message.reserve(study_id.size() + record_id.size() + 32);
  message.append(study_id).append("|").append(record_id).append("|").append(to_string(role)).append("|");
  message += std::to_string(seed);
  return sha256_hex(message);
}

std::size_t PartitionPlan::test_fold() const {
  const auto it = std::find(role_of_fold.begin(), role_of_fold.end(), Disposition::Test);
  if (it == role_of_fold.end()) throw Error(ErrorKind::SchemaViolation, "plan has no test fold");
  return static_cast<std::size_t>(it - role_of_fold.begin());
}

std::vector<std::size_t> PartitionPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(fold_count(), 0);
  for (const auto f : fold_of_record) ++sizes.at(f);
  return sizes;
}

std::vector<std::size_t> PartitionPlan::members(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_record.size(); ++i) {
    if (fold_of_record[i] == fold) out.push_back(i);
  }
  return out;
}

namespace {

std::vector<std::size_t> stratified_order(const Dataset& dataset, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_class[dataset[i].label].push_back(i);
  SplitMix64 rng(seed);
  std::vector<std::size_t> order;
  order.reserve(dataset.size());
  for (auto& [label, idx] : by_class) {
    shuffle_in_place(idx, rng);
    order.insert(order.end(), idx.begin(), idx.end());
  }
  return order;
}

}  // namespace

Dataset apply_plan(const Dataset& dataset, const PartitionPlan& plan) {
  if (plan.fold_of_record.size() != dataset.size()) {
    throw Error(ErrorKind::LengthMismatch, "plan covers " + std::to_string(plan.fold_of_record.size()) +
                                               " records, dataset has " + std::to_string(dataset.size()));
  }
  std::vector<Disposition> roles(dataset.size());
  std::vector<std::string> keys(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    roles[i] = plan.role_of_record(i);
    keys[i] = hash_key(plan.study_id, dataset[i].id, roles[i], plan.seed);
  }
  return dataset.relabeled(roles, keys);
}

LabeledPlan build_plan(const Dataset& dataset, std::string_view study_id, std::uint64_t seed,
                       const PlanOptions& options) {
  if (study_id.empty()) throw Error(ErrorKind::Usage, "study id must be non-empty");
  const std::size_t n = dataset.size();

  PartitionPlan plan;
  plan.study_id = std::string(study_id);
  plan.seed = seed;
  plan.mode = options.mode;
  plan.stratified = options.stratify;
  plan.fold_of_record.assign(n, 0);

  if (options.mode == PartitionMode::KFold) {
    if (options.k < 3) throw Error(ErrorKind::InvalidK, "k-fold plan needs k >= 3, got " + std::to_string(options.k));
    plan.k = options.k;
    if (options.stratify) {
      if (options.k > n) throw Error(ErrorKind::InvalidK, "k exceeds dataset size");
      const auto order = stratified_order(dataset, seed);
      for (std::size_t pos = 0; pos < n; ++pos) plan.fold_of_record[order[pos]] = pos % options.k;
    } else {
      const auto order = shuffle(n, seed);
      const auto folds = make_folds(n, options.k);
      for (std::size_t f = 0; f < folds.size(); ++f) {
        for (std::size_t pos = folds[f].begin; pos < folds[f].end; ++pos) plan.fold_of_record[order[pos]] = f;
      }
    }
    plan.role_of_fold = assign_dispositions(options.k, PartitionMode::KFold);
  } else {
    if (options.stratify) throw Error(ErrorKind::Usage, "stratified assignment is only defined for k-fold plans");
    const std::size_t holdout =
        options.holdout_size ? *options.holdout_size
                             : static_cast<std::size_t>(std::llround(options.holdout_frac * static_cast<double>(n)));
    if (holdout < 1 || holdout + 2 > n) {
      throw Error(ErrorKind::InvalidK, "LOOCV needs 1 <= holdout <= n-2; holdout=" + std::to_string(holdout) +
                                           ", n=" + std::to_string(n));
    }
    plan.k = n - holdout;
    const auto order = shuffle(n, seed);
    for (std::size_t pos = holdout; pos < n; ++pos) plan.fold_of_record[order[pos]] = pos - holdout + 1;
    plan.role_of_fold = assign_dispositions(plan.k + 1, PartitionMode::Loocv);
  }

  Dataset labeled = apply_plan(dataset, plan);
  return {std::move(plan), std::move(labeled)};
}

std::size_t rotation_period(const PartitionPlan& plan) noexcept {
  return plan.fold_count() > 1 ? plan.fold_count() - 1 : 1;
}

PartitionPlan rotate_test_fold(const PartitionPlan& plan) {
  const std::size_t min_k = plan.mode == PartitionMode::KFold ? 4 : 3;
  if (plan.k < min_k) {
    throw Error(ErrorKind::InvalidK, "rotation needs k >= " + std::to_string(min_k) + ", plan has k=" +
                                         std::to_string(plan.k));
  }
  const std::size_t folds = plan.fold_count();
  const std::size_t current = plan.test_fold();
  const std::size_t next = current + 1 < folds ? current + 1 : 1;
  PartitionPlan out = plan;
  out.role_of_fold[current] = Disposition::Train;
  out.role_of_fold[next] = Disposition::Test;
  ++out.iteration;
  return out;
}

VerificationReport verify_partition(const Dataset& labeled, const PartitionPlan& plan,
                                    std::string_view expected_fingerprint) {
  VerificationReport report;
  report.expected_fingerprint = std::string(expected_fingerprint);
  report.actual_fingerprint = labeled.fingerprint();
  report.fingerprint_matches = report.expected_fingerprint == report.actual_fingerprint;

  if (labeled.size() != plan.fold_of_record.size()) {
    report.discrepancies.push_back({"", "dataset has " + std::to_string(labeled.size()) + " records, plan has " +
                                            std::to_string(plan.fold_of_record.size())});
    return report;
  }

  PlanOptions options;
  options.mode = plan.mode;
  options.stratify = plan.stratified;
  if (plan.mode == PartitionMode::KFold) {
    options.k = plan.k;
  } else {
    options.holdout_size = labeled.size() - plan.k;
  }

  PartitionPlan expected;
  try {
    expected = build_plan(labeled, plan.study_id, plan.seed, options).plan;
    for (std::size_t i = 0; i < plan.iteration % rotation_period(expected); ++i) expected = rotate_test_fold(expected);
    expected.iteration = plan.iteration;
  } catch (const Error& e) {
    report.discrepancies.push_back({"", std::string("plan cannot be rebuilt: ") + e.what()});
    return report;
  }

  if (expected.role_of_fold != plan.role_of_fold) {
    report.discrepancies.push_back({"", "manifest role map differs from the recomputed role map"});
  }
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const Record& rec = labeled[i];
    const Disposition role = expected.role_of_record(i);
    if (plan.fold_of_record[i] != expected.fold_of_record[i]) {
      report.discrepancies.push_back({rec.id, "manifest fold " + std::to_string(plan.fold_of_record[i]) +
                                                  " != recomputed fold " + std::to_string(expected.fold_of_record[i])});
    }
    if (!rec.disposition) {
      report.discrepancies.push_back({rec.id, "record is unlabeled"});
      continue;
    }
    std::string detail;
    if (*rec.disposition != role) {
      detail = "disposition " + std::string(to_string(*rec.disposition)) + " != expected " + std::string(to_string(role));
    }
    if (rec.hash_key != hash_key(plan.study_id, rec.id, role, plan.seed)) {
      if (!detail.empty()) detail += "; ";
      detail += "hash key mismatch";
    }
    if (!detail.empty()) report.discrepancies.push_back({rec.id, std::move(detail)});
  }
  return report;
}

}  // namespace holdout
