#ifndef HOLDOUT_KSELECT_HPP
#define HOLDOUT_KSELECT_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "holdout/dataset.hpp"
#include "holdout/evaluator.hpp"

namespace holdout {

/// Two-sided 0.975 quantile of Student's t with 5 degrees of freedom.
inline constexpr double kFiveByTwoCritical = 2.571;

// ---------------------------------------------------------------------------
// 5x2cv paired t-test

struct Replication {
  double p1 = 0.0;  // error(A) - error(B), train on half 1, test on half 2
  double p2 = 0.0;  // same with the halves swapped
  double pbar = 0.0;
  double s2 = 0.0;

  bool operator==(const Replication&) const = default;
};

enum class TTestOutcome { Defined, ZeroVariance };

struct FiveByTwoResult {
  std::array<Replication, 5> per_replication{};
  double t_stat = 0.0;
  bool significant = false;
  TTestOutcome outcome = TTestOutcome::Defined;

  bool operator==(const FiveByTwoResult&) const = default;
};

/// t = p1 of the first replication / sqrt(mean of the five s2). When every
/// s2 is zero, t is 0 if that p1 is 0 as well, else the outcome is
/// ZeroVariance (t left at 0, never significant).
FiveByTwoResult five_by_two_statistic(std::span<const double, 5> p1, std::span<const double, 5> p2);

/// A learner plus the records it must never touch (its own holdout).
struct Configuration {
  const Learner* learner = nullptr;  // default_learner() when null
  std::vector<bool> excluded;        // per record, file order; empty = none
};

/// Five seeded 50/50 splits of `pool`; both configurations train on each
/// half and are scored on the other, restricted to records neither
/// configuration excludes. Throws InsufficientData when |pool| < 10.
FiveByTwoResult five_by_two_ttest(const Dataset& dataset, std::span<const std::size_t> pool, const Configuration& a,
                                  const Configuration& b, std::uint64_t seed);

// ---------------------------------------------------------------------------
// .632+ bootstrap

struct Bootstrap632Report {
  double err_train = 0.0;
  double err_boot = 0.0;
  double gamma = 0.0;
  double relative_overfitting = 0.0;  // R
  double weight = 0.632;              // w
  double err_632plus = 0.0;
  std::size_t resamples = 0;

  bool operator==(const Bootstrap632Report&) const = default;
};

/// Sum over classes of p_c * (1 - q_c): p_c the share of truths equal to c,
/// q_c the share of predictions equal to c.
double no_information_rate(std::span<const std::string> truth, std::span<const std::string> predicted);

/// R, w and the blended estimate from the three error rates.
Bootstrap632Report combine_632_plus(double err_train, double err_boot, double gamma);

/// err_train: resubstitution error on `pool`. err_boot: mean out-of-bag
/// error over B resamples of size |pool| drawn with replacement (a resample
/// with no out-of-bag record is redrawn). gamma from the full-pool model.
Bootstrap632Report bootstrap_632_plus(const Dataset& dataset, std::span<const std::size_t> pool,
                                      const Learner& learner, std::size_t resamples, std::uint64_t seed,
                                      unsigned threads = 1);

// ---------------------------------------------------------------------------
// Choosing k

enum class KStrategy { Representative, Fixed10, Loocv, BootstrapBalanced };

std::string_view to_string(KStrategy strategy) noexcept;
std::optional<KStrategy> parse_strategy(std::string_view text) noexcept;

struct KCandidate {
  std::size_t k = 0;
  double mean_error = 0.0;
  double mean_f1 = 0.0;
  double f1_spread = 0.0;  // max - min per-fold F1
  std::optional<double> err_632plus;
  std::optional<double> t_vs_best;
  std::optional<bool> significant;
  bool zero_variance = false;

  bool operator==(const KCandidate&) const = default;
};

struct KSelectionReport {
  KStrategy strategy = KStrategy::Fixed10;
  std::vector<KCandidate> candidates;
  std::size_t chosen_k = 0;
  std::string rationale;
  std::vector<std::string> warnings;

  bool operator==(const KSelectionReport&) const = default;
};

struct SelectOptions {
  KStrategy strategy = KStrategy::Fixed10;
  std::vector<std::size_t> candidates;
  std::size_t bootstrap_resamples = 200;
  std::uint64_t seed = 0;
  /// LOOCV holdout share when no established holdout is passed.
  double holdout_frac = 0.1;
  std::optional<std::string> positive_class;
  unsigned threads = 1;
  const Learner* learner = nullptr;
};

/// Works on the records outside `established_holdout` only. For each
/// candidate k the pool is shuffled with `seed` and split into k folds;
/// fold 0 is that candidate's holdout and the remaining folds are
/// cross-validated with a rotating test fold.
KSelectionReport select_k(const Dataset& dataset, const SelectOptions& options,
                          std::span<const std::size_t> established_holdout = {});

// ---------------------------------------------------------------------------

struct BalanceCheck {
  bool balanced = false;
  bool scores_within_tolerance = false;
  bool sizes_balanced = true;
  double f1_spread = 0.0;
  std::vector<double> deviations;  // per fold, f1 - mean f1
};

/// Balanced iff max - min per-fold F1 <= tolerance and fold sizes differ
/// by at most one.
BalanceCheck balance_check(const SkillReport& skill, double tolerance, std::span<const std::size_t> fold_sizes = {});

}  // namespace holdout

#endif  // HOLDOUT_KSELECT_HPP
