#ifndef HOLDOUT_PARTITIONER_HPP
#define HOLDOUT_PARTITIONER_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "holdout/dataset.hpp"

namespace holdout {

/// SplitMix64 (Steele, Lea & Flood). The only randomness source in the
/// library: every shuffle, half-split and bootstrap draw goes through it.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform-ish draw in [0, bound) by modulo reduction.
  std::uint64_t below(std::uint64_t bound) noexcept { return next() % bound; }

 private:
  std::uint64_t state_;
};

/// Fisher-Yates over [0, n): for i = n-1 down to 1, swap i with next() mod (i+1).
std::vector<std::size_t> shuffle(std::size_t n, std::uint64_t seed);
/// Same as shuffle(n, seed), continuing from an existing generator.
void shuffle_in_place(std::vector<std::size_t>& items, SplitMix64& rng);
std::vector<std::size_t> shuffle(const Dataset& dataset, std::uint64_t seed);

struct FoldRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const FoldRange&) const = default;
};

/// Contiguous ranges over shuffled positions; the first n mod k folds get
/// one extra element. Throws InvalidK unless 2 <= k <= n.
std::vector<FoldRange> make_folds(std::size_t n, std::size_t k);

enum class PartitionMode { KFold, Loocv };

std::string_view to_string(PartitionMode mode) noexcept;
std::optional<PartitionMode> parse_partition_mode(std::string_view text) noexcept;

/// Fold 0 holds out, fold 1 tests, the rest train. KFold needs at least
/// three folds; in LOOCV mode `fold_count` includes the holdout fold.
std::vector<Disposition> assign_dispositions(std::size_t fold_count, PartitionMode mode);

/// SHA-256 of "study_id|record_id|role|seed" with the role lowercase and
/// the seed in decimal.
std::string hash_key(std::string_view study_id, std::string_view record_id, Disposition role, std::uint64_t seed);

struct PartitionPlan {
  std::string study_id;
  std::uint64_t seed = 0;
  /// Number of folds in KFold mode; number of non-holdout records (one
  /// fold each) in LOOCV mode, where fold 0 is the holdout on top of them.
  std::size_t k = 0;
  PartitionMode mode = PartitionMode::KFold;
  bool stratified = false;
  std::size_t iteration = 0;
  std::vector<std::size_t> fold_of_record;  // file order
  std::vector<Disposition> role_of_fold;

  std::size_t fold_count() const noexcept { return role_of_fold.size(); }
  std::size_t test_fold() const;
  std::vector<std::size_t> fold_sizes() const;
  /// Record indices (file order) of one fold.
  std::vector<std::size_t> members(std::size_t fold) const;
  Disposition role_of_record(std::size_t record) const { return role_of_fold[fold_of_record[record]]; }

  bool operator==(const PartitionPlan&) const = default;
};

struct PlanOptions {
  PartitionMode mode = PartitionMode::KFold;
  std::size_t k = 10;
  /// LOOCV holdout size. When unset, llround(holdout_frac * n).
  std::optional<std::size_t> holdout_size;
  double holdout_frac = 0.1;
  /// Per-class shuffles concatenated in class order, folds dealt round-robin.
  bool stratify = false;
};

struct LabeledPlan {
  PartitionPlan plan;
  Dataset dataset;
};

/// Shuffle, split, assign roles and stamp every record.
LabeledPlan build_plan(const Dataset& dataset, std::string_view study_id, std::uint64_t seed,
                       const PlanOptions& options = {});

/// Stamps dispositions and hash keys implied by the plan onto the dataset.
Dataset apply_plan(const Dataset& dataset, const PartitionPlan& plan);

/// Moves TEST to the next non-holdout fold (cyclic over 1..fold_count-1).
/// Membership and the holdout fold never change. KFold needs k >= 4,
/// LOOCV k >= 3.
PartitionPlan rotate_test_fold(const PartitionPlan& plan);

/// Number of rotations after which the role map repeats.
std::size_t rotation_period(const PartitionPlan& plan) noexcept;

struct Discrepancy {
  std::string record_id;
  std::string detail;

  bool operator==(const Discrepancy&) const = default;
};

struct VerificationReport {
  bool fingerprint_matches = true;
  std::string expected_fingerprint;
  std::string actual_fingerprint;
  std::vector<Discrepancy> discrepancies;

  bool passed() const noexcept { return fingerprint_matches && discrepancies.empty(); }
};

/// Rebuilds the plan from (study, seed, k, mode), replays `iteration`
/// rotations and compares every stored disposition and hash key.
VerificationReport verify_partition(const Dataset& labeled, const PartitionPlan& plan,
                                    std::string_view expected_fingerprint);

}  // namespace holdout

#endif  // HOLDOUT_PARTITIONER_HPP
