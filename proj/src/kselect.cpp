#include "holdout/kselect.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_set>

#include "holdout/error.hpp"
#include "holdout/parallel.hpp"
#include "holdout/partitioner.hpp"

namespace holdout {

namespace {

constexpr double kTieTolerance = 1e-12;

std::string fixed(double v, int digits = 4) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << v;
  return ss.str();
}

const Learner& learner_of(const Configuration& c) { return c.learner ? *c.learner : default_learner(); }

bool excluded(const Configuration& c, std::size_t i) { return !c.excluded.empty() && c.excluded[i]; }

double holdout_error(const Dataset& dataset, const Configuration& config, std::span<const std::size_t> train,
                     std::span<const std::size_t> test) {
  std::vector<const Record*> fit_on;
  for (const auto i : train) {
    if (!excluded(config, i)) fit_on.push_back(&dataset[i]);
  }
  if (fit_on.empty()) throw Error(ErrorKind::InsufficientData, "5x2cv half has no trainable record");
  const auto model = learner_of(config).fit(fit_on, dataset.feature_schema());
  std::size_t wrong = 0;
  for (const auto i : test) {
    if (model->predict(dataset[i]) != dataset[i].label) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

}  // namespace

// ---------------------------------------------------------------------------

FiveByTwoResult five_by_two_statistic(std::span<const double, 5> p1, std::span<const double, 5> p2) {
  FiveByTwoResult out;
  double s2_sum = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    auto& r = out.per_replication[i];
    r.p1 = p1[i];
    r.p2 = p2[i];
    r.pbar = (r.p1 + r.p2) / 2.0;
    r.s2 = (r.p1 - r.pbar) * (r.p1 - r.pbar) + (r.p2 - r.pbar) * (r.p2 - r.pbar);
    s2_sum += r.s2;
  }
  const double numerator = out.per_replication[0].p1;
  if (s2_sum == 0.0) {
    out.outcome = numerator == 0.0 ? TTestOutcome::Defined : TTestOutcome::ZeroVariance;
    out.t_stat = 0.0;
    out.significant = false;
    return out;
  }
  out.t_stat = numerator / std::sqrt(s2_sum / 5.0);
  out.significant = std::abs(out.t_stat) > kFiveByTwoCritical;
  return out;
}

FiveByTwoResult five_by_two_ttest(const Dataset& dataset, std::span<const std::size_t> pool, const Configuration& a,
                                  const Configuration& b, std::uint64_t seed) {
  if (pool.size() < 10) {
    throw Error(ErrorKind::InsufficientData, "5x2cv needs at least 10 records, got " + std::to_string(pool.size()));
  }
  SplitMix64 rng(seed);
  std::vector<std::size_t> order(pool.begin(), pool.end());
  std::array<double, 5> p1{};
  std::array<double, 5> p2{};
  for (std::size_t rep = 0; rep < 5; ++rep) {
    shuffle_in_place(order, rng);
    const std::size_t cut = (order.size() + 1) / 2;
    const std::span<const std::size_t> first(order.data(), cut);
    const std::span<const std::size_t> second(order.data() + cut, order.size() - cut);

    const auto scored = [&](std::span<const std::size_t> half) {
      std::vector<std::size_t> out;
      for (const auto i : half) {
        if (!excluded(a, i) && !excluded(b, i)) out.push_back(i);
      }
      if (out.empty()) throw Error(ErrorKind::InsufficientData, "5x2cv half has no scorable record");
      return out;
    };
    const auto test_second = scored(second);
    const auto test_first = scored(first);
    p1[rep] = holdout_error(dataset, a, first, test_second) - holdout_error(dataset, b, first, test_second);
    p2[rep] = holdout_error(dataset, a, second, test_first) - holdout_error(dataset, b, second, test_first);
  }
  return five_by_two_statistic(p1, p2);
}

// ---------------------------------------------------------------------------

double no_information_rate(std::span<const std::string> truth, std::span<const std::string> predicted) {
  if (truth.size() != predicted.size()) throw Error(ErrorKind::LengthMismatch, "truth and predictions differ in length");
  if (truth.empty()) throw Error(ErrorKind::EmptyInput, "nothing to score");
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // class -> (truths, predictions)
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++counts[truth[i]].first;
    ++counts[predicted[i]].second;
  }
  const double n = static_cast<double>(truth.size());
  double gamma = 0.0;
  for (const auto& [label, c] : counts) {
    gamma += (static_cast<double>(c.first) / n) * (1.0 - static_cast<double>(c.second) / n);
  }
  return gamma;
}

Bootstrap632Report combine_632_plus(double err_train, double err_boot, double gamma) {
  Bootstrap632Report r;
  r.err_train = err_train;
  r.err_boot = err_boot;
  r.gamma = gamma;
  if (err_boot > err_train && gamma > err_train) {
    r.relative_overfitting = std::clamp((err_boot - err_train) / (gamma - err_train), 0.0, 1.0);
  }
  r.weight = 0.632 / (1.0 - 0.368 * r.relative_overfitting);
  // err_train + w*(err_boot - err_train) is the same blend as
  // (1-w)*err_train + w*err_boot but exact when the two errors coincide.
  const double blended = err_train + r.weight * (err_boot - err_train);
  r.err_632plus = std::clamp(blended, std::min(err_train, err_boot), std::max(err_train, err_boot));
  return r;
}

Bootstrap632Report bootstrap_632_plus(const Dataset& dataset, std::span<const std::size_t> pool,
                                      const Learner& learner, std::size_t resamples, std::uint64_t seed,
                                      unsigned threads) {
  const std::size_t n = pool.size();
  if (n < 2) throw Error(ErrorKind::InsufficientData, ".632+ bootstrap needs at least 2 records");
  if (resamples < 1) throw Error(ErrorKind::InsufficientData, ".632+ bootstrap needs B >= 1");

  std::vector<const Record*> all;
  all.reserve(n);
  for (const auto i : pool) all.push_back(&dataset[i]);
  std::vector<std::string> truth;
  std::vector<std::string> predicted;
  {
    const auto model = learner.fit(all, dataset.feature_schema());
    for (const Record* r : all) {
      truth.push_back(r->label);
      predicted.push_back(model->predict(*r));
    }
  }
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < n; ++i) wrong += truth[i] != predicted[i];
  const double err_train = static_cast<double>(wrong) / static_cast<double>(n);
  const double gamma = no_information_rate(truth, predicted);

  // Draw every resample up front so the random stream is independent of
  // the worker count.
  SplitMix64 rng(seed);
  std::vector<std::vector<std::size_t>> draws(resamples);
  for (auto& draw : draws) {
    std::vector<bool> in_bag;
    do {
      draw.assign(n, 0);
      in_bag.assign(n, false);
      for (auto& d : draw) {
        d = static_cast<std::size_t>(rng.below(n));
        in_bag[d] = true;
      }
    } while (std::all_of(in_bag.begin(), in_bag.end(), [](bool b) { return b; }));
  }

  std::vector<double> oob_error(resamples, 0.0);
  parallel_for(resamples, threads, [&](std::size_t b) {
    std::vector<const Record*> bag;
    std::vector<bool> in_bag(n, false);
    bag.reserve(n);
    for (const auto d : draws[b]) {
      bag.push_back(all[d]);
      in_bag[d] = true;
    }
    const auto model = learner.fit(bag, dataset.feature_schema());
    std::size_t scored = 0;
    std::size_t misses = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_bag[i]) continue;
      ++scored;
      misses += model->predict(*all[i]) != all[i]->label;
    }
    oob_error[b] = static_cast<double>(misses) / static_cast<double>(scored);
  });
  double err_boot = 0.0;
  for (const double e : oob_error) err_boot += e;
  err_boot /= static_cast<double>(resamples);

  auto report = combine_632_plus(err_train, err_boot, gamma);
  report.resamples = resamples;
  return report;
}

// ---------------------------------------------------------------------------

std::string_view to_string(KStrategy strategy) noexcept {
  switch (strategy) {
    case KStrategy::Representative: return "representative";
    case KStrategy::Fixed10: return "fixed10";
    case KStrategy::Loocv: return "loocv";
    case KStrategy::BootstrapBalanced: return "bootstrap";
  }
  return "";
}

std::optional<KStrategy> parse_strategy(std::string_view text) noexcept {
  for (const auto s : {KStrategy::Representative, KStrategy::Fixed10, KStrategy::Loocv, KStrategy::BootstrapBalanced}) {
    if (text == to_string(s)) return s;
  }
  return std::nullopt;
}

namespace {

struct CandidateRun {
  KCandidate summary;
  std::vector<bool> excluded;       // candidate holdout, file order
  std::vector<std::size_t> usable;  // pool minus candidate holdout
};

CandidateRun run_candidate(const Dataset& dataset, std::span<const std::size_t> pool, std::size_t k,
                           const SelectOptions& options) {
  const auto order = shuffle(pool.size(), options.seed);
  const auto folds = make_folds(pool.size(), k);
  CandidateRun run;
  run.excluded.assign(dataset.size(), false);
  std::vector<std::vector<std::size_t>> cv_folds;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> members;
    for (std::size_t pos = folds[f].begin; pos < folds[f].end; ++pos) members.push_back(pool[order[pos]]);
    if (f == 0) {
      for (const auto i : members) run.excluded[i] = true;
    } else {
      run.usable.insert(run.usable.end(), members.begin(), members.end());
      cv_folds.push_back(std::move(members));
    }
  }
  std::sort(run.usable.begin(), run.usable.end());

  EvaluateOptions eval;
  eval.positive_class = options.positive_class;
  eval.threads = options.threads;
  eval.learner = options.learner;
  const auto cv = cross_validate(dataset, cv_folds, eval);
  SkillReport skill;
  skill.per_fold = cv.per_fold;
  summarize(skill);

  run.summary.k = k;
  run.summary.mean_error = skill.mean_error;
  run.summary.mean_f1 = skill.mean_f1;
  const auto [lo, hi] = std::minmax_element(cv.per_fold.begin(), cv.per_fold.end(),
                                            [](const FoldScore& a, const FoldScore& b) { return a.f1 < b.f1; });
  run.summary.f1_spread = hi->f1 - lo->f1;
  return run;
}

std::vector<std::size_t> validated_candidates(const SelectOptions& options, std::size_t m) {
  if (options.candidates.empty()) {
    throw Error(ErrorKind::InvalidCandidate, std::string(to_string(options.strategy)) + " needs candidate k values");
  }
  std::vector<std::size_t> ks = options.candidates;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  for (const auto k : ks) {
    if (k < 3 || k > m) {
      throw Error(ErrorKind::InvalidCandidate,
                  "k=" + std::to_string(k) + " outside [3, " + std::to_string(m) + "]");
    }
  }
  return ks;
}

std::string join_ks(const std::vector<std::size_t>& ks) {
  std::string out;
  for (const auto k : ks) {
    if (!out.empty()) out += ", ";
    out += std::to_string(k);
  }
  return out;
}

}  // namespace

KSelectionReport select_k(const Dataset& dataset, const SelectOptions& options,
                          std::span<const std::size_t> established_holdout) {
  const std::unordered_set<std::size_t> held(established_holdout.begin(), established_holdout.end());
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!held.count(i)) pool.push_back(i);
  }
  const std::size_t m = pool.size();

  KSelectionReport report;
  report.strategy = options.strategy;

  switch (options.strategy) {
    case KStrategy::Fixed10: {
      if (m < 3) throw Error(ErrorKind::InvalidCandidate, "fixed k needs at least 3 records");
      std::size_t k = 10;
      if (m < 10) {
        k = m;
        report.warnings.push_back("only " + std::to_string(m) + " records available; k clamped from 10 to " +
                                  std::to_string(m));
      }
      report.candidates.push_back(run_candidate(dataset, pool, k, options).summary);
      report.chosen_k = k;
      report.rationale = "k fixed to 10 (low-bias, modest-variance default)";
      if (k != 10) report.rationale += "; clamped to the available record count";
      break;
    }

    case KStrategy::Loocv: {
      const std::size_t holdout =
          established_holdout.empty()
              ? static_cast<std::size_t>(std::llround(options.holdout_frac * static_cast<double>(m)))
              : 0;
      if (holdout + 2 > m) throw Error(ErrorKind::InvalidCandidate, "LOOCV leaves fewer than 2 records");
      const std::size_t k = m - holdout;
      const auto order = shuffle(m, options.seed);
      std::vector<std::vector<std::size_t>> singletons;
      for (std::size_t pos = holdout; pos < m; ++pos) singletons.push_back({pool[order[pos]]});
      EvaluateOptions eval;
      eval.positive_class = options.positive_class;
      eval.threads = options.threads;
      eval.learner = options.learner;
      const auto cv = cross_validate(dataset, singletons, eval);
      SkillReport skill;
      skill.per_fold = cv.per_fold;
      summarize(skill);
      KCandidate c;
      c.k = k;
      c.mean_error = skill.mean_error;
      // Single-record folds make per-fold F1 all-or-nothing; report F1 over
      // the pooled leave-one-out predictions instead.
      std::vector<std::string> truth;
      std::vector<std::string> predicted;
      for (const auto& fold : singletons) {
        truth.push_back(dataset[fold.front()].label);
        predicted.push_back(*cv.predicted[fold.front()]);
      }
      const auto classes = dataset.classes();
      c.mean_f1 = score(truth, predicted, options.positive_class, classes).f1;
      const auto [lo, hi] = std::minmax_element(cv.per_fold.begin(), cv.per_fold.end(),
                                                [](const FoldScore& a, const FoldScore& b) { return a.f1 < b.f1; });
      c.f1_spread = hi->f1 - lo->f1;
      report.candidates.push_back(c);
      report.chosen_k = k;
      report.rationale = "leave-one-out: k = " + std::to_string(m + established_holdout.size()) + " records minus " +
                         std::to_string(holdout + established_holdout.size()) + " held out = " + std::to_string(k);
      break;
    }

    case KStrategy::Representative: {
      const auto ks = validated_candidates(options, m);
      std::vector<CandidateRun> runs;
      for (const auto k : ks) runs.push_back(run_candidate(dataset, pool, k, options));
      std::size_t best = 0;
      for (std::size_t i = 1; i < runs.size(); ++i) {
        if (runs[i].summary.mean_error < runs[best].summary.mean_error - kTieTolerance) best = i;
      }
      std::vector<std::size_t> tied;
      for (const auto& r : runs) {
        if (std::abs(r.summary.mean_error - runs[best].summary.mean_error) <= kTieTolerance) tied.push_back(r.summary.k);
      }

      std::vector<std::size_t> indistinguishable;
      if (m >= 10) {
        const Configuration best_config{options.learner, runs[best].excluded};
        for (std::size_t i = 0; i < runs.size(); ++i) {
          if (i == best) continue;
          const Configuration config{options.learner, runs[i].excluded};
          const auto t = five_by_two_ttest(dataset, pool, config, best_config, options.seed);
          auto& s = runs[i].summary;
          s.t_vs_best = t.t_stat;
          s.significant = t.significant;
          s.zero_variance = t.outcome == TTestOutcome::ZeroVariance;
          if (!t.significant) indistinguishable.push_back(s.k);
        }
      } else {
        report.warnings.push_back("fewer than 10 records; 5x2cv comparison skipped");
      }

      for (auto& r : runs) report.candidates.push_back(r.summary);
      report.chosen_k = runs[best].summary.k;
      report.rationale = "k=" + std::to_string(report.chosen_k) + " has the lowest mean rotated-CV error (" +
                         fixed(runs[best].summary.mean_error) + ")";
      if (tied.size() > 1) {
        report.rationale += "; tied with k in {" + join_ks(tied) + "}, smallest tied k chosen";
      }
      if (!indistinguishable.empty()) {
        report.rationale += "; not significantly different by 5x2cv t-test (alpha 0.05): k in {" +
                            join_ks(indistinguishable) + "}";
      }
      break;
    }

    case KStrategy::BootstrapBalanced: {
      const auto ks = validated_candidates(options, m);
      const Learner& learner = options.learner ? *options.learner : default_learner();
      std::size_t best = 0;
      for (std::size_t i = 0; i < ks.size(); ++i) {
        auto run = run_candidate(dataset, pool, ks[i], options);
        run.summary.err_632plus =
            bootstrap_632_plus(dataset, run.usable, learner, options.bootstrap_resamples, options.seed, options.threads)
                .err_632plus;
        report.candidates.push_back(run.summary);
        if (i == 0) continue;
        const auto& c = report.candidates.back();
        const auto& b = report.candidates[best];
        if (c.f1_spread < b.f1_spread - kTieTolerance ||
            (std::abs(c.f1_spread - b.f1_spread) <= kTieTolerance && *c.err_632plus < *b.err_632plus - kTieTolerance)) {
          best = i;
        }
      }
      const auto& chosen = report.candidates[best];
      report.chosen_k = chosen.k;
      report.rationale = "k=" + std::to_string(chosen.k) + " gives the most equivalent per-fold F1 (spread " +
                         fixed(chosen.f1_spread) + "), .632+ error " + fixed(*chosen.err_632plus) +
                         "; ties broken by .632+ error then smaller k";
      break;
    }
  }
  return report;
}

BalanceCheck balance_check(const SkillReport& skill, double tolerance, std::span<const std::size_t> fold_sizes) {
  BalanceCheck out;
  if (!skill.per_fold.empty()) {
    double lo = skill.per_fold.front().f1;
    double hi = lo;
    double mean = 0.0;
    for (const auto& f : skill.per_fold) {
      lo = std::min(lo, f.f1);
      hi = std::max(hi, f.f1);
      mean += f.f1;
    }
    mean /= static_cast<double>(skill.per_fold.size());
    out.f1_spread = hi - lo;
    for (const auto& f : skill.per_fold) out.deviations.push_back(f.f1 - mean);
  }
  out.scores_within_tolerance = out.f1_spread <= tolerance;
  if (!fold_sizes.empty()) {
    const auto [lo, hi] = std::minmax_element(fold_sizes.begin(), fold_sizes.end());
    out.sizes_balanced = *hi - *lo <= 1;
  }
  out.balanced = out.scores_within_tolerance && out.sizes_balanced;
  return out;
}

}  // namespace holdout
