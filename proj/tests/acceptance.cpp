// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "holdout/cli.hpp"
#include "holdout/error.hpp"
#include "holdout/evaluator.hpp"
#include "holdout/kselect.hpp"
#include "holdout/manifest.hpp"
#include "holdout/partitioner.hpp"
#include "test_support.hpp"

using namespace holdout;
namespace fs = std::filesystem;

namespace {

struct Failure {
  std::string why;
};

void require(bool ok, const std::string& why) {
  if (!ok) throw Failure{why};
}

int quiet_run(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::string path(const fs::path& p) { return p.string(); }

void write_plain_csv(const Dataset& d, const fs::path& p) {
  std::string text = csv::join(d.header()) + "\n";
  for (const auto& row : d.rows()) text += csv::join(row) + "\n";
  testing::write_text(p, text);
}

std::set<std::string> holdout_ids(const PartitionPlan& plan, const Dataset& d) {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (plan.role_of_record(i) == Disposition::Holdout) ids.insert(d[i].id);
  }
  return ids;
}

// ---------------------------------------------------------------------------

void three_way_partition() {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + gen() % 400;
    const std::size_t k = 3 + gen() % (std::min<std::size_t>(n, 30) - 2);
    const std::uint64_t seed = gen();
    const auto d = testing::synthetic(n, trial);
    const auto [plan, labeled] = build_plan(d, "p", seed, {.k = k});
    std::size_t holdout_folds = 0, test_folds = 0;
    for (const auto r : plan.role_of_fold) {
      holdout_folds += r == Disposition::Holdout;
      test_folds += r == Disposition::Test;
    }
    require(holdout_folds == 1 && test_folds == 1, "fold roles");
    require(labeled.size() == n, "coverage");
    std::set<std::string> seen;
    for (const auto& r : labeled.records()) {
      require(r.disposition.has_value(), "unlabeled record");
      require(seen.insert(r.id).second, "record in two groups");
    }
    const auto sizes = plan.fold_sizes();
    require(sizes.size() == k, "fold count");
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    require(*hi - *lo <= 1, "fold sizes differ by more than one");
  }
}

void determinism() {
  testing::TempDir dir("det");
  write_plain_csv(testing::synthetic(2000, 4), dir / "in.csv");
  std::optional<std::string> first;
  int run_no = 0;
  for (const std::string threads : {"1", "1", "1", "4", "8"}) {
    const auto out = dir / ("out" + std::to_string(run_no++) + ".csv");
    require(quiet_run({"split", "--in", path(dir / "in.csv"), "--out", path(out), "--study", "det", "--seed", "2024",
                       "--k", "10", "--threads", threads}) == 0,
            "split failed");
    const auto text = testing::read_text(out);
    if (!first) first = text;
    require(text == *first, "labeled CSV differs between runs (threads=" + threads + ")");
  }
  const auto d = testing::synthetic(500, 3);
  const auto [plan, labeled] = build_plan(d, "det", 5, {.k = 7});
  const auto one = evaluate_plan(labeled, plan, {.sweep = true, .threads = 1});
  const auto many = evaluate_plan(labeled, plan, {.sweep = true, .threads = 6});
  require(one.skill == many.skill && one.predicted == many.predicted, "evaluation depends on thread count");
}

void holdout_immutability() {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 20 + gen() % 300;
    const std::size_t k = 4 + gen() % (std::min<std::size_t>(n, 30) - 3);
    const auto d = testing::synthetic(n, trial);
    const auto start = build_plan(d, "imm", gen(), {.k = k}).plan;
    const auto held = holdout_ids(start, d);
    auto plan = start;
    for (std::size_t step = 1; step <= 3 * (k - 1); ++step) {
      plan = rotate_test_fold(plan);
      require(holdout_ids(plan, d) == held, "holdout changed after rotation");
      if (step % (k - 1) == 0) require(plan.role_of_fold == start.role_of_fold, "role map not restored");
    }
  }
  // The same through the command line on a labeled file.
  testing::TempDir dir("imm");
  write_plain_csv(testing::synthetic(100, 9), dir / "in.csv");
  const auto l = path(dir / "l.csv");
  const auto m = path(dir / "l.json");
  require(quiet_run({"split", "--in", path(dir / "in.csv"), "--out", l, "--study", "i", "--seed", "1", "--k", "5",
                     "--manifest", m}) == 0,
          "split failed");
  const auto original = testing::read_text(l);
  for (int step = 0; step < 4; ++step) require(quiet_run({"rotate", "--in", l, "--manifest", m}) == 0, "rotate failed");
  require(testing::read_text(l) == original, "labeled file not restored after k-1 rotations");
}

void hash_verification() {
  const auto d = testing::synthetic(1000, 5);
  const auto [plan, labeled] = build_plan(d, "hash-study", 123456789, {.k = 8});
  for (const auto& r : labeled.records()) {
    const auto expected =
        testing::reference_sha256("hash-study|" + r.id + "|" + std::string(to_string(*r.disposition)) + "|123456789");
    require(r.hash_key == expected, "hash key mismatch for " + r.id);
  }
  testing::TempDir dir("hash");
  write_plain_csv(d, dir / "in.csv");
  const auto l = path(dir / "l.csv");
  const auto m = path(dir / "l.json");
  require(quiet_run({"split", "--in", path(dir / "in.csv"), "--out", l, "--study", "h", "--seed", "77", "--k", "8",
                     "--manifest", m}) == 0,
          "split failed");
  require(quiet_run({"verify", "--in", l, "--manifest", m}) == 0, "clean file fails verification");
  auto text = testing::read_text(l);
  const auto pos = text.find(",train,");
  require(pos != std::string::npos, "no train row found");
  text.replace(pos, 7, ",holdout,");
  testing::write_text(dir / "t.csv", text);
  require(quiet_run({"verify", "--in", path(dir / "t.csv"), "--manifest", m}) == 3, "tamper not detected with exit 3");
}

void score_oracle() {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + gen() % 50;
    const std::size_t classes = 2 + gen() % 3;
    std::vector<std::string> t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = std::string(1, static_cast<char>('a' + gen() % classes));
      p[i] = std::string(1, static_cast<char>('a' + gen() % classes));
    }
    std::map<std::pair<std::string, std::string>, std::size_t> matrix;
    for (std::size_t i = 0; i < n; ++i) ++matrix[{t[i], p[i]}];
    std::set<std::string> labels(t.begin(), t.end());
    labels.insert(p.begin(), p.end());
    double macro_p = 0, macro_r = 0, macro_f = 0;
    for (const auto& c : labels) {
      double tp = 0, fp = 0, fn = 0;
      for (const auto& [cell, count] : matrix) {
        if (cell.first == c && cell.second == c) tp += count;
        if (cell.first != c && cell.second == c) fp += count;
        if (cell.first == c && cell.second != c) fn += count;
      }
      const double precision = tp + fp == 0 ? 0 : tp / (tp + fp);
      const double recall = tp + fn == 0 ? 0 : tp / (tp + fn);
      const double f1 = precision + recall == 0 ? 0 : 2 * precision * recall / (precision + recall);
      const auto s = score(t, p, c);
      require(std::abs(s.precision - precision) <= 1e-12, "precision");
      require(std::abs(s.recall - recall) <= 1e-12, "recall");
      require(std::abs(s.f1 - f1) <= 1e-12, "f1");
      macro_p += precision;
      macro_r += recall;
      macro_f += f1;
    }
    const double m = static_cast<double>(labels.size());
    const auto s = score(t, p);
    require(std::abs(s.precision - macro_p / m) <= 1e-12, "macro precision");
    require(std::abs(s.recall - macro_r / m) <= 1e-12, "macro recall");
    require(std::abs(s.f1 - macro_f / m) <= 1e-12, "macro f1");
  }
}

void bootstrap_identities() {
  std::mt19937_64 gen(632);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double e = u(gen);
    require(combine_632_plus(e, e, u(gen)).err_632plus == e, "err_boot = err_train not exact");
  }
  const auto full = combine_632_plus(0.0, 0.5, 0.5);
  require(std::abs(full.weight - 1.0) <= 1e-12, "w != 1");
  require(std::abs(full.err_632plus - 0.5) <= 1e-12, "err_632plus != 0.5");
  for (int trial = 0; trial < 1000; ++trial) {
    double a = u(gen), b = u(gen);
    if (b < a) std::swap(a, b);
    const auto r = combine_632_plus(a, b, u(gen));
    require(r.err_632plus >= a && r.err_632plus <= b, "estimate outside [err_train, err_boot]");
  }
}

void gamma_property() {
  for (const int c : {2, 3, 4}) {
    std::mt19937_64 gen(static_cast<std::uint64_t>(100 + c));
    std::vector<std::string> truth, pred;
    for (int i = 0; i < 10000; ++i) {
      truth.push_back(std::to_string(i % c));
      pred.push_back(std::to_string(gen() % c));
    }
    const double g = no_information_rate(truth, pred);
    require(std::abs(g - (c - 1.0) / c) <= 0.03, "gamma off for c=" + std::to_string(c));
  }
}

void five_by_two_oracle() {
  const std::array<double, 5> p1{0.1, 0.2, 0.0, 0.1, 0.1};
  const std::array<double, 5> p2{0.0, 0.1, 0.1, 0.2, 0.1};
  // Independent evaluation: s2_i = (p1_i - p2_i)^2 / 2, mean over five.
  double s2 = 0;
  for (int i = 0; i < 5; ++i) s2 += (p1[i] - p2[i]) * (p1[i] - p2[i]) / 2.0;
  const double expected = p1[0] / std::sqrt(s2 / 5.0);
  const auto r = five_by_two_statistic(p1, p2);
  require(std::abs(r.t_stat - expected) <= 1e-9, "t_stat differs from oracle");
  require(std::abs(r.t_stat - 1.5811388300841898) <= 1e-9, "t_stat differs from frozen value");

  const auto d = testing::synthetic(200, 8);
  std::vector<std::size_t> pool(d.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  const auto self = five_by_two_ttest(d, pool, {}, {}, 3);
  require(self.t_stat == 0.0 && !self.significant, "self-comparison not zero");

  const std::array<double, 5> constant{0.05, 0.05, 0.05, 0.05, 0.05};
  require(five_by_two_statistic(constant, constant).outcome == TTestOutcome::ZeroVariance, "no ZeroVariance outcome");
}

void loocv_equivalence() {
  const auto d = testing::synthetic(30, 13);
  const std::uint64_t seed = 31;
  const auto [plan, labeled] = build_plan(d, "loo", seed, {.mode = PartitionMode::Loocv, .holdout_frac = 0.1});
  require(plan.k == 27, "LOOCV k is not 27");
  const auto loo = evaluate_plan(labeled, plan, {.sweep = true});

  // k-fold with k = 27 over the same 27 non-holdout records, same shuffle.
  const auto order = shuffle(d.size(), seed);
  const std::vector<std::size_t> rest(order.begin() + 3, order.end());
  std::vector<std::vector<std::size_t>> folds;
  for (const auto& f : make_folds(rest.size(), 27)) folds.emplace_back(rest.begin() + f.begin, rest.begin() + f.end);
  const auto kfold = cross_validate(d, folds, {});
  require(loo.predicted == kfold.predicted, "per-record predictions differ");
  std::size_t scored = 0;
  for (const auto& p : loo.predicted) scored += p.has_value();
  require(scored == 27, "not every non-holdout record scored once");

  const auto chosen = select_k(d, {.strategy = KStrategy::Loocv, .holdout_frac = 0.1});
  require(chosen.chosen_k == 27, "select_k LOOCV did not choose 27");
}

void end_to_end() {
  testing::TempDir dir("e2e");
  write_plain_csv(testing::synthetic(1000, 10), dir / "data.csv");
  const auto in = path(dir / "data.csv");
  const auto l = path(dir / "labeled.csv");
  const auto m = path(dir / "manifest.json");
  std::string err;
  const std::vector<std::vector<std::string>> steps{
      {"split", "--in", in, "--out", l, "--manifest", m, "--study", "e2e", "--seed", "42", "--k", "10",
       "--positive-class", "pos"},
      {"evaluate", "--in", l, "--manifest", m},
      {"select-k", "--in", l, "--manifest", m, "--strategy", "representative", "--candidates", "5,10,20", "--seed", "7"},
      {"rotate", "--in", l, "--manifest", m},
      {"verify", "--in", l, "--manifest", m}};
  for (const auto& step : steps) {
    require(quiet_run(step, &err) == 0, step[0] + " failed: " + err);
  }
  const auto manifest = read_manifest(m);
  require(manifest.plan.k == 10 && manifest.plan.iteration == 1, "plan missing from manifest");
  require(manifest.skill.per_fold.size() == 9, "per-fold skill missing from manifest");
  require(manifest.k_selection && manifest.k_selection->candidates.size() == 3, "selection report missing");
  std::set<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir.path())) files.insert(entry.path().filename().string());
  require(files == std::set<std::string>{"data.csv", "labeled.csv", "manifest.json"}, "unexpected artifact on disk");
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    std::string name;
    double budget_seconds;  // 0 = no runtime bound
    std::function<void()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "three-way partition property", 5, three_way_partition},
      {2, "determinism across runs and thread counts", 5, determinism},
      {3, "holdout immutability under rotation", 5, holdout_immutability},
      {4, "hash verification and tamper detection", 5, hash_verification},
      {5, "score oracle", 0, score_oracle},
      {6, ".632+ identities", 0, bootstrap_identities},
      {7, "gamma property", 10, gamma_property},
      {8, "5x2cv oracle", 0, five_by_two_oracle},
      {9, "LOOCV equivalence", 5, loocv_equivalence},
      {10, "end-to-end workflow", 60, end_to_end},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      c.check();
    } catch (const Failure& f) {
      ok = false;
      detail = f.why;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ok && c.budget_seconds > 0 && seconds > c.budget_seconds) {
      ok = false;
      detail = "over the " + std::to_string(c.budget_seconds) + " s budget";
    }
    std::ostringstream line;
    line << (ok ? "PASS" : "FAIL") << "  [" << c.number << "] " << c.name << " (" << std::fixed
         << std::setprecision(3) << seconds << " s)";
    if (!detail.empty()) line << ": " << detail;
    std::cout << line.str() << '\n';
    failures += !ok;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
  return failures == 0 ? 0 : 1;
}
