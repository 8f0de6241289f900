#include "holdout/cli.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "holdout/dataset.hpp"
#include "holdout/error.hpp"
#include "holdout/evaluator.hpp"
#include "holdout/kselect.hpp"
#include "holdout/manifest.hpp"
#include "holdout/partitioner.hpp"

namespace holdout::cli {

namespace {

Error usage(const std::string& message) { return Error(ErrorKind::Usage, message); }

std::filesystem::path manifest_path(const RunConfig& c) {
  if (c.manifest) return *c.manifest;
  if (c.command == "split" && c.output) return std::filesystem::path(c.output->string() + ".manifest.json");
  throw usage("--manifest is required for " + c.command);
}

std::string format_optional(const std::optional<double>& v, int digits = 4) {
  if (!v) return "-";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << *v;
  return ss.str();
}

std::map<Disposition, std::size_t> role_counts(const Dataset& labeled) {
  std::map<Disposition, std::size_t> counts{{Disposition::Holdout, 0}, {Disposition::Test, 0}, {Disposition::Train, 0}};
  for (const auto& r : labeled.records()) ++counts[*r.disposition];
  return counts;
}

void print_skill(const SkillReport& skill, std::ostream& out) {
  out << "fold  iteration  scored  f1      precision  recall  error\n";
  for (const auto& f : skill.per_fold) {
    out << std::setw(4) << f.fold << "  " << std::setw(9) << f.iteration << "  " << std::setw(6) << f.scored << "  "
        << std::fixed << std::setprecision(4) << f.f1 << "  " << std::setw(9) << f.precision << "  " << f.recall
        << "  " << f.error_rate << '\n';
  }
  out << "mean F1 " << std::fixed << std::setprecision(4) << skill.mean_f1 << ", mean error " << skill.mean_error
      << " (" << skill.model_descriptor << ")\n";
  out.unsetf(std::ios::floatfield);
}

void print_selection(const KSelectionReport& report, std::ostream& out) {
  out << "strategy: " << to_string(report.strategy) << '\n';
  out << std::left << std::setw(8) << "k" << std::setw(12) << "mean_error" << std::setw(10) << "mean_F1"
      << std::setw(13) << "err_632plus" << std::setw(11) << "t_vs_best" << "significant\n";
  for (const auto& c : report.candidates) {
    std::string significant = "-";
    if (c.zero_variance) {
      significant = "zero-variance";
    } else if (c.significant) {
      significant = *c.significant ? "yes" : "no";
    }
    out << std::setw(8) << c.k << std::setw(12) << format_optional(c.mean_error) << std::setw(10)
        << format_optional(c.mean_f1) << std::setw(13) << format_optional(c.err_632plus) << std::setw(11)
        << format_optional(c.t_vs_best) << significant << '\n';
  }
  out << std::right;
  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
  out << "chosen k: " << report.chosen_k << '\n' << "rationale: " << report.rationale << '\n';
}

void write_scores_csv(const SkillReport& skill, const std::filesystem::path& path) {
  std::ostringstream ss;
  ss << "fold,role_iteration,f1,precision,recall,error_rate\n";
  ss << std::setprecision(17);
  for (const auto& f : skill.per_fold) {
    ss << f.fold << ',' << f.iteration << ',' << f.f1 << ',' << f.precision << ',' << f.recall << ',' << f.error_rate
       << '\n';
  }
  write_file(path, ss.str());
}

struct Session {
  Manifest manifest;
  Dataset dataset;
};

Session open_session(const RunConfig& c) {
  auto manifest = read_manifest(manifest_path(c));
  auto dataset = load_csv(c.input, manifest.id_column, manifest.label_column);
  return {std::move(manifest), std::move(dataset)};
}

int report_verification(const VerificationReport& report, std::ostream& out, std::ostream& err) {
  if (report.passed()) {
    out << "PASS: fingerprint matches, 0 discrepancies\n";
    return kExitOk;
  }
  err << "FAIL\n";
  if (!report.fingerprint_matches) {
    err << "fingerprint mismatch: manifest " << report.expected_fingerprint << ", file " << report.actual_fingerprint
        << '\n';
  }
  err << report.discrepancies.size() << " discrepancies\n";
  for (const auto& d : report.discrepancies) {
    err << "  " << (d.record_id.empty() ? "<dataset>" : d.record_id) << ": " << d.detail << '\n';
  }
  return kExitVerifyFailed;
}

}  // namespace

int cmd_split(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (!c.seed) throw usage("--seed is required; seeds are never generated implicitly");
  if (c.study_id.empty()) throw usage("--study is required");
  if (!c.output) throw usage("--out is required");

  PlanOptions options;
  options.stratify = c.stratify;
  if (c.strategy && *c.strategy == "loocv") {
    options.mode = PartitionMode::Loocv;
    if (c.holdout_frac) options.holdout_frac = *c.holdout_frac;
  } else if (c.k) {
    if (c.strategy) throw usage("give either --k or --strategy, not both");
    options.k = *c.k;
  } else if (c.strategy && *c.strategy == "fixed10") {
    options.k = 10;
  } else if (c.strategy) {
    throw usage("split takes --k, --strategy fixed10 or --strategy loocv; run select-k to pick k first");
  } else {
    throw usage("--k is required");
  }

  const auto mpath = manifest_path(c);
  if (std::filesystem::exists(mpath) && !c.force) {
    bool same_study = true;
    try {
      same_study = read_manifest(mpath).study_id == c.study_id;
    } catch (const Error&) {
    }
    if (same_study) {
      throw usage("manifest '" + mpath.string() + "' already exists for study '" + c.study_id +
                  "'; pass --force to re-randomize");
    }
  }

  const auto dataset = load_csv(c.input, c.id_column, c.label_column);
  auto labeled = build_plan(dataset, c.study_id, *c.seed, options);

  EvaluateOptions eval;
  eval.positive_class = c.positive_class;
  eval.threads = c.threads;
  const auto evaluation = evaluate_plan(labeled.dataset, labeled.plan, eval);

  Manifest manifest;
  manifest.study_id = c.study_id;
  manifest.dataset_fingerprint = dataset.fingerprint();
  manifest.id_column = c.id_column;
  manifest.label_column = c.label_column;
  manifest.plan = labeled.plan;
  manifest.skill = evaluation.skill;
  manifest.created_at = utc_timestamp();
  manifest.tool_version = tool_version();

  write_labeled_csv(labeled.dataset, *c.output);
  write_manifest(manifest, mpath);

  const auto sizes = labeled.plan.fold_sizes();
  auto counts = role_counts(labeled.dataset);
  out << "n=" << dataset.size() << " k=" << labeled.plan.k << " mode=" << to_string(labeled.plan.mode) << '\n';
  if (labeled.plan.mode == PartitionMode::KFold) {
    out << "fold sizes:";
    for (const auto s : sizes) out << ' ' << s;
    out << '\n';
  }
  out << "holdout=" << counts[Disposition::Holdout] << " test=" << counts[Disposition::Test]
      << " train=" << counts[Disposition::Train] << '\n';
  out << "one-time model F1 " << std::fixed << std::setprecision(4) << evaluation.skill.mean_f1
      << " (model discarded)\n";
  out.unsetf(std::ios::floatfield);
  out << "wrote " << c.output->string() << " and " << mpath.string() << '\n';
  (void)err;
  return kExitOk;
}

int cmd_select_k(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (!c.strategy) throw usage("--strategy is required");
  const auto strategy = parse_strategy(*c.strategy);
  if (!strategy) throw usage("unknown strategy '" + *c.strategy + "'");
  const bool randomized = *strategy == KStrategy::Representative || *strategy == KStrategy::BootstrapBalanced;
  if (randomized && !c.seed) throw usage("--seed is required for strategy " + *c.strategy);

  SelectOptions options;
  options.strategy = *strategy;
  options.candidates = c.candidates;
  options.bootstrap_resamples = c.bootstrap_b;
  options.seed = c.seed.value_or(0);
  if (c.holdout_frac) options.holdout_frac = *c.holdout_frac;
  options.positive_class = c.positive_class;
  options.threads = c.threads;

  std::optional<Manifest> manifest;
  std::vector<std::size_t> established;
  std::optional<Dataset> dataset;
  if (c.manifest) {
    auto session = open_session(c);
    if (session.dataset.fingerprint() != session.manifest.dataset_fingerprint) {
      err << "dataset fingerprint does not match manifest\n";
      return kExitVerifyFailed;
    }
    for (std::size_t i = 0; i < session.dataset.size(); ++i) {
      if (session.manifest.plan.role_of_record(i) == Disposition::Holdout) established.push_back(i);
    }
    if (!c.seed) options.seed = session.manifest.plan.seed;
    if (!c.positive_class) options.positive_class = session.manifest.skill.positive_class;
    manifest = std::move(session.manifest);
    dataset = std::move(session.dataset);
  } else {
    dataset = load_csv(c.input, c.id_column, c.label_column);
  }

  const auto report = select_k(*dataset, options, established);
  print_selection(report, out);
  if (c.report_json) write_file(*c.report_json, to_json(report));
  if (manifest) {
    manifest->k_selection = report;
    write_manifest(*manifest, *c.manifest);
  }
  return kExitOk;
}

int cmd_evaluate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  auto [manifest, dataset] = open_session(c);
  if (dataset.fingerprint() != manifest.dataset_fingerprint) {
    err << "dataset fingerprint does not match manifest; run verify\n";
    return kExitVerifyFailed;
  }
  EvaluateOptions options;
  options.sweep = true;
  options.positive_class = c.positive_class ? c.positive_class : manifest.skill.positive_class;
  options.threads = c.threads;
  const auto evaluation = evaluate_plan(dataset, manifest.plan, options);

  print_skill(evaluation.skill, out);
  std::vector<std::size_t> sizes;
  const auto all_sizes = manifest.plan.fold_sizes();
  for (std::size_t f = 0; f < all_sizes.size(); ++f) {
    if (manifest.plan.role_of_fold[f] != Disposition::Holdout) sizes.push_back(all_sizes[f]);
  }
  const auto balance = balance_check(evaluation.skill, c.tolerance, sizes);
  out << "balance: " << (balance.balanced ? "equivalent" : "NOT equivalent") << " (F1 spread " << std::fixed
      << std::setprecision(4) << balance.f1_spread << ", tolerance " << c.tolerance << ", fold sizes "
      << (balance.sizes_balanced ? "balanced" : "unbalanced") << ")\n";
  out.unsetf(std::ios::floatfield);

  if (c.scores_csv) write_scores_csv(evaluation.skill, *c.scores_csv);
  manifest.skill = evaluation.skill;
  write_manifest(manifest, manifest_path(c));
  return kExitOk;
}

int cmd_rotate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  auto [manifest, dataset] = open_session(c);
  const auto check = verify_partition(dataset, manifest);
  if (!check.passed()) {
    err << "refusing to rotate a partition that fails verification\n";
    return report_verification(check, out, err);
  }
  manifest.plan = rotate_test_fold(manifest.plan);
  const auto rotated = apply_plan(dataset, manifest.plan);
  write_labeled_csv(rotated, c.output.value_or(c.input));
  write_manifest(manifest, manifest_path(c));
  out << "iteration " << manifest.plan.iteration << ": test fold " << manifest.plan.test_fold() << ", holdout fold 0 unchanged\n";
  return kExitOk;
}

int cmd_verify(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto [manifest, dataset] = open_session(c);
  return report_verification(verify_partition(dataset, manifest), out, err);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig config;
  CLI::App app{"Holdout, test and train partitioning with k-fold cross validation", "holdout"};
  app.require_subcommand(1);

  std::string seed_text;
  std::string candidates_text;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--in", config.input, "Input CSV")->required();
    sub->add_option("--manifest", config.manifest, "Manifest JSON path");
    sub->add_option("--threads", config.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::Range(1u, 256u));
  };
  const auto add_columns = [&](CLI::App* sub) {
    sub->add_option("--id-column", config.id_column, "Record id column")->capture_default_str();
    sub->add_option("--label-column", config.label_column, "Class label column")->capture_default_str();
  };

  auto* split = app.add_subcommand("split", "Shuffle, fold, label holdout/test/train and write the manifest");
  add_common(split);
  add_columns(split);
  split->add_option("--out", config.output, "Labeled CSV output")->required();
  split->add_option("--study", config.study_id, "Study identifier");
  split->add_option("--seed", seed_text, "Shuffle seed (unsigned 64-bit)");
  split->add_option("--k", config.k, "Number of folds");
  split->add_option("--strategy", config.strategy, "fixed10 or loocv instead of --k");
  split->add_option("--holdout-frac", config.holdout_frac, "LOOCV holdout share")->check(CLI::Range(0.0, 1.0));
  split->add_option("--positive-class", config.positive_class, "Positive class for binary F1");
  split->add_flag("--stratify", config.stratify, "Per-class shuffles, round-robin folds");
  split->add_flag("--force", config.force, "Overwrite an existing manifest for this study");

  auto* select = app.add_subcommand("select-k", "Choose k: representative, fixed10, loocv or bootstrap");
  add_common(select);
  add_columns(select);
  select->add_option("--strategy", config.strategy, "representative|fixed10|loocv|bootstrap")->required();
  select->add_option("--candidates", candidates_text, "Comma-separated candidate k values");
  select->add_option("--seed", seed_text, "Seed for splits and resamples");
  select->add_option("--holdout-frac", config.holdout_frac, "LOOCV holdout share")->check(CLI::Range(0.0, 1.0));
  select->add_option("--bootstrap-b", config.bootstrap_b, "Bootstrap resamples")->check(CLI::PositiveNumber);
  select->add_option("--positive-class", config.positive_class, "Positive class for binary F1");
  select->add_option("--report-json", config.report_json, "Write the selection report as JSON");

  auto* evaluate = app.add_subcommand("evaluate", "Score the one-time model over every non-holdout fold");
  add_common(evaluate);
  evaluate->add_option("--positive-class", config.positive_class, "Positive class for binary F1");
  evaluate->add_option("--scores-csv", config.scores_csv, "Per-fold scores CSV");
  evaluate->add_option("--tolerance", config.tolerance, "Allowed per-fold F1 spread")->check(CLI::NonNegativeNumber);

  auto* rotate = app.add_subcommand("rotate", "Move the test role to the next fold; the holdout never moves");
  add_common(rotate);
  rotate->add_option("--out", config.output, "Labeled CSV output (defaults to --in)");

  auto* verify = app.add_subcommand("verify", "Recompute every hash key and the plan, report discrepancies");
  add_common(verify);

  for (auto* sub : {split, select, evaluate, rotate, verify}) {
    if (sub != split && sub != select) sub->get_option("--manifest")->required();
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (!seed_text.empty()) {
      std::size_t used = 0;
      if (seed_text.find_first_not_of("0123456789") != std::string::npos) throw usage("--seed must be a decimal u64");
      config.seed = std::stoull(seed_text, &used);
    }
    if (!candidates_text.empty()) {
      std::stringstream ss(candidates_text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
          throw usage("--candidates must be comma-separated positive integers");
        }
        config.candidates.push_back(std::stoul(item));
      }
    }

    for (auto* sub : app.get_subcommands()) config.command = sub->get_name();
    if (config.command == "split") return cmd_split(config, out, err);
    if (config.command == "select-k") return cmd_select_k(config, out, err);
    if (config.command == "evaluate") return cmd_evaluate(config, out, err);
    if (config.command == "rotate") return cmd_rotate(config, out, err);
    return cmd_verify(config, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::Io ? kExitIo : kExitUsage;
  } catch (const std::out_of_range&) {
    err << "error: numeric argument out of range\n";
    return kExitUsage;
  }
}

}  // namespace holdout::cli
