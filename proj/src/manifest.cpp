#include "holdout/manifest.hpp"

#include <charconv>
#include <ctime>
#include <initializer_list>
#include <set>

#include "holdout/error.hpp"
#include "json.hpp"

#ifndef HOLDOUT_VERSION
#define HOLDOUT_VERSION "0.0.0"
#endif

namespace holdout {

using nlohmann::json;

std::string tool_version() { return HOLDOUT_VERSION; }

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool Manifest::same_content(const Manifest& other) const {
  Manifest a = *this;
  a.created_at = other.created_at;
  return a == other;
}

void validate(const Manifest& m) {
  const auto fail = [](const std::string& why) { throw Error(ErrorKind::SchemaViolation, why); };
  const auto& p = m.plan;
  if (m.study_id.empty()) fail("empty study_id");
  if (p.study_id != m.study_id) fail("plan study_id differs from manifest study_id");
  if (p.mode == PartitionMode::KFold) {
    if (p.k < 3) fail("k-fold plan with k < 3");
    if (p.fold_count() != p.k) fail("role_of_fold length differs from k");
  } else if (p.fold_count() != p.k + 1) {
    fail("LOOCV role_of_fold must list the holdout fold plus k singleton folds");
  }
  std::size_t holdouts = 0;
  std::size_t tests = 0;
  for (const auto r : p.role_of_fold) {
    holdouts += r == Disposition::Holdout;
    tests += r == Disposition::Test;
  }
  if (holdouts != 1 || tests != 1) fail("plan needs exactly one holdout and one test fold");
  for (const auto f : p.fold_of_record) {
    if (f >= p.fold_count()) fail("fold index out of range");
  }
}

// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void violation(const std::string& why) { throw Error(ErrorKind::SchemaViolation, why); }

void expect_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) violation(std::string(where) + " must be an object");
  std::set<std::string, std::less<>> wanted(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!wanted.count(key)) violation(std::string(where) + ": unexpected field '" + key + "'");
  }
  for (const auto& key : wanted) {
    if (!j.contains(key)) violation(std::string(where) + ": missing field '" + key + "'");
  }
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional_number(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::uint64_t parse_seed(const json& j) {
  const auto text = j.get<std::string>();
  std::uint64_t seed = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) violation("seed is not a decimal u64");
  return seed;
}

json plan_json(const PartitionPlan& p) {
  json roles = json::array();
  for (const auto r : p.role_of_fold) roles.push_back(std::string(to_string(r)));
  return json{{"fold_of_record", p.fold_of_record},
              {"iteration", p.iteration},
              {"k", p.k},
              {"mode", std::string(to_string(p.mode))},
              {"role_of_fold", roles},
              {"seed", std::to_string(p.seed)},
              {"stratified", p.stratified},
              {"study_id", p.study_id}};
}

PartitionPlan plan_from(const json& j) {
  expect_keys(j, "plan", {"fold_of_record", "iteration", "k", "mode", "role_of_fold", "seed", "stratified", "study_id"});
  PartitionPlan p;
  p.fold_of_record = j.at("fold_of_record").get<std::vector<std::size_t>>();
  p.iteration = j.at("iteration").get<std::size_t>();
  p.k = j.at("k").get<std::size_t>();
  const auto mode = parse_partition_mode(j.at("mode").get<std::string>());
  if (!mode) violation("plan.mode must be kfold or loocv");
  p.mode = *mode;
  for (const auto& r : j.at("role_of_fold")) {
    const auto d = parse_disposition(r.get<std::string>());
    if (!d) violation("plan.role_of_fold has an unknown role");
    p.role_of_fold.push_back(*d);
  }
  p.seed = parse_seed(j.at("seed"));
  p.stratified = j.at("stratified").get<bool>();
  p.study_id = j.at("study_id").get<std::string>();
  return p;
}

json skill_json(const SkillReport& s) {
  json folds = json::array();
  for (const auto& f : s.per_fold) {
    folds.push_back(json{{"error_rate", f.error_rate},
                         {"f1", f.f1},
                         {"fold", f.fold},
                         {"iteration", f.iteration},
                         {"precision", f.precision},
                         {"recall", f.recall},
                         {"scored", f.scored}});
  }
  return json{{"mean_error", s.mean_error},
              {"mean_f1", s.mean_f1},
              {"model_descriptor", s.model_descriptor},
              {"per_fold", folds},
              {"positive_class", s.positive_class ? json(*s.positive_class) : json(nullptr)}};
}

SkillReport skill_from(const json& j) {
  expect_keys(j, "skill", {"mean_error", "mean_f1", "model_descriptor", "per_fold", "positive_class"});
  SkillReport s;
  s.mean_error = j.at("mean_error").get<double>();
  s.mean_f1 = j.at("mean_f1").get<double>();
  s.model_descriptor = j.at("model_descriptor").get<std::string>();
  if (!j.at("positive_class").is_null()) s.positive_class = j.at("positive_class").get<std::string>();
  for (const auto& f : j.at("per_fold")) {
    expect_keys(f, "skill.per_fold[]", {"error_rate", "f1", "fold", "iteration", "precision", "recall", "scored"});
    s.per_fold.push_back(FoldScore{f.at("fold").get<std::size_t>(), f.at("iteration").get<std::size_t>(),
                                   f.at("scored").get<std::size_t>(), f.at("f1").get<double>(),
                                   f.at("precision").get<double>(), f.at("recall").get<double>(),
                                   f.at("error_rate").get<double>()});
  }
  return s;
}

json selection_json(const KSelectionReport& r) {
  json candidates = json::array();
  for (const auto& c : r.candidates) {
    candidates.push_back(json{{"err_632plus", optional_number(c.err_632plus)},
                              {"f1_spread", c.f1_spread},
                              {"k", c.k},
                              {"mean_error", c.mean_error},
                              {"mean_f1", c.mean_f1},
                              {"significant", c.significant ? json(*c.significant) : json(nullptr)},
                              {"t_vs_best", optional_number(c.t_vs_best)},
                              {"zero_variance", c.zero_variance}});
  }
  return json{{"candidates", candidates},
              {"chosen_k", r.chosen_k},
              {"rationale", r.rationale},
              {"strategy", std::string(to_string(r.strategy))},
              {"warnings", r.warnings}};
}

KSelectionReport selection_from(const json& j) {
  expect_keys(j, "k_selection", {"candidates", "chosen_k", "rationale", "strategy", "warnings"});
  KSelectionReport r;
  const auto strategy = parse_strategy(j.at("strategy").get<std::string>());
  if (!strategy) violation("k_selection.strategy is unknown");
  r.strategy = *strategy;
  r.chosen_k = j.at("chosen_k").get<std::size_t>();
  r.rationale = j.at("rationale").get<std::string>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  for (const auto& c : j.at("candidates")) {
    expect_keys(c, "k_selection.candidates[]",
                {"err_632plus", "f1_spread", "k", "mean_error", "mean_f1", "significant", "t_vs_best", "zero_variance"});
    KCandidate k;
    k.err_632plus = read_optional_number(c.at("err_632plus"));
    k.f1_spread = c.at("f1_spread").get<double>();
    k.k = c.at("k").get<std::size_t>();
    k.mean_error = c.at("mean_error").get<double>();
    k.mean_f1 = c.at("mean_f1").get<double>();
    if (!c.at("significant").is_null()) k.significant = c.at("significant").get<bool>();
    k.t_vs_best = read_optional_number(c.at("t_vs_best"));
    k.zero_variance = c.at("zero_variance").get<bool>();
    r.candidates.push_back(k);
  }
  return r;
}

}  // namespace

std::string to_json(const Manifest& m) {
  validate(m);
  const json j{{"created_at", m.created_at},
               {"dataset_fingerprint", m.dataset_fingerprint},
               {"hash_scheme", std::string(kHashScheme)},
               {"id_column", m.id_column},
               {"k_selection", m.k_selection ? selection_json(*m.k_selection) : json(nullptr)},
               {"label_column", m.label_column},
               {"plan", plan_json(m.plan)},
               {"skill", skill_json(m.skill)},
               {"study_id", m.study_id},
               {"tool_version", m.tool_version}};
  return j.dump(2) + "\n";
}

std::string to_json(const KSelectionReport& report) { return selection_json(report).dump(2) + "\n"; }

Manifest manifest_from_json(std::string_view text) {
  Manifest m;
  try {
    const json j = json::parse(text);
    expect_keys(j, "manifest",
                {"created_at", "dataset_fingerprint", "hash_scheme", "id_column", "k_selection", "label_column", "plan",
                 "skill", "study_id", "tool_version"});
    if (j.at("hash_scheme").get<std::string>() != kHashScheme) violation("unsupported hash_scheme");
    m.created_at = j.at("created_at").get<std::string>();
    m.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
    m.id_column = j.at("id_column").get<std::string>();
    m.label_column = j.at("label_column").get<std::string>();
    if (!j.at("k_selection").is_null()) m.k_selection = selection_from(j.at("k_selection"));
    m.plan = plan_from(j.at("plan"));
    m.skill = skill_from(j.at("skill"));
    m.study_id = j.at("study_id").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
  } catch (const json::exception& e) {
    violation(std::string("malformed manifest: ") + e.what());
  }
  validate(m);
  return m;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  write_file(path, to_json(manifest));
}

Manifest read_manifest(const std::filesystem::path& path) { return manifest_from_json(read_file(path)); }

VerificationReport verify_partition(const Dataset& labeled, const Manifest& manifest) {
  return verify_partition(labeled, manifest.plan, manifest.dataset_fingerprint);
}

}  // namespace holdout
