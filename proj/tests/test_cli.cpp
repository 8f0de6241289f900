#include <set>
#include <sstream>

#include "doctest.h"
#include "holdout/cli.hpp"
#include "holdout/manifest.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace holdout;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string p(const fs::path& path) { return path.string(); }

void write_source(const fs::path& path, std::size_t n, std::uint64_t seed = 1) {
  const auto d = testing::synthetic(n, seed);
  std::string text = csv::join(d.header()) + "\n";
  for (const auto& row : d.rows()) text += csv::join(row) + "\n";
  testing::write_text(path, text);
}

std::string without_timestamp(const std::string& manifest_text) {
  auto j = nlohmann::json::parse(manifest_text);
  j.erase("created_at");
  return j.dump();
}

}  // namespace

TEST_CASE("split requires a seed, a study and an output") {
  testing::TempDir dir("cli");
  write_source(dir / "in.csv", 50);
  auto r = run({"split", "--in", p(dir / "in.csv"), "--out", p(dir / "out.csv"), "--study", "s", "--k", "5"});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("--seed") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out.csv"));

  r = run({"split", "--in", p(dir / "in.csv"), "--out", p(dir / "out.csv"), "--seed", "1", "--k", "5"});
  CHECK(r.code == cli::kExitUsage);
  r = run({"split", "--in", p(dir / "in.csv"), "--out", p(dir / "out.csv"), "--study", "s", "--seed", "x1", "--k", "5"});
  CHECK(r.code == cli::kExitUsage);
  r = run({"split", "--in", p(dir / "in.csv"), "--out", p(dir / "out.csv"), "--study", "s", "--seed", "1", "--k", "2"});
  CHECK(r.code == cli::kExitUsage);
  r = run({"split", "--in", p(dir / "missing.csv"), "--out", p(dir / "out.csv"), "--study", "s", "--seed", "1", "--k", "5"});
  CHECK(r.code == cli::kExitIo);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({}).code == cli::kExitUsage);
}

TEST_CASE("split is deterministic and refuses to re-randomize silently") {
  testing::TempDir dir("cli");
  write_source(dir / "in.csv", 200);
  const std::vector<std::string> args{"split", "--in", p(dir / "in.csv"), "--out", p(dir / "a.csv"),
                                      "--study", "s1", "--seed", "42", "--k", "5", "--manifest", p(dir / "a.json")};
  auto r = run(args);
  REQUIRE(r.code == cli::kExitOk);
  CHECK(r.out.find("model discarded") != std::string::npos);
  const auto csv1 = testing::read_text(dir / "a.csv");
  const auto json1 = testing::read_text(dir / "a.json");

  r = run(args);
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("--force") != std::string::npos);

  auto forced = args;
  forced.push_back("--force");
  REQUIRE(run(forced).code == cli::kExitOk);
  CHECK(testing::read_text(dir / "a.csv") == csv1);
  CHECK(without_timestamp(testing::read_text(dir / "a.json")) == without_timestamp(json1));

  // Default manifest location sits next to the output.
  REQUIRE(run({"split", "--in", p(dir / "in.csv"), "--out", p(dir / "b.csv"), "--study", "s1", "--seed", "42", "--k",
               "5"})
              .code == cli::kExitOk);
  CHECK(fs::exists(dir / "b.csv.manifest.json"));
  CHECK(testing::read_text(dir / "b.csv") == csv1);
}

TEST_CASE("rotation keeps the holdout and cycles back") {
  testing::TempDir dir("cli");
  write_source(dir / "in.csv", 120);
  const auto labeled = p(dir / "l.csv");
  const auto manifest = p(dir / "l.json");
  REQUIRE(run({"split", "--in", p(dir / "in.csv"), "--out", labeled, "--study", "r", "--seed", "3", "--k", "5",
               "--manifest", manifest})
              .code == cli::kExitOk);
  const auto original = load_csv(labeled, "id", "label");
  std::vector<std::string> holdout;
  for (const auto& rec : original.records()) {
    if (rec.disposition == Disposition::Holdout) holdout.push_back(rec.id);
  }

  for (int step = 1; step <= 4; ++step) {
    const auto r = run({"rotate", "--in", labeled, "--manifest", manifest});
    REQUIRE(r.code == cli::kExitOk);
    const auto now = load_csv(labeled, "id", "label");
    std::vector<std::string> held_now;
    for (const auto& rec : now.records()) {
      if (rec.disposition == Disposition::Holdout) held_now.push_back(rec.id);
    }
    CHECK(held_now == holdout);
    CHECK(run({"verify", "--in", labeled, "--manifest", manifest}).code == cli::kExitOk);
    if (step < 4) CHECK(testing::read_text(labeled) != labeled_csv_text(original));
  }
  // k - 1 = 4 rotations restore the original role map.
  const auto back = load_csv(labeled, "id", "label");
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i].disposition == original[i].disposition);
  CHECK(read_manifest(manifest).plan.iteration == 4);
}

TEST_CASE("rotate refuses k = 3 and tampered partitions") {
  testing::TempDir dir("cli");
  write_source(dir / "in.csv", 60);
  const auto labeled = p(dir / "l.csv");
  const auto manifest = p(dir / "l.json");
  REQUIRE(run({"split", "--in", p(dir / "in.csv"), "--out", labeled, "--study", "r", "--seed", "3", "--k", "3",
               "--manifest", manifest})
              .code == cli::kExitOk);
  const auto r = run({"rotate", "--in", labeled, "--manifest", manifest});
  CHECK(r.code == cli::kExitUsage);

  REQUIRE(run({"split", "--in", p(dir / "in.csv"), "--out", labeled, "--study", "r", "--seed", "3", "--k", "4",
               "--manifest", manifest, "--force"})
              .code == cli::kExitOk);
  auto text = testing::read_text(labeled);
  const auto pos = text.find(",train,");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 7, ",test,");
  testing::write_text(labeled, text);
  CHECK(run({"rotate", "--in", labeled, "--manifest", manifest}).code == cli::kExitVerifyFailed);
}

TEST_CASE("verify reports tampering and foreign datasets") {
  testing::TempDir dir("cli");
  write_source(dir / "in.csv", 100);
  write_source(dir / "other.csv", 100, 2);
  const auto labeled = p(dir / "l.csv");
  const auto manifest = p(dir / "l.json");
  REQUIRE(run({"split", "--in", p(dir / "in.csv"), "--out", labeled, "--study", "v", "--seed", "11", "--k", "4",
               "--manifest", manifest})
              .code == cli::kExitOk);
  auto r = run({"verify", "--in", labeled, "--manifest", manifest});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("PASS") != std::string::npos);

  // Unlabeled source verifies by fingerprint but has no keys to check.
  r = run({"verify", "--in", p(dir / "other.csv"), "--manifest", manifest});
  CHECK(r.code == cli::kExitVerifyFailed);
  CHECK(r.err.find("fingerprint mismatch") != std::string::npos);

  // Flip one disposition, leave the hash key as it was.
  auto text = testing::read_text(labeled);
  const auto pos = text.find(",holdout,");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 9, ",train,");
  testing::write_text(dir / "t.csv", text);
  r = run({"verify", "--in", p(dir / "t.csv"), "--manifest", manifest});
  CHECK(r.code == cli::kExitVerifyFailed);
  CHECK(r.err.find("FAIL") != std::string::npos);

  CHECK(run({"verify", "--in", labeled}).code == cli::kExitUsage);
}

TEST_CASE("evaluate writes scores and leaves no model behind") {
  testing::TempDir dir("cli");
  write_source(dir / "in.csv", 150);
  const auto labeled = p(dir / "l.csv");
  const auto manifest = p(dir / "l.json");
  REQUIRE(run({"split", "--in", p(dir / "in.csv"), "--out", labeled, "--study", "e", "--seed", "5", "--k", "6",
               "--manifest", manifest, "--positive-class", "pos"})
              .code == cli::kExitOk);
  const auto r = run({"evaluate", "--in", labeled, "--manifest", manifest, "--scores-csv", p(dir / "scores.csv"),
                      "--threads", "3"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(r.out.find("balance:") != std::string::npos);

  const auto scores = parse_csv_text(testing::read_text(dir / "scores.csv"), "fold", "f1");
  CHECK(scores.size() == 5);
  const std::vector<std::string> expected{"fold", "role_iteration", "f1", "precision", "recall", "error_rate"};
  CHECK(scores.header() == expected);

  const auto m = read_manifest(manifest);
  CHECK(m.skill.per_fold.size() == 5);
  CHECK(m.skill.positive_class == std::optional<std::string>("pos"));

  std::set<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir.path())) files.insert(entry.path().filename().string());
  CHECK(files == std::set<std::string>{"in.csv", "l.csv", "l.json", "scores.csv"});
}

TEST_CASE("select-k on its own and against an established holdout") {
  testing::TempDir dir("cli");
  write_source(dir / "in.csv", 200);
  auto r = run({"select-k", "--in", p(dir / "in.csv"), "--strategy", "representative", "--candidates", "4,5"});
  CHECK(r.code == cli::kExitUsage);  // no seed

  r = run({"select-k", "--in", p(dir / "in.csv"), "--strategy", "representative", "--candidates", "4,5", "--seed",
           "9", "--report-json", p(dir / "k.json")});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(r.out.find("chosen k:") != std::string::npos);
  const auto report = nlohmann::json::parse(testing::read_text(dir / "k.json"));
  CHECK(report.at("strategy") == "representative");

  r = run({"select-k", "--in", p(dir / "in.csv"), "--strategy", "fixed10"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("chosen k: 10") != std::string::npos);
  CHECK(run({"select-k", "--in", p(dir / "in.csv"), "--strategy", "guess"}).code == cli::kExitUsage);

  const auto labeled = p(dir / "l.csv");
  const auto manifest = p(dir / "l.json");
  REQUIRE(run({"split", "--in", p(dir / "in.csv"), "--out", labeled, "--study", "k", "--seed", "5", "--k", "10",
               "--manifest", manifest})
              .code == cli::kExitOk);
  r = run({"select-k", "--in", labeled, "--manifest", manifest, "--strategy", "loocv"});
  REQUIRE(r.code == cli::kExitOk);
  const auto m = read_manifest(manifest);
  REQUIRE(m.k_selection.has_value());
  CHECK(m.k_selection->chosen_k == 180);  // 200 records minus the 20 already held out
}

TEST_CASE("split with the leave-one-out strategy") {
  testing::TempDir dir("cli");
  write_source(dir / "in.csv", 30);
  const auto r = run({"split", "--in", p(dir / "in.csv"), "--out", p(dir / "l.csv"), "--study", "loo", "--seed", "1",
                      "--strategy", "loocv"});
  REQUIRE(r.code == cli::kExitOk);
  const auto m = read_manifest(dir / "l.csv.manifest.json");
  CHECK(m.plan.mode == PartitionMode::Loocv);
  CHECK(m.plan.k == 27);
  CHECK(run({"verify", "--in", p(dir / "l.csv"), "--manifest", p(dir / "l.csv.manifest.json")}).code == cli::kExitOk);
}
