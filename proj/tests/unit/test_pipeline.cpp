#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "manifail/errors.hpp"
#include "manifail/pipeline.hpp"
#include "manifail/serialize.hpp"
#include "tmpdir.hpp"

using namespace manifail;

namespace {

RunConfig small(const fs::path& out) {
  RunConfig c;
  c.seed = 7;
  c.tasks = {"PickCube", "StackCube"};
  c.failures_per_task = 3;
  c.successes_per_task = 1;
  c.out = out;
  return c;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(MANIFAIL_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void append(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::app);
  f << s;
}

}  // namespace

TEST_CASE("sha256 of a known string") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("a small run writes the expected counts") {
  TempDir d;
  const auto s = cmd_generate(small(d.path));
  CHECK(s.trajectories == 8);
  CHECK(s.failures == 6);
  CHECK(s.successes == 2);
  CHECK(s.qa_items == 6 * 8 + 2 * 3);
  const auto m = verify_manifest(d.path);
  CHECK(m["counts"]["qa_items"] == 54);
  CHECK(read_corpus(d.path / kQaFile).size() == 54);

  const DatasetStats st = cmd_stats(d.path, d.path);
  int hist = 0;
  for (int c : st.duration_histogram) hist += c;
  CHECK(hist == st.trajectories);
  int qa = 0;
  for (const auto& [k, v] : st.qa_by_type) qa += v;
  CHECK(qa == 54);
  CHECK(fs::exists(d.path / "duration_histogram.svg"));
  CHECK(fs::exists(d.path / "stats.txt"));
}

TEST_CASE("generation is byte reproducible") {
  TempDir a, b;
  cmd_generate(small(a.path));
  RunConfig c = small(b.path);
  c.concurrency = 4;
  cmd_generate(c);
  CHECK(read_file(a.path / kManifestFile) == read_file(b.path / kManifestFile));
  CHECK(read_file(a.path / kQaFile) == read_file(b.path / kQaFile));
}

TEST_CASE("tampered datasets are refused") {
  TempDir d;
  cmd_generate(small(d.path));
  append(d.path / kQaFile, "\n");
  CHECK_THROWS_AS(verify_manifest(d.path), IntegrityError);
  CHECK_THROWS_AS(compute_stats(d.path), IntegrityError);
  CHECK_THROWS_AS(verify_corpus(d.path / kQaFile), IntegrityError);
  TempDir e;
  CHECK_THROWS_AS(verify_manifest(e.path), IntegrityError);
}

TEST_CASE("an empty dataset yields zero stats") {
  TempDir d;
  RunConfig c = small(d.path);
  c.failures_per_task = 0;
  c.successes_per_task = 0;
  cmd_generate(c);
  const auto st = compute_stats(d.path);
  CHECK(st.trajectories == 0);
  CHECK(st.qa_items == 0);
}

TEST_CASE("an inapplicable taxonomy filter is surfaced") {
  TempDir d;
  RunConfig c = small(d.path);
  c.tasks = {"PushCube"};
  c.taxonomy = FailureTaxonomy::GraspingError;
  CHECK_THROWS_AS(cmd_generate(c), NotApplicable);
}

TEST_CASE("configuration is validated") {
  RunConfig c;
  c.tasks = {"Nope"};
  CHECK_THROWS(validate(c));
  c = RunConfig{};
  c.frame_rate = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = RunConfig{};
  c.failures_per_task = -1;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("answer files") {
  TempDir d;
  cmd_generate(small(d.path));
  const auto items = read_corpus(d.path / kQaFile);
  const fs::path ans = d.path / "answers.jsonl";
  append(ans, "{\"id\": \"" + items[0].id + "\", \"answer\": \"A\"}\n");
  append(ans, "{\"id\": \"" + items[1].id + "\", \"answer\": 5}\n");
  append(ans, "{\"id\": \"unknown\", \"answer\": \"A\"}\n");
  const auto f = read_answers(ans, items);
  CHECK(f.answers.size() == 1);
  CHECK(f.diagnostics.size() == 2);
  append(ans, "garbage\n");
  CHECK_THROWS_AS(read_answers(ans, items), IntegrityError);
}

TEST_CASE("reference answers through cmd_evaluate") {
  TempDir d;
  cmd_generate(small(d.path));
  const auto items = read_corpus(d.path / kQaFile);
  MockJudge j;
  const auto rep = cmd_evaluate(d.path / kQaFile, reference_answers(items), &j, d.path / "eval", 2);
  CHECK(rep.overall == 100.0);
  CHECK(fs::exists(d.path / "eval" / "report.json"));
  const auto first = read_file(d.path / "eval" / "report.json");
  cmd_evaluate(d.path / kQaFile, reference_answers(items), &j, d.path / "eval", 1);
  CHECK(read_file(d.path / "eval" / "report.json") == first);
}

TEST_CASE("loop table shape") {
  TempDir d;
  LoopConfig c;
  c.tasks = {"PushCube"};
  c.episodes = 1;
  c.critics = {{"null", ""}};
  c.out = d.path;
  const auto t = cmd_loop(c);
  CHECK(t["rows"].size() == 2);
  CHECK(fs::exists(d.path / "loop.json"));
  c.critics = {{"remote", ""}};
  CHECK_THROWS_AS(cmd_loop(c), ConfigError);
}

TEST_CASE("render writes one svg") {
  TempDir d;
  cmd_generate(small(d.path));
  fs::path any;
  for (const auto& e : fs::directory_iterator(d.path / kTrajectoryDir)) any = e.path();
  const fs::path svg = cmd_render(any, d.path / "plots");
  CHECK(fs::exists(svg));
  CHECK(read_file(svg).rfind("<svg", 0) == 0);
}

TEST_CASE("cli exit codes") {
  TempDir d;
  const std::string out = (d.path / "ds").string();
  CHECK(cli("generate --seed 1 --tasks PickCube --failures-per-task 1 --successes-per-task 1 --out " +
            out) == 0);
  CHECK(cli("stats " + out) == 0);
  CHECK(cli("evaluate " + out + "/qa.jsonl --mock-judge --out " + (d.path / "ev").string()) == 0);
  CHECK(cli("evaluate " + out + "/qa.jsonl --out " + (d.path / "ev").string()) == 1);
  CHECK(cli("generate --tasks PickCube") == 1);
  CHECK(cli("generate --seed 1 --tasks Nope --out " + out) == 1);
  CHECK(cli("frobnicate") == 1);
  CHECK(cli("--help") == 0);
  append(d.path / "ds" / "qa.jsonl", "\n");
  CHECK(cli("stats " + out) == 2);
  CHECK(cli("evaluate " + out + "/qa.jsonl --mock-judge --out " + (d.path / "ev").string()) == 2);
}

TEST_CASE("shipped task catalog document matches the compiled catalog") {
  const auto doc = nlohmann::json::parse(read_file(fs::path(MANIFAIL_SOURCE_DIR) / "data" / "task_catalog.json"));
  REQUIRE(doc["tasks"].size() == task_catalog().size());
  for (const auto& t : doc["tasks"]) {
    const std::string id = t["id"];
    CAPTURE(id);
    const auto& e = catalog_entry(id);
    CHECK(t["category"] == std::string(to_string(e.category)));
    CHECK(t["instruction"] == std::string(e.instruction));
    CHECK(t["hardware_only"] == e.real_world_analog);
    std::vector<std::string> names;
    for (const auto& s : build_task(id, 0).substages) names.push_back(s.name);
    CHECK(t["substages"].get<std::vector<std::string>>() == names);
  }
}
