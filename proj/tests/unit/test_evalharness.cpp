#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "manifail/errors.hpp"
#include "manifail/evalharness.hpp"
#include "manifail/prompts.hpp"
#include "manifail/qasynth.hpp"

using namespace manifail;

namespace {

// Every item of one synthesized corpus, failures only.
std::vector<QAItem> corpus(int per_task) {
  std::vector<QAItem> out;
  for (const auto& id : task_ids()) {
    for (int s = 0; s < per_task; ++s) {
      const auto f = fixtures::failed(id, s);
      for (auto& it : synthesize_qa(f.trajectory, f.record, s)) out.push_back(std::move(it));
    }
  }
  return out;
}

ItemResult result(const std::string& cat, QuestionType q, double score,
                  const std::string& variant = "sim") {
  ItemResult r;
  r.item_id = cat + std::to_string(score) + std::string(to_string(q));
  r.category = cat;
  r.variant = variant;
  r.question_type = q;
  r.scored = true;
  r.score = score;
  return r;
}

}  // namespace

TEST_CASE("judge normalization is mean times twenty") {
  CHECK(make_judge_score(5, 5, 5).normalized == 100.0);
  CHECK(make_judge_score(0, 0, 0).normalized == 0.0);
  CHECK(make_judge_score(3, 4, 5).normalized == 80.0);
  for (int a = 0; a <= 5; ++a)
    for (int b = 0; b <= 5; ++b)
      for (int c = 0; c <= 5; ++c)
        CHECK(make_judge_score(a, b, c).normalized == (a + b + c) / 3.0 * 20.0);
}

TEST_CASE("judge replies are parsed, clamped and rejected") {
  const auto ok = parse_judge_reply(nlohmann::json::parse(
      R"({"criteria":{"correctness":{"score":3,"explanation":"x"},"relevance":{"score":4,"explanation":"y"},"completeness":{"score":5,"explanation":"z"}}})"));
  REQUIRE(ok);
  CHECK(ok->normalized == 80.0);
  CHECK_FALSE(ok->clamped);
  const auto clamp = parse_judge_reply(nlohmann::json::parse(
      R"({"criteria":{"correctness":{"score":9},"relevance":{"score":-2},"completeness":{"score":"5"}}})"));
  REQUIRE(clamp);
  CHECK(clamp->clamped);
  CHECK(clamp->correctness == 5);
  CHECK(clamp->relevance == 0);
  const auto wrapped = parse_judge_reply(nlohmann::json{
      {"content",
       "Sure:\n```json\n{\"criteria\":{\"correctness\":{\"score\":1},\"relevance\":{\"score\":1},"
       "\"completeness\":{\"score\":1},}}\n```"}});
  REQUIRE(wrapped);
  CHECK(wrapped->normalized == 20.0);
  CHECK_FALSE(parse_judge_reply(nlohmann::json{{"nothing", 1}}));
}

TEST_CASE("judge prompt substitution") {
  const std::string p = fill_judge_prompt("Q?", "ref {pred}", "pred");
  CHECK(p.find("Q?") != std::string::npos);
  CHECK(p.find("ref {pred}") != std::string::npos);  // single pass
  CHECK(p.find("{question}") == std::string::npos);
  CHECK(p.find("You are an expert evaluator.") != std::string::npos);
}

TEST_CASE("mock judge") {
  MockJudge j;
  CHECK(j.score("q", "Move left.", "move LEFT")->normalized == 100.0);
  CHECK(j.score("q", "alpha beta", "gamma delta")->normalized == 0.0);
  const auto mid = j.score("q", "move the arm left now", "move the arm right");
  CHECK(mid->normalized > 0.0);
  CHECK(mid->normalized < 100.0);
}

TEST_CASE("option sets") {
  const auto d = build_mc_options(QuestionType::FailureDetection, "No", {}, 1);
  CHECK(std::set<std::string>(d.options.begin(), d.options.end()) ==
        std::set<std::string>{"Yes", "No"});
  CHECK(d.options[d.correct_index] == "No");
  const auto i = build_mc_options(QuestionType::FailureIdentification, "Grasping error.", {}, 2);
  CHECK(i.options.size() == 6);
  CHECK(std::count(i.options.begin(), i.options.end(), "Wrong target object.") == 1);
  CHECK(i.options[i.correct_index] == "Grasping error.");
  const auto l = build_mc_options(QuestionType::FailureLocating, "grasp", substage_pool(), 3);
  CHECK(l.options.size() == 5);
  CHECK(std::count(l.options.begin(), l.options.end(), "grasp") == 1);
  CHECK(l.options[l.correct_index] == "grasp");
  CHECK(build_mc_options(QuestionType::FailureLocating, "grasp", substage_pool(), 3) == l);
  CHECK_THROWS_AS(build_mc_options(QuestionType::FailureLocating, "a", {"a", "b", "c", "d"}, 1),
                  ConfigError);
  for (std::uint64_t s = 0; s < 500; ++s) {
    CHECK_NOTHROW(validate_options(QuestionType::FailureLocating,
                                   build_mc_options(QuestionType::FailureLocating, "lift",
                                                    substage_pool(), s)));
  }
  MCOptionSet dup{{"a", "a", "b", "c", "d"}, 0};
  CHECK_THROWS_AS(validate_options(QuestionType::FailureLocating, dup), InvalidArgument);
}

TEST_CASE("multiple-choice matching") {
  const MCOptionSet set{{"reach-above", "grasp", "lift", "descend", "move-to-target"}, 4};
  CHECK(score_mc("move-to-target", set).score == 1);
  CHECK(score_mc("Move-to-target.", set).score == 1);
  CHECK(score_mc("E", set).score == 1);
  CHECK(score_mc("(E)", set).score == 1);
  CHECK(score_mc("E. move-to-target", set).score == 1);
  CHECK(score_mc("B", set).score == 0);
  CHECK_FALSE(score_mc("B", set).unmatched);
  const auto g = score_mc("purple monkey dishwasher", set);
  CHECK(g.score == 0);
  CHECK(g.unmatched);
}

TEST_CASE("reference answers score full marks") {
  const auto items = corpus(2);
  std::map<std::string, std::string> ans;
  for (const auto& it : items) ans[it.id] = it.reference_answer;
  MockJudge judge;
  const auto rep = evaluate(items, ans, &judge, 4);
  CHECK(rep.unscored == 0);
  for (const auto& [k, v] : rep.question_type_means) CHECK(v == 100.0);
  CHECK(rep.overall == 100.0);
}

TEST_CASE("uniform random choices land on the analytic rates") {
  const auto items = corpus(45);
  std::mt19937_64 g(99);
  std::map<std::string, std::string> ans;
  std::vector<QAItem> mc;
  for (const auto& it : items) {
    if (!it.mc) continue;
    mc.push_back(it);
    std::uniform_int_distribution<int> pick(0, int(it.mc->options.size()) - 1);
    ans[it.id] = option_label(pick(g));
  }
  REQUIRE(mc.size() >= 2000);
  const auto rep = evaluate(mc, ans, nullptr);
  CHECK(std::abs(rep.question_type_means.at("failure_detection") - 50.0) <= 3.0);
  CHECK(std::abs(rep.question_type_means.at("failure_identification") - 100.0 / 6) <= 3.0);
  CHECK(std::abs(rep.question_type_means.at("failure_locating") - 20.0) <= 3.0);
}

TEST_CASE("free-form items need a judge") {
  const auto items = corpus(1);
  CHECK_THROWS_AS(evaluate(items, {}, nullptr), ConfigError);
}

TEST_CASE("missing answers score zero and are flagged") {
  auto items = corpus(1);
  items.resize(3);
  MockJudge j;
  const auto rep = evaluate(items, {}, &j);
  CHECK(rep.unmatched == 3);
  CHECK(rep.overall == 0.0);
}

TEST_CASE("aggregation weights categories equally and is order independent") {
  std::vector<ItemResult> rs{
      result("short-horizon", QuestionType::FailureDetection, 100),
      result("short-horizon", QuestionType::FailureDetection, 100),
      result("short-horizon", QuestionType::FailureDetection, 100),
      result("dynamic", QuestionType::FailureDetection, 0),
      result("medium-horizon", QuestionType::FailureDetection, 50, "real-analog"),
  };
  const auto rep = aggregate(rs);
  CHECK(rep.category_means.at("short-horizon") == 100.0);
  CHECK(rep.category_means.at("dynamic") == 0.0);
  CHECK(rep.category_means.at("real") == 50.0);
  CHECK(rep.category_means.count("medium-horizon") == 0);
  CHECK(rep.overall == doctest::Approx(50.0));
  std::reverse(rs.begin(), rs.end());
  CHECK(to_json(aggregate(rs))["overall"] == to_json(rep)["overall"]);
  std::vector<ItemResult> none{result("dynamic", QuestionType::FailureDetection, 0)};
  none[0].scored = false;
  CHECK_THROWS_AS(aggregate(none), EmptyReport);
  CHECK_THROWS_AS(aggregate({}), EmptyReport);
}

TEST_CASE("mock-judge evaluation is byte reproducible") {
  const auto items = corpus(1);
  std::map<std::string, std::string> ans;
  for (const auto& it : items) ans[it.id] = it.mc ? "A" : "Move the end-effector left.";
  MockJudge j;
  CHECK(to_json(evaluate(items, ans, &j, 1)).dump() == to_json(evaluate(items, ans, &j, 8)).dump());
}
