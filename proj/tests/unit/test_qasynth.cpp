#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "manifail/errors.hpp"
#include "manifail/prompts.hpp"
#include "manifail/qasynth.hpp"

using namespace manifail;

namespace {

std::string strip_quoted(const std::string& s) {
  std::string out;
  bool in = false;
  for (char c : s) {
    if (c == '\'') {
      in = !in;
      continue;
    }
    if (!in) out += c;
  }
  return out;
}

bool has_digit(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

class FixedAnnotator : public Annotator {
 public:
  std::optional<OpenEndedAnswers> annotate(const Trajectory&, const FailureRecord&) override {
    return OpenEndedAnswers{"because", "do it again", "move left", AnswerProvenance::LlmAnnotated};
  }
};

class BrokenAnnotator : public Annotator {
 public:
  std::optional<OpenEndedAnswers> annotate(const Trajectory&, const FailureRecord&) override {
    return std::nullopt;
  }
};

}  // namespace

TEST_CASE("forty distinct question templates") {
  std::set<std::string_view> all;
  for (const auto& row : question_templates()) {
    for (auto t : row) {
      CHECK_FALSE(t.empty());
      all.insert(t);
    }
  }
  CHECK(all.size() == 40);
  const auto& detect = question_templates()[static_cast<int>(QuestionType::FailureDetection)];
  CHECK(std::find(detect.begin(), detect.end(),
                  "This is a video of a robotic arm performing a task, was the task successfully "
                  "completed?") != detect.end());
}

TEST_CASE("question rendering is deterministic and uniform over the five phrasings") {
  for (auto q : kAllQuestionTypes) {
    CAPTURE(to_string(q));
    const auto& row = question_templates()[static_cast<int>(q)];
    std::map<std::string, int> counts;
    const int n = 5000;
    for (int s = 0; s < n; ++s) {
      const std::string text = render_question(q, s);
      CHECK(text == render_question(q, s));
      CHECK(std::find(row.begin(), row.end(), text) != row.end());
      counts[text]++;
    }
    CHECK(counts.size() == 5);
    for (const auto& [t, c] : counts) CHECK(std::abs(c / double(n) - 0.2) <= 0.03);
  }
}

TEST_CASE("oracle answers come straight from the ground truth") {
  const auto f = fixtures::failed("PickCube", 0, fixtures::push_forward(0.05));
  CHECK(oracle_answer(QuestionType::FailureIdentification, f.trajectory, f.record) ==
        "Position deviation.");
  CHECK(oracle_answer(QuestionType::FailureLocating, f.trajectory, f.record) == "grasp");
  CHECK(oracle_answer(QuestionType::FailureDetection, f.trajectory, f.record) == "No");
  CHECK(oracle_answer(QuestionType::TaskIdentification, f.trajectory, f.record) ==
        "Pick the cube to the target position.");
  CHECK(oracle_answer(QuestionType::TaskPlanning, f.trajectory, f.record) ==
        "reach-above, descend, grasp, lift, move-to-target");
  CHECK_THROWS_AS(oracle_answer(QuestionType::FailureExplanation, f.trajectory, f.record),
                  WrongOperation);
  const Trajectory ok = run_episode(build_task("PickCube", 0));
  CHECK(oracle_answer(QuestionType::FailureDetection, ok, std::nullopt) == "Yes");
  CHECK_THROWS_AS(oracle_answer(QuestionType::FailureDetection, ok, f.record), InvalidArgument);
}

TEST_CASE("fallback corrections use direction words") {
  const auto f = fixtures::failed("PickCube", 0, fixtures::push_forward(0.05));
  CHECK(fallback_low_level(f.trajectory.plan, f.record) ==
        "Move the end-effector backward, then descend to the target.");
  const auto omit = fixtures::failed("PickCube", 0,
                                     FailureSpec{FailureTaxonomy::StepOmission, 3, OmittedSubstage{}});
  const std::string high = fallback_high_level(omit.trajectory.plan, omit.record);
  const auto g = high.find("'grasp'");
  REQUIRE(g != std::string::npos);
  CHECK(g < high.find("'lift'"));
}

TEST_CASE("annotator output passes through and failures fall back") {
  const auto f = fixtures::failed("StackCube", 1);
  FixedAnnotator fixed;
  const auto a = annotate_open_ended(f.trajectory, f.record, &fixed);
  CHECK(a.reason == "because");
  CHECK(a.high_level_correction == "do it again");
  CHECK(a.low_level_correction == "move left");
  CHECK(a.provenance == AnswerProvenance::LlmAnnotated);
  BrokenAnnotator broken;
  const auto b = annotate_open_ended(f.trajectory, f.record, &broken);
  CHECK(b.provenance == AnswerProvenance::RuleFallback);
  CHECK(b.reason == describe_failure(f.record));
}

TEST_CASE("annotation prompt has every placeholder filled") {
  const auto f = fixtures::failed("PickCube", 0, fixtures::push_forward(0.05));
  const std::string p = fill_annotation_prompt(f.trajectory.plan, f.record);
  CHECK(p.find('{' + std::string("task}")) == std::string::npos);
  CHECK(p.find("{error") == std::string::npos);
  CHECK(p.find("{subtask}") == std::string::npos);
  CHECK(p.find("Pick the cube to the target position.") != std::string::npos);
  CHECK(p.find("[0.050, 0.000, 0.000]") != std::string::npos);
}

TEST_CASE("eight items per failure and three per success") {
  const auto f = fixtures::failed("StackCube", 2);
  const auto items = synthesize_qa(f.trajectory, f.record, 7);
  REQUIRE(items.size() == 8);
  std::set<QuestionType> types;
  for (const auto& it : items) types.insert(it.question_type);
  CHECK(types.size() == 8);

  const Trajectory ok = run_episode(build_task("StackCube", 2));
  const auto s = synthesize_qa(ok, std::nullopt, 7);
  REQUIRE(s.size() == 3);
  std::set<QuestionType> st;
  for (const auto& it : s) st.insert(it.question_type);
  CHECK(st == std::set<QuestionType>{QuestionType::TaskIdentification, QuestionType::TaskPlanning,
                                     QuestionType::FailureDetection});
}

TEST_CASE("embedded correct options match the injected truth") {
  for (const auto& id : task_ids()) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto f = fixtures::failed(id, seed);
      for (const auto& it : synthesize_qa(f.trajectory, f.record, seed)) {
        CAPTURE(it.id);
        CHECK(is_multiple_choice(it.question_type) == it.mc.has_value());
        if (!it.mc) continue;
        const std::string& correct = it.mc->options.at(it.mc->correct_index);
        CHECK(correct == it.reference_answer);
        switch (it.question_type) {
          case QuestionType::FailureDetection: CHECK(correct == "No"); break;
          case QuestionType::FailureIdentification:
            CHECK(correct == option_string(f.record.taxonomy));
            break;
          case QuestionType::FailureLocating: CHECK(correct == f.record.substage_name); break;
          default: break;
        }
      }
    }
  }
}

TEST_CASE("synthesis is deterministic and round trips through json") {
  const auto f = fixtures::failed("MicrowaveTask", 3);
  const auto a = synthesize_qa(f.trajectory, f.record, 11);
  const auto b = synthesize_qa(f.trajectory, f.record, 11);
  CHECK(a == b);
  for (const auto& it : a) CHECK(qa_item_from_json(to_json(it)) == it);
  nlohmann::json bad = to_json(a.front());
  bad.erase("question_type");
  CHECK_THROWS_AS(qa_item_from_json(bad), IntegrityError);
}

TEST_CASE("fallback answers carry no numbers") {
  for (const auto& id : task_ids()) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto f = fixtures::failed(id, seed);
      for (const auto& it : synthesize_qa(f.trajectory, f.record, seed)) {
        if (it.provenance != AnswerProvenance::RuleFallback) continue;
        CAPTURE(it.reference_answer);
        CHECK_FALSE(has_digit(strip_quoted(it.reference_answer)));
      }
    }
  }
}

TEST_CASE("trajectory summary is sparse") {
  const Trajectory t = run_episode(build_task("PickCube", 0));
  const auto s = trajectory_summary(t, 1.0);
  CHECK(s["task"] == "PickCube");
  CHECK(s["frames"].size() <= std::size_t(t.duration) + 2);
  CHECK(s["frames"].size() >= 2);
}
