#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace manifail {

enum class QuestionType {
  TaskIdentification,
  TaskPlanning,
  FailureDetection,
  FailureIdentification,
  FailureLocating,
  FailureExplanation,
  HighLevelCorrection,
  LowLevelCorrection,
};

inline constexpr std::array<QuestionType, 8> kAllQuestionTypes{
    QuestionType::TaskIdentification,    QuestionType::TaskPlanning,
    QuestionType::FailureDetection,      QuestionType::FailureIdentification,
    QuestionType::FailureLocating,       QuestionType::FailureExplanation,
    QuestionType::HighLevelCorrection,   QuestionType::LowLevelCorrection,
};

enum class CapabilityGroup { TaskUnderstanding, FailureAnalysis, FailureCorrection };

enum class AnswerProvenance { Oracle, LlmAnnotated, RuleFallback };

std::string_view to_string(QuestionType q);
QuestionType question_type_from_string(std::string_view s);
std::string_view to_string(CapabilityGroup g);
std::string_view to_string(AnswerProvenance p);
AnswerProvenance provenance_from_string(std::string_view s);

// Identification, planning -> understanding; detection, identification,
// locating, explanation -> analysis; corrections -> correction.
CapabilityGroup group_of(QuestionType q);

bool is_multiple_choice(QuestionType q);

struct MCOptionSet {
  std::vector<std::string> options;
  int correct_index{0};

  bool operator==(const MCOptionSet&) const = default;
};

struct QAItem {
  std::string id;
  std::string trajectory_id;
  std::string task_id;
  std::string category;  // task category name
  std::string variant;   // scene variant tag ("real-analog" feeds the real column)
  QuestionType question_type{QuestionType::TaskIdentification};
  std::string question_text;
  std::string reference_answer;
  AnswerProvenance provenance{AnswerProvenance::Oracle};
  std::optional<MCOptionSet> mc;

  bool operator==(const QAItem&) const = default;
};

}  // namespace manifail
