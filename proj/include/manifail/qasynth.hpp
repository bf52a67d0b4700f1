#pragma once

// Question/answer generation from trajectories and their failure records.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "manifail/injector.hpp"
#include "manifail/qa_types.hpp"
#include "manifail/remote.hpp"
#include "manifail/simulator.hpp"

namespace manifail {

struct OpenEndedAnswers {
  std::string reason;
  std::string high_level_correction;
  std::string low_level_correction;
  AnswerProvenance provenance{AnswerProvenance::RuleFallback};
};

class Annotator {
 public:
  virtual ~Annotator() = default;
  // nullopt when this annotator could not produce an answer.
  virtual std::optional<OpenEndedAnswers> annotate(const Trajectory& trajectory,
                                                   const FailureRecord& record) = 0;
};

// Deterministic templates built from the record.
class RuleAnnotator : public Annotator {
 public:
  std::optional<OpenEndedAnswers> annotate(const Trajectory& trajectory,
                                           const FailureRecord& record) override;
};

// Sends the annotation prompt plus a trajectory summary to an HTTP endpoint.
class RemoteAnnotator : public Annotator {
 public:
  explicit RemoteAnnotator(Endpoint ep) : ep_(std::move(ep)) {}
  std::optional<OpenEndedAnswers> annotate(const Trajectory& trajectory,
                                           const FailureRecord& record) override;

 private:
  Endpoint ep_;
};

std::string render_question(QuestionType q, std::uint64_t seed);

std::string oracle_answer(QuestionType q, const Trajectory& trajectory,
                          const std::optional<FailureRecord>& record);

// Annotation prompt with every placeholder filled from the record.
std::string fill_annotation_prompt(const TaskPlan& plan, const FailureRecord& record);

// Frames subsampled every `stride_s` seconds, for text-only consumers.
nlohmann::json trajectory_summary(const Trajectory& trajectory, double stride_s = 1.0);

// Tries `annotator` (if any) and falls back to the rule templates.
OpenEndedAnswers annotate_open_ended(const Trajectory& trajectory, const FailureRecord& record,
                                     Annotator* annotator);

// Fallback text pieces, also used by the oracle critic.
std::string fallback_high_level(const TaskPlan& plan, const FailureRecord& record);
std::string fallback_low_level(const TaskPlan& plan, const FailureRecord& record);

// Eight items for a failure trajectory, three for a success.
std::vector<QAItem> synthesize_qa(const Trajectory& trajectory,
                                  const std::optional<FailureRecord>& record, std::uint64_t seed,
                                  Annotator* annotator = nullptr);

// Substage names of the whole catalog (locating distractor pool), cached.
const std::vector<std::string>& substage_pool();

nlohmann::json to_json(const QAItem& item);
QAItem qa_item_from_json(const nlohmann::json& j);

}  // namespace manifail
