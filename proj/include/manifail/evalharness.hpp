#pragma once

// Scoring of candidate answers: multiple-choice accuracy plus judge scores
// for free-form answers, aggregated by task category and question type.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "manifail/qa_types.hpp"
#include "manifail/remote.hpp"

namespace manifail {

inline constexpr std::array<std::string_view, 2> kDetectionOptions{"Yes", "No"};
inline constexpr double kJudgeTemperature = 0.2;
inline constexpr double kJudgeTopP = 1.0;

// Option label for index i: "A", "B", ...
std::string option_label(int i);

MCOptionSet build_mc_options(QuestionType q, const std::string& correct,
                             const std::vector<std::string>& substage_pool, std::uint64_t seed);

// Checks the size and uniqueness invariants; throws InvalidArgument.
void validate_options(QuestionType q, const MCOptionSet& set);

struct MCScore {
  int score{0};
  int chosen{-1};
  bool unmatched{true};
};

// Letter label ("C", "C.", "(C)", "C) text") or case/punctuation-insensitive
// full option text.
MCScore score_mc(const std::string& answer, const MCOptionSet& options);

struct JudgeScore {
  int correctness{0};
  int relevance{0};
  int completeness{0};
  std::string correctness_explanation;
  std::string relevance_explanation;
  std::string completeness_explanation;
  bool clamped{false};
  double normalized{0.0};
};

// Fills `normalized` = mean of the three scores x 20.
JudgeScore make_judge_score(int correctness, int relevance, int completeness);

std::string fill_judge_prompt(const std::string& question, const std::string& reference,
                              const std::string& prediction);

// Reads {"criteria": {...}} (possibly wrapped in a completion reply),
// clamping integers outside 0..5. nullopt when unusable.
std::optional<JudgeScore> parse_judge_reply(const nlohmann::json& reply);

class Judge {
 public:
  virtual ~Judge() = default;
  virtual std::optional<JudgeScore> score(const std::string& question,
                                          const std::string& reference,
                                          const std::string& prediction) = 0;
};

// 5/5/5 when prediction and reference are equal after normalization, else
// token-overlap bands: correctness from Jaccard, completeness from recall,
// relevance from precision; >=0.8 -> 4, >=0.6 -> 3, >=0.4 -> 2, >=0.2 -> 1.
class MockJudge : public Judge {
 public:
  std::optional<JudgeScore> score(const std::string& question, const std::string& reference,
                                  const std::string& prediction) override;
};

class RemoteJudge : public Judge {
 public:
  explicit RemoteJudge(Endpoint ep) : ep_(std::move(ep)) {}
  std::optional<JudgeScore> score(const std::string& question, const std::string& reference,
                                  const std::string& prediction) override;

 private:
  Endpoint ep_;
};

std::optional<JudgeScore> judge_score(const std::string& question, const std::string& reference,
                                      const std::string& prediction, Judge& judge);

struct ItemResult {
  std::string item_id;
  std::string task_id;
  std::string category;
  std::string variant;
  QuestionType question_type{QuestionType::TaskIdentification};
  std::string answer;
  bool scored{false};
  double score{0.0};  // 0-100: MC is 0 or 100, free-form is the normalized judge score
  bool unmatched{false};
  std::optional<JudgeScore> judge;
};

// Report columns. Items of "real-analog" variant count toward "real" only.
inline constexpr std::array<std::string_view, 5> kReportColumns{
    "short-horizon", "medium-horizon", "long-horizon", "dynamic", "real"};

std::string report_column(const ItemResult& r);

struct EvaluationReport {
  std::vector<ItemResult> items;
  std::map<std::string, double> category_means;       // non-empty columns only
  std::map<std::string, double> question_type_means;  // MC types are accuracy in %
  std::map<std::string, double> group_means;
  std::map<std::string, std::map<std::string, double>> type_by_category;
  double overall{0.0};  // unweighted mean of category means
  int scored{0};
  int unscored{0};
  int unmatched{0};
  int clamped{0};
};

EvaluationReport aggregate(const std::vector<ItemResult>& items);

nlohmann::json to_json(const EvaluationReport& r);

// Scores every item against answers keyed by item id. Free-form items need a
// judge; throws ConfigError up front when one is required but missing.
// Items with no answer are scored 0 (unmatched).
EvaluationReport evaluate(const std::vector<QAItem>& items,
                          const std::map<std::string, std::string>& answers, Judge* judge,
                          int concurrency = 1);

}  // namespace manifail
