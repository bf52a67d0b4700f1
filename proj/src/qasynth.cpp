#include "manifail/qasynth.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "manifail/errors.hpp"
#include "manifail/evalharness.hpp"
#include "manifail/grammar.hpp"
#include "manifail/prompts.hpp"
#include "manifail/random.hpp"
#include "manifail/serialize.hpp"

namespace manifail {

namespace {

constexpr std::array<std::string_view, 8> kTypeNames{
    "task_identification",    "task_planning",         "failure_detection",
    "failure_identification", "failure_locating",      "failure_explanation",
    "high_level_correction",  "low_level_correction",
};
constexpr std::array<std::string_view, 3> kGroupNames{"task_understanding", "failure_analysis",
                                                      "failure_correction"};
constexpr std::array<std::string_view, 3> kProvenanceNames{"oracle", "llm_annotated",
                                                           "rule_fallback"};

constexpr std::array<QuestionType, 3> kSuccessTypes{
    QuestionType::TaskIdentification, QuestionType::TaskPlanning, QuestionType::FailureDetection};

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string quoted(const std::string& s) { return "'" + s + "'"; }

std::string expert_names(const TaskPlan& plan, const char* sep) {
  std::string out;
  for (const auto& s : plan.substages) {
    if (!out.empty()) out += sep;
    out += s.name;
  }
  return out;
}

const SubstageTarget& expert_substage(const TaskPlan& plan, int k) {
  if (k < 1 || k > static_cast<int>(plan.substages.size())) {
    throw InvalidArgument("failure record substage out of range");
  }
  return plan.substages[static_cast<std::size_t>(k - 1)];
}

// ", then continue with 'a', 'b'." or "." when nothing is left.
std::string remaining_tail(const TaskPlan& plan, int k) {
  std::string rest;
  for (std::size_t i = static_cast<std::size_t>(k); i < plan.substages.size(); ++i) {
    if (!rest.empty()) rest += ", ";
    rest += quoted(plan.substages[i].name);
  }
  return rest.empty() ? "." : ", then continue with " + rest + ".";
}

std::string approach_tail(const SubstageTarget& s) {
  const bool descend = s.kind == SubstageKind::Grasp || s.name.rfind("descend", 0) == 0;
  return descend ? ", then descend to the target." : ", then continue to the target.";
}

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", round9(v));
  std::string s(buf);
  return s == "-0.000" ? "0.000" : s;
}

}  // namespace

std::string_view to_string(QuestionType q) { return kTypeNames[static_cast<std::size_t>(q)]; }

QuestionType question_type_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
    if (kTypeNames[i] == s) return static_cast<QuestionType>(i);
  }
  throw InvalidArgument("unknown question type: " + std::string(s));
}

std::string_view to_string(CapabilityGroup g) { return kGroupNames[static_cast<std::size_t>(g)]; }

std::string_view to_string(AnswerProvenance p) {
  return kProvenanceNames[static_cast<std::size_t>(p)];
}

AnswerProvenance provenance_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kProvenanceNames.size(); ++i) {
    if (kProvenanceNames[i] == s) return static_cast<AnswerProvenance>(i);
  }
  throw InvalidArgument("unknown answer provenance: " + std::string(s));
}

CapabilityGroup group_of(QuestionType q) {
  switch (q) {
    case QuestionType::TaskIdentification:
    case QuestionType::TaskPlanning:
      return CapabilityGroup::TaskUnderstanding;
    case QuestionType::HighLevelCorrection:
    case QuestionType::LowLevelCorrection:
      return CapabilityGroup::FailureCorrection;
    default:
      return CapabilityGroup::FailureAnalysis;
  }
}

bool is_multiple_choice(QuestionType q) {
  return q == QuestionType::FailureDetection || q == QuestionType::FailureIdentification ||
         q == QuestionType::FailureLocating;
}

std::string render_question(QuestionType q, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {hash_string("question"), static_cast<std::uint64_t>(q)}));
  const auto& row = question_templates()[static_cast<std::size_t>(q)];
  return std::string(row[rng.index(row.size())]);
}

std::string oracle_answer(QuestionType q, const Trajectory& trajectory,
                          const std::optional<FailureRecord>& record) {
  const bool failed = trajectory.outcome == Outcome::Failure;
  if (failed != record.has_value()) {
    throw InvalidArgument("failure record must be present exactly for failed trajectories");
  }
  switch (q) {
    case QuestionType::TaskIdentification:
      return trajectory.plan.instruction;
    case QuestionType::TaskPlanning:
      return expert_names(trajectory.plan, ", ");
    case QuestionType::FailureDetection:
      return failed ? "No" : "Yes";
    case QuestionType::FailureIdentification:
    case QuestionType::FailureLocating:
      if (!record) throw InvalidArgument("question needs a failure record");
      return q == QuestionType::FailureLocating ? record->substage_name
                                                : std::string(option_string(record->taxonomy));
    default:
      throw WrongOperation("open-ended question types are answered by an annotator");
  }
}

std::string fill_annotation_prompt(const TaskPlan& plan, const FailureRecord& record) {
  std::string type(option_string(record.taxonomy));
  if (!type.empty() && type.back() == '.') type.pop_back();
  std::string low = "N/A";
  if (const auto* d = std::get_if<PositionDelta>(&record.payload)) {
    low = "[" + fmt3(d->dp.x) + ", " + fmt3(d->dp.y) + ", " + fmt3(d->dp.z) + "]";
  }
  std::string out(annotation_prompt());
  replace_all(out, "{task}", plan.instruction);
  replace_all(out, "{subtask}", expert_names(plan, ", "));
  replace_all(out, "{error type}", type);
  replace_all(out, "{error stage}", record.substage_name);
  replace_all(out, "{error detail}", record.description);
  replace_all(out, "{error correction}", record.correction_hint);
  replace_all(out, "{error low level}", low);
  return out;
}

nlohmann::json trajectory_summary(const Trajectory& trajectory, double stride_s) {
  if (!(stride_s > 0.0)) throw InvalidArgument("summary stride must be positive");
  nlohmann::json frames = nlohmann::json::array();
  double next = 0.0;
  for (std::size_t i = 0; i < trajectory.frames.size(); ++i) {
    const Frame& f = trajectory.frames[i];
    const bool last = i + 1 == trajectory.frames.size();
    if (f.time + 1e-9 < next && !last) continue;
    next = f.time + stride_s;
    nlohmann::json objects = nlohmann::json::object();
    for (const auto& [id, p] : f.object_poses) {
      objects[id] = {round9(p.position.x), round9(p.position.y), round9(p.position.z)};
    }
    std::string active;
    for (const auto& s : trajectory.executed) {
      if (s.index == f.active_substage) active = s.name;
    }
    frames.push_back({{"t", round9(f.time)},
                      {"ee", {round9(f.ee_pose.position.x), round9(f.ee_pose.position.y),
                              round9(f.ee_pose.position.z)}},
                      {"gripper", round9(f.gripper)},
                      {"substage", active},
                      {"objects", objects}});
  }
  return {{"task", trajectory.plan.task_id},
          {"instruction", trajectory.plan.instruction},
          {"outcome", trajectory.outcome == Outcome::Success ? "success" : "failure"},
          {"duration", round9(trajectory.duration)},
          {"frames", frames}};
}

std::string fallback_high_level(const TaskPlan& plan, const FailureRecord& record) {
  const std::string name = quoted(expert_substage(plan, record.substage).name);
  const std::string tail = remaining_tail(plan, record.substage);
  switch (record.taxonomy) {
    case FailureTaxonomy::StepOmission:
      return "Go back and perform the skipped " + name + " substage" + tail;
    case FailureTaxonomy::WrongObject: {
      const auto& w = std::get<WrongObjectPair>(record.payload);
      return "Leave " + quoted(w.replacement) + " alone and redo the " + name +
             " substage with " + quoted(w.original) + tail;
    }
    case FailureTaxonomy::PositionDeviation:
      return "Realign the end-effector with the target and redo the " + name + " substage" + tail;
    case FailureTaxonomy::OrientationDeviation:
      return "Adjust the gripper orientation to match the target and redo the " + name +
             " substage" + tail;
    case FailureTaxonomy::GraspingError:
      return "Reopen the gripper and " + std::string(kRedoGraspPhrase) + " in the " + name +
             " substage" + tail;
    case FailureTaxonomy::TimingError: {
      const auto& ts = std::get<TimingShift>(record.payload);
      return capitalized(std::string(ts.dt < 0 ? kWaitPhrase : kNoDelayPhrase)) + " and redo the " +
             name + " substage" + tail;
    }
  }
  return {};
}

std::string fallback_low_level(const TaskPlan& plan, const FailureRecord& record) {
  const SubstageTarget& s = expert_substage(plan, record.substage);
  const std::string tail = approach_tail(s);
  auto moves_or = [&](const Position& dev, const std::string& otherwise) {
    const auto moves = corrective_directions(dev, 1e-6);
    return moves.empty() ? otherwise : join_moves(moves) + tail;
  };
  switch (record.taxonomy) {
    case FailureTaxonomy::PositionDeviation:
      return moves_or(std::get<PositionDelta>(record.payload).dp, "Continue to the target.");
    case FailureTaxonomy::WrongObject: {
      const auto& w = std::get<WrongObjectPair>(record.payload);
      const auto moves = corrective_directions(w.shift, 1e-6);
      return (moves.empty() ? "Move the end-effector" : join_moves(moves) + ",") + " toward " +
             quoted(w.original) + tail;
    }
    case FailureTaxonomy::OrientationDeviation: {
      const auto sense = reversed(dominant_rotation(std::get<OrientationDelta>(record.payload).dq));
      return "Rotate the gripper " + rotation_phrase(sense) + tail;
    }
    case FailureTaxonomy::GraspingError:
      return "Open the gripper and " + std::string(kRedoGraspPhrase) + ", then lift the object.";
    case FailureTaxonomy::TimingError: {
      const auto& ts = std::get<TimingShift>(record.payload);
      return capitalized(std::string(ts.dt < 0 ? kWaitPhrase : kNoDelayPhrase)) + " before the " +
             quoted(s.name) + " substage" + tail;
    }
    case FailureTaxonomy::StepOmission: {
      const std::string perform = "perform the " + quoted(s.name) + " substage.";
      if (s.kind == SubstageKind::Grasp) return "Close the gripper on the object to " + perform;
      // Where the end-effector sits relative to the skipped target.
      const Position from = record.substage > 1
                                ? expert_substage(plan, record.substage - 1).target_pose.position
                                : plan.home.position;
      const auto moves = corrective_directions(from - s.target_pose.position, 1e-6);
      return moves.empty() ? capitalized(perform) : join_moves(moves) + ", then " + perform;
    }
  }
  return {};
}

std::optional<OpenEndedAnswers> RuleAnnotator::annotate(const Trajectory& trajectory,
                                                        const FailureRecord& record) {
  OpenEndedAnswers a;
  a.reason = describe_failure(record);
  a.high_level_correction = fallback_high_level(trajectory.plan, record);
  a.low_level_correction = fallback_low_level(trajectory.plan, record);
  a.provenance = AnswerProvenance::RuleFallback;
  return a;
}

std::optional<OpenEndedAnswers> RemoteAnnotator::annotate(const Trajectory& trajectory,
                                                          const FailureRecord& record) {
  const nlohmann::json body{{"prompt", fill_annotation_prompt(trajectory.plan, record)},
                            {"trajectory", trajectory_summary(trajectory)}};
  auto parse = [](const nlohmann::json& reply) -> std::optional<nlohmann::json> {
    auto doc = unwrap_reply(reply, "reason");
    if (!doc || !doc->is_object()) return std::nullopt;
    for (const char* k : {"reason", "high level correction", "low level correction"}) {
      if (!doc->contains(k) || !(*doc)[k].is_string() || (*doc)[k].get<std::string>().empty()) {
        return std::nullopt;
      }
    }
    return doc;
  };
  const RemoteResult r = post_json(ep_, body, parse);
  if (!r.value) return std::nullopt;
  OpenEndedAnswers a;
  a.reason = (*r.value)["reason"].get<std::string>();
  a.high_level_correction = (*r.value)["high level correction"].get<std::string>();
  a.low_level_correction = (*r.value)["low level correction"].get<std::string>();
  a.provenance = AnswerProvenance::LlmAnnotated;
  return a;
}

OpenEndedAnswers annotate_open_ended(const Trajectory& trajectory, const FailureRecord& record,
                                     Annotator* annotator) {
  if (annotator != nullptr) {
    std::optional<OpenEndedAnswers> a;
    try {
      a = annotator->annotate(trajectory, record);
    } catch (const std::exception&) {
      a.reset();
    }
    if (a && !a->reason.empty() && !a->high_level_correction.empty() &&
        !a->low_level_correction.empty()) {
      return *a;
    }
  }
  RuleAnnotator rules;
  return *rules.annotate(trajectory, record);
}

const std::vector<std::string>& substage_pool() {
  static const std::vector<std::string> pool = [] {
    auto names = all_substage_names();
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    return names;
  }();
  return pool;
}

std::vector<QAItem> synthesize_qa(const Trajectory& trajectory,
                                  const std::optional<FailureRecord>& record, std::uint64_t seed,
                                  Annotator* annotator) {
  const bool failed = trajectory.outcome == Outcome::Failure;
  if (failed != record.has_value()) {
    throw InvalidArgument("failure record must be present exactly for failed trajectories");
  }
  const std::string tid = record ? record->id : trajectory_id(trajectory);
  const std::uint64_t base = derive_seed(seed, {hash_string(tid)});

  std::vector<QuestionType> types(kSuccessTypes.begin(), kSuccessTypes.end());
  if (failed) types.assign(kAllQuestionTypes.begin(), kAllQuestionTypes.end());

  std::optional<OpenEndedAnswers> open;
  if (failed) open = annotate_open_ended(trajectory, *record, annotator);

  std::vector<QAItem> items;
  for (QuestionType q : types) {
    QAItem it;
    it.id = tid + "-" + std::string(to_string(q));
    it.trajectory_id = tid;
    it.task_id = trajectory.plan.task_id;
    it.category = std::string(to_string(trajectory.plan.category));
    it.variant = trajectory.plan.scene.variant;
    it.question_type = q;
    it.question_text = render_question(q, base);
    switch (q) {
      case QuestionType::FailureExplanation:
        it.reference_answer = open->reason;
        it.provenance = open->provenance;
        break;
      case QuestionType::HighLevelCorrection:
        it.reference_answer = open->high_level_correction;
        it.provenance = open->provenance;
        break;
      case QuestionType::LowLevelCorrection:
        it.reference_answer = open->low_level_correction;
        it.provenance = open->provenance;
        break;
      default:
        it.reference_answer = oracle_answer(q, trajectory, record);
        it.provenance = AnswerProvenance::Oracle;
    }
    if (is_multiple_choice(q)) {
      it.mc = build_mc_options(q, it.reference_answer, substage_pool(),
                               derive_seed(base, {hash_string("options"), static_cast<std::uint64_t>(q)}));
    }
    items.push_back(std::move(it));
  }
  return items;
}

nlohmann::json to_json(const QAItem& item) {
  nlohmann::json j{{"id", item.id},
                   {"trajectory_id", item.trajectory_id},
                   {"task_id", item.task_id},
                   {"category", item.category},
                   {"variant", item.variant},
                   {"question_type", to_string(item.question_type)},
                   {"question", item.question_text},
                   {"reference_answer", item.reference_answer},
                   {"provenance", to_string(item.provenance)}};
  if (item.mc) {
    j["options"] = item.mc->options;
    j["correct_index"] = item.mc->correct_index;
  }
  return j;
}

QAItem qa_item_from_json(const nlohmann::json& j) {
  try {
    QAItem it;
    it.id = j.at("id").get<std::string>();
    it.trajectory_id = j.at("trajectory_id").get<std::string>();
    it.task_id = j.at("task_id").get<std::string>();
    it.category = j.at("category").get<std::string>();
    it.variant = j.value("variant", std::string{});
    it.question_type = question_type_from_string(j.at("question_type").get<std::string>());
    it.question_text = j.at("question").get<std::string>();
    it.reference_answer = j.at("reference_answer").get<std::string>();
    it.provenance = provenance_from_string(j.at("provenance").get<std::string>());
    if (j.contains("options")) {
      MCOptionSet mc;
      mc.options = j.at("options").get<std::vector<std::string>>();
      mc.correct_index = j.at("correct_index").get<int>();
      validate_options(it.question_type, mc);
      it.mc = std::move(mc);
    }
    if (it.mc.has_value() != is_multiple_choice(it.question_type)) {
      throw IntegrityError("options must be present exactly for multiple-choice items: " + it.id);
    }
    if (it.reference_answer.empty()) throw IntegrityError("empty reference answer: " + it.id);
    return it;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("malformed QA item: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw IntegrityError(std::string("malformed QA item: ") + e.what());
  }
}

}  // namespace manifail
