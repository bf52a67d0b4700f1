#pragma once

// Single-fault injection into expert plans, with the ground truth needed to
// answer questions about the failure and to undo it.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "manifail/taskmodel.hpp"

namespace manifail {

enum class FailureTaxonomy {
  StepOmission,
  WrongObject,
  PositionDeviation,
  OrientationDeviation,
  GraspingError,
  TimingError,
};

enum class FailureLevel { TaskPlanning, MotionPlanning, ExecutionControl };

inline constexpr std::array<FailureTaxonomy, 6> kAllTaxonomies{
    FailureTaxonomy::StepOmission,         FailureTaxonomy::WrongObject,
    FailureTaxonomy::PositionDeviation,    FailureTaxonomy::OrientationDeviation,
    FailureTaxonomy::GraspingError,        FailureTaxonomy::TimingError,
};

// snake_case identifier, e.g. "position_deviation".
std::string_view to_string(FailureTaxonomy t);
FailureTaxonomy taxonomy_from_string(std::string_view s);
// Multiple-choice option string, e.g. "Position deviation.".
std::string_view option_string(FailureTaxonomy t);
FailureLevel level_of(FailureTaxonomy t);
std::string_view to_string(FailureLevel l);

struct OmittedSubstage {
  SubstageTarget substage;
  bool operator==(const OmittedSubstage&) const = default;
};
struct WrongObjectPair {
  std::string original;
  std::string replacement;
  Position shift;  // applied to the substage target position
  bool operator==(const WrongObjectPair&) const = default;
};
struct PositionDelta {
  Position dp;
  bool operator==(const PositionDelta&) const = default;
};
struct OrientationDelta {
  Orientation dq;
  bool operator==(const OrientationDelta&) const = default;
};
struct GripperChange {
  double nominal{1.0};
  double actual{0.0};
  bool operator==(const GripperChange&) const = default;
};
struct TimingShift {
  double nominal_time{0.0};
  double dt{0.0};  // negative = early
  bool operator==(const TimingShift&) const = default;
};

using FailurePayload = std::variant<OmittedSubstage, WrongObjectPair, PositionDelta,
                                    OrientationDelta, GripperChange, TimingShift>;

struct FailureSpec {
  FailureTaxonomy taxonomy{FailureTaxonomy::PositionDeviation};
  int substage{1};  // index k of S_k
  FailurePayload payload;
};

struct FailureRecord {
  std::string id;
  std::string task_id;
  FailureTaxonomy taxonomy{FailureTaxonomy::PositionDeviation};
  int substage{1};
  std::string substage_name;
  FailurePayload payload;
  std::optional<Pose> perturbed_pose;
  std::string description;
  std::string correction_hint;

  bool operator==(const FailureRecord&) const = default;
};

struct Injection {
  std::vector<SubstageTarget> substages;
  FailureRecord record;
};

// Substage indices where `t` can be injected (empty when not applicable).
std::vector<int> applicable_substages(const TaskPlan& plan, FailureTaxonomy t);
std::vector<FailureTaxonomy> applicable_taxonomies(const TaskPlan& plan);

FailureSpec sample_failure_spec(const TaskPlan& plan, std::optional<FailureTaxonomy> taxonomy,
                                std::uint64_t seed);

Injection inject(const TaskPlan& plan, const FailureSpec& spec);

std::string describe_failure(const FailureRecord& record);

// Undoes the recorded fault on a perturbed substage sequence.
std::vector<SubstageTarget> invert(const std::vector<SubstageTarget>& perturbed,
                                   const FailureRecord& record);

// Per-axis phrase for a position error, e.g. "in front of" for +X.
std::string_view axis_phrase(int axis, double sign);

}  // namespace manifail
