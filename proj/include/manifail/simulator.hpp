#pragma once

// Kinematic episode executor. No dynamics: objects move only while carried by
// the gripper, pushed by it, or riding a parent (disc, cup, door).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "manifail/taskmodel.hpp"

namespace manifail {

inline constexpr double kAttachThreshold = 0.5;
inline constexpr double kGraspMargin = 0.01;  // grasp_radius = extent + margin
inline constexpr double kPosTol = 0.015;
inline constexpr double kAngTol = kPi / 18.0;  // 10 degrees
inline constexpr double kDefaultFrameRate = 10.0;
// A door counts as closed while its handle is this close to the closed position.
inline constexpr double kDoorClosedBand = 0.05;

enum class Outcome { Success, Failure, InProgress };

std::string_view to_string(Outcome o);
Outcome outcome_from_string(std::string_view s);

struct Frame {
  double time{0.0};
  Pose ee_pose;
  double gripper{0.0};
  std::map<std::string, Pose> object_poses;
  int active_substage{1};

  bool operator==(const Frame&) const = default;
};

struct Trajectory {
  TaskPlan plan;
  // Substages actually executed; equals plan.substages for expert runs.
  std::vector<SubstageTarget> executed;
  double frame_rate{kDefaultFrameRate};
  std::uint64_t episode_seed{0};
  std::vector<Frame> frames;
  Outcome outcome{Outcome::Failure};
  double duration{0.0};
  std::optional<std::string> failure_record;

  bool operator==(const Trajectory&) const = default;
};

// Runs the plan (or `overrides` in place of its substages). Overrides must use
// substage indices of the plan; a subset (omission) is allowed.
Trajectory run_episode(const TaskPlan& plan,
                       const std::optional<std::vector<SubstageTarget>>& overrides = std::nullopt,
                       double frame_rate = kDefaultFrameRate, std::uint64_t seed = 0);

bool success_predicate(const TaskPlan& plan, const Frame& final_frame);

// Per-goal errors on a frame: (position error m, angle error rad).
std::vector<std::pair<double, double>> goal_errors(const TaskPlan& plan, const Frame& frame);

// Prefix of frames with time <= t_pause, marked in-progress.
Trajectory segment(const Trajectory& trajectory, double t_pause);

// Frame whose timestamp is nearest to t.
const Frame& frame_at(const Trajectory& trajectory, double t);

}  // namespace manifail
