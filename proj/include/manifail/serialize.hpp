#pragma once

// JSON encoding for plans, trajectories and failure records. Reals are
// rounded to 9 significant digits on write so output is byte-stable.

#include <string>

#include "json.hpp"
#include "manifail/injector.hpp"
#include "manifail/simulator.hpp"

namespace manifail {

using nlohmann::json;

inline constexpr double kZeroFlush = 1e-12;  // magnitudes below this are written as 0
double round9(double v);

json pose_to_json(const Pose& p);
Pose pose_from_json(const json& j);

json to_json(const SceneObject& o);
json to_json(const SubstageTarget& s);
json to_json(const Goal& g);
json to_json(const TaskPlan& p);
json to_json(const Frame& f);
json to_json(const FailureRecord& r);

SceneObject scene_object_from_json(const json& j);
SubstageTarget substage_from_json(const json& j);
Goal goal_from_json(const json& j);
TaskPlan plan_from_json(const json& j);
Frame frame_from_json(const json& j);
FailureRecord record_from_json(const json& j);

// Header line, one line per frame, footer line.
std::string trajectory_to_jsonl(const Trajectory& t);
Trajectory trajectory_from_jsonl(const std::string& text);

std::string trajectory_id(const Trajectory& t);

// Compact single-line dump.
std::string dump_line(const json& j);

}  // namespace manifail
