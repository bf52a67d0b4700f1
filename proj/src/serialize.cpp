#include "manifail/serialize.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "manifail/errors.hpp"

namespace manifail {

double round9(double v) {
  if (!std::isfinite(v)) throw InvalidArgument("cannot serialize non-finite number");
  // Round-off residue around zero would otherwise print as noise digits.
  if (std::abs(v) < kZeroFlush) return 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  const double r = std::strtod(buf, nullptr);
  return r == 0.0 ? 0.0 : r;
}

namespace {

json vec3(const Position& p) { return json::array({round9(p.x), round9(p.y), round9(p.z)}); }

Position vec3_from(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json quat(const Orientation& q) {
  return json::array({round9(q.w()), round9(q.x()), round9(q.y()), round9(q.z())});
}

Orientation quat_from(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
          j.at(3).get<double>()};
}

json sites_json(const FaultSites& s) {
  return {{"omittable", s.omittable},
          {"position", s.position},
          {"orientation", s.orientation},
          {"timing", s.timing}};
}

FaultSites sites_from(const json& j) {
  return {j.at("omittable").get<bool>(), j.at("position").get<bool>(),
          j.at("orientation").get<bool>(), j.at("timing").get<bool>()};
}

json payload_json(const FailurePayload& payload) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, OmittedSubstage>) {
          return {{"kind", "omitted_substage"}, {"substage", to_json(p.substage)}};
        } else if constexpr (std::is_same_v<P, WrongObjectPair>) {
          return {{"kind", "wrong_object"},
                  {"original", p.original},
                  {"replacement", p.replacement},
                  {"shift", vec3(p.shift)}};
        } else if constexpr (std::is_same_v<P, PositionDelta>) {
          return {{"kind", "position_delta"}, {"dp", vec3(p.dp)}};
        } else if constexpr (std::is_same_v<P, OrientationDelta>) {
          return {{"kind", "orientation_delta"}, {"dq", quat(p.dq)}};
        } else if constexpr (std::is_same_v<P, GripperChange>) {
          return {{"kind", "gripper"}, {"nominal", round9(p.nominal)}, {"actual", round9(p.actual)}};
        } else {
          return {{"kind", "timing"}, {"nominal_time", round9(p.nominal_time)}, {"dt", round9(p.dt)}};
        }
      },
      payload);
}

FailurePayload payload_from(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "omitted_substage") return OmittedSubstage{substage_from_json(j.at("substage"))};
  if (kind == "wrong_object") {
    return WrongObjectPair{j.at("original").get<std::string>(),
                           j.at("replacement").get<std::string>(), vec3_from(j.at("shift"))};
  }
  if (kind == "position_delta") return PositionDelta{vec3_from(j.at("dp"))};
  if (kind == "orientation_delta") return OrientationDelta{quat_from(j.at("dq"))};
  if (kind == "gripper") return GripperChange{j.at("nominal").get<double>(), j.at("actual").get<double>()};
  if (kind == "timing") return TimingShift{j.at("nominal_time").get<double>(), j.at("dt").get<double>()};
  throw InvalidArgument("unknown failure payload kind: " + kind);
}

}  // namespace

json pose_to_json(const Pose& p) {
  const auto& q = p.orientation;
  return json::array({round9(p.position.x), round9(p.position.y), round9(p.position.z),
                      round9(q.w()), round9(q.x()), round9(q.y()), round9(q.z())});
}

Pose pose_from_json(const json& j) {
  if (!j.is_array() || j.size() != 7) throw InvalidArgument("pose must be a 7-element array");
  return {{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()},
          Orientation::from_stored(j[3].get<double>(), j[4].get<double>(), j[5].get<double>(),
                                   j[6].get<double>())};
}

json to_json(const SceneObject& o) {
  json j = {{"id", o.id},
            {"kind", to_string(o.kind)},
            {"pose", pose_to_json(o.pose)},
            {"graspable", o.graspable},
            {"extent", round9(o.extent)},
            {"parent", o.parent},
            {"gate_door", o.gate_door}};
  j["closed_position"] = o.closed_position ? vec3(*o.closed_position) : json(nullptr);
  return j;
}

SceneObject scene_object_from_json(const json& j) {
  SceneObject o;
  o.id = j.at("id").get<std::string>();
  o.kind = object_kind_from_string(j.at("kind").get<std::string>());
  o.pose = pose_from_json(j.at("pose"));
  o.graspable = j.at("graspable").get<bool>();
  o.extent = j.at("extent").get<double>();
  o.parent = j.at("parent").get<std::string>();
  o.gate_door = j.at("gate_door").get<std::string>();
  if (!j.at("closed_position").is_null()) o.closed_position = vec3_from(j.at("closed_position"));
  return o;
}

json to_json(const SubstageTarget& s) {
  return {{"index", s.index},
          {"name", s.name},
          {"kind", to_string(s.kind)},
          {"target_pose", pose_to_json(s.target_pose)},
          {"gripper", round9(s.gripper)},
          {"object_id", s.object_id},
          {"tool_id", s.tool_id},
          {"nominal_time", round9(s.nominal_time)},
          {"duration", round9(s.duration)},
          {"hold_pose", s.hold_pose},
          {"disc_frame", s.disc_frame},
          {"sites", sites_json(s.sites)}};
}

SubstageTarget substage_from_json(const json& j) {
  SubstageTarget s;
  s.index = j.at("index").get<int>();
  s.name = j.at("name").get<std::string>();
  s.kind = substage_kind_from_string(j.at("kind").get<std::string>());
  s.target_pose = pose_from_json(j.at("target_pose"));
  s.gripper = j.at("gripper").get<double>();
  s.object_id = j.at("object_id").get<std::string>();
  s.tool_id = j.at("tool_id").get<std::string>();
  s.nominal_time = j.at("nominal_time").get<double>();
  s.duration = j.at("duration").get<double>();
  s.hold_pose = j.at("hold_pose").get<bool>();
  s.disc_frame = j.at("disc_frame").get<bool>();
  s.sites = sites_from(j.at("sites"));
  return s;
}

json to_json(const Goal& g) {
  return {{"object", g.object},
          {"reference", g.reference},
          {"relative", pose_to_json(g.relative)},
          {"check_orientation", g.check_orientation}};
}

Goal goal_from_json(const json& j) {
  Goal g;
  g.object = j.at("object").get<std::string>();
  g.reference = j.at("reference").get<std::string>();
  g.relative = pose_from_json(j.at("relative"));
  g.check_orientation = j.at("check_orientation").get<bool>();
  return g;
}

json to_json(const TaskPlan& p) {
  json subs = json::array();
  for (const auto& s : p.substages) subs.push_back(to_json(s));
  json objs = json::array();
  for (const auto& o : p.scene.objects) objs.push_back(to_json(o));
  json goals = json::array();
  for (const auto& g : p.goals) goals.push_back(to_json(g));
  return {{"task", p.task_id},
          {"category", to_string(p.category)},
          {"instruction", p.instruction},
          {"seed", p.seed},
          {"substages", subs},
          {"scene",
           {{"objects", objs},
            {"workspace", {vec3(p.scene.workspace.min), vec3(p.scene.workspace.max)}},
            {"spin_speed", round9(p.scene.spin_speed)},
            {"variant", p.scene.variant}}},
          {"goals", goals},
          {"home", pose_to_json(p.home)},
          {"horizon", round9(p.horizon)}};
}

TaskPlan plan_from_json(const json& j) {
  TaskPlan p;
  p.task_id = j.at("task").get<std::string>();
  p.category = category_from_string(j.at("category").get<std::string>());
  p.instruction = j.at("instruction").get<std::string>();
  p.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& s : j.at("substages")) p.substages.push_back(substage_from_json(s));
  const json& sc = j.at("scene");
  for (const auto& o : sc.at("objects")) p.scene.objects.push_back(scene_object_from_json(o));
  p.scene.workspace = {vec3_from(sc.at("workspace").at(0)), vec3_from(sc.at("workspace").at(1))};
  p.scene.spin_speed = sc.at("spin_speed").get<double>();
  p.scene.variant = sc.at("variant").get<std::string>();
  for (const auto& g : j.at("goals")) p.goals.push_back(goal_from_json(g));
  p.home = pose_from_json(j.at("home"));
  p.horizon = j.at("horizon").get<double>();
  return p;
}

json to_json(const Frame& f) {
  json objs = json::object();
  for (const auto& [id, pose] : f.object_poses) objs[id] = pose_to_json(pose);
  return {{"t", round9(f.time)},
          {"ee", pose_to_json(f.ee_pose)},
          {"gripper", round9(f.gripper)},
          {"objects", objs},
          {"active", f.active_substage}};
}

Frame frame_from_json(const json& j) {
  Frame f;
  f.time = j.at("t").get<double>();
  f.ee_pose = pose_from_json(j.at("ee"));
  f.gripper = j.at("gripper").get<double>();
  for (const auto& [id, pose] : j.at("objects").items()) f.object_poses[id] = pose_from_json(pose);
  f.active_substage = j.at("active").get<int>();
  return f;
}

json to_json(const FailureRecord& r) {
  return {{"id", r.id},
          {"task", r.task_id},
          {"taxonomy", to_string(r.taxonomy)},
          {"level", to_string(level_of(r.taxonomy))},
          {"substage", r.substage},
          {"substage_name", r.substage_name},
          {"payload", payload_json(r.payload)},
          {"perturbed_pose", r.perturbed_pose ? pose_to_json(*r.perturbed_pose) : json(nullptr)},
          {"description", r.description},
          {"correction_hint", r.correction_hint}};
}

FailureRecord record_from_json(const json& j) {
  FailureRecord r;
  r.id = j.at("id").get<std::string>();
  r.task_id = j.at("task").get<std::string>();
  r.taxonomy = taxonomy_from_string(j.at("taxonomy").get<std::string>());
  r.substage = j.at("substage").get<int>();
  r.substage_name = j.at("substage_name").get<std::string>();
  r.payload = payload_from(j.at("payload"));
  if (!j.at("perturbed_pose").is_null()) r.perturbed_pose = pose_from_json(j.at("perturbed_pose"));
  r.description = j.at("description").get<std::string>();
  r.correction_hint = j.at("correction_hint").get<std::string>();
  return r;
}

std::string dump_line(const json& j) { return j.dump(); }

std::string trajectory_id(const Trajectory& t) {
  if (t.failure_record) return *t.failure_record;
  return t.plan.task_id + "-" + std::to_string(t.plan.seed) + "-expert";
}

std::string trajectory_to_jsonl(const Trajectory& t) {
  json executed = json::array();
  for (const auto& s : t.executed) executed.push_back(to_json(s));
  json header = {{"type", "header"},
                 {"id", trajectory_id(t)},
                 {"plan", to_json(t.plan)},
                 {"executed", executed},
                 {"frame_rate", round9(t.frame_rate)},
                 {"episode_seed", t.episode_seed}};
  std::string out = dump_line(header) + "\n";
  for (const auto& f : t.frames) out += dump_line(to_json(f)) + "\n";
  json footer = {{"type", "footer"},
                 {"outcome", to_string(t.outcome)},
                 {"duration", round9(t.duration)},
                 {"failure_record", t.failure_record ? json(*t.failure_record) : json(nullptr)}};
  out += dump_line(footer) + "\n";
  return out;
}

Trajectory trajectory_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Trajectory t;
  bool have_header = false;
  bool have_footer = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.contains("type") && j["type"] == "header") {
      t.plan = plan_from_json(j.at("plan"));
      for (const auto& s : j.at("executed")) t.executed.push_back(substage_from_json(s));
      t.frame_rate = j.at("frame_rate").get<double>();
      t.episode_seed = j.at("episode_seed").get<std::uint64_t>();
      have_header = true;
    } else if (j.contains("type") && j["type"] == "footer") {
      t.outcome = outcome_from_string(j.at("outcome").get<std::string>());
      t.duration = j.at("duration").get<double>();
      if (!j.at("failure_record").is_null()) t.failure_record = j["failure_record"].get<std::string>();
      have_footer = true;
    } else {
      t.frames.push_back(frame_from_json(j));
    }
  }
  if (!have_header || !have_footer || t.frames.empty()) {
    throw IntegrityError("trajectory file is missing its header, footer or frames");
  }
  return t;
}

}  // namespace manifail
