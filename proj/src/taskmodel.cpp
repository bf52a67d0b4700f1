#include "manifail/taskmodel.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <set>

#include "manifail/errors.hpp"
#include "manifail/random.hpp"

namespace manifail {

namespace {

constexpr double kApproachHeight = 0.10;
constexpr double kCubeHalf = 0.02;
constexpr double kPegHalfLength = 0.06;
constexpr double kPegRadius = 0.015;
constexpr double kContactGap = 0.005;
constexpr double kSubstageDynamic = 1.0;

constexpr Bounds kWorkspace{{-0.30, -0.80, -0.25}, {1.00, 0.80, 1.00}};

const std::array<std::string_view, 3> kSimVariants{"tabletop", "kitchen", "living-room"};

// Axis-aligned placement region on the table.
struct Region {
  double x0, x1, y0, y1;
};

Position sample_xy(Rng& rng, const Region& r, double z) {
  return {rng.uniform(r.x0, r.x1), rng.uniform(r.y0, r.y1), z};
}

double sample_yaw(Rng& rng) { return rng.uniform(-kPi / 4.0, kPi / 4.0); }

double horizontal_distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Rejection-samples a point at least `min_gap` (horizontally) away from
// every point in `taken`.
Position sample_apart(Rng& rng, const Region& r, double z, const std::vector<Position>& taken,
                      double min_gap) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Position p = sample_xy(rng, r, z);
    bool ok = std::all_of(taken.begin(), taken.end(), [&](const Position& q) {
      return horizontal_distance(p, q) >= min_gap;
    });
    if (ok) return p;
  }
  throw CatalogError("placement region too small for requested separation");
}

Pose above(const Pose& p, double h = kApproachHeight) {
  return {p.position + Position{0, 0, h}, p.orientation};
}

Pose shifted(const Pose& p, const Position& d) { return {p.position + d, p.orientation}; }

Pose with_orientation(const Pose& p, const Orientation& q) { return {p.position, q}; }

// Gripper pointing along +X (toward the far side of the table).
Orientation gripper_forward() { return Orientation::about_y(kPi / 2.0); }

class PlanBuilder {
 public:
  PlanBuilder(TaskPlan& plan, Pose home) : plan_(plan) {
    plan_.home = home;
    last_pose_ = home;
  }

  SubstageTarget& add(std::string name, SubstageKind kind, const Pose& target, double gripper,
                      double duration, FaultSites sites, std::string object = {}) {
    time_ += duration;
    SubstageTarget s;
    s.index = static_cast<int>(plan_.substages.size()) + 1;
    s.name = std::move(name);
    s.kind = kind;
    s.target_pose = target;
    s.gripper = gripper;
    s.object_id = std::move(object);
    s.nominal_time = time_;
    s.duration = duration;
    s.hold_pose = kind == SubstageKind::Release;
    s.sites = sites;
    plan_.substages.push_back(std::move(s));
    last_pose_ = target;
    gripper_ = gripper;
    return plan_.substages.back();
  }

  SubstageTarget& move(std::string name, const Pose& target, double duration,
                       FaultSites sites = {}) {
    return add(std::move(name), SubstageKind::Move, target, gripper_, duration, sites);
  }

  SubstageTarget& grasp(std::string name, const std::string& object, FaultSites sites) {
    sites.timing = true;
    return add(std::move(name), SubstageKind::Grasp, last_pose_, 1.0, 1.0, sites, object);
  }

  SubstageTarget& release(std::string name, FaultSites sites) {
    sites.timing = true;
    return add(std::move(name), SubstageKind::Release, last_pose_, 0.0, 1.0, sites);
  }

  SubstageTarget& push(std::string name, const std::string& object, const Pose& target,
                       double duration, FaultSites sites, std::string tool = {}) {
    sites.timing = true;
    auto& s = add(std::move(name), SubstageKind::Push, target, gripper_, duration, sites, object);
    s.tool_id = std::move(tool);
    return s;
  }

  // Disc-tracking variant: `disc_target` is expressed in the disc frame and
  // converted to the world pose the disc will carry it to at the nominal time.
  SubstageTarget& add_on_disc(SubstageTarget& s, const Pose& disc_target, const Position& center,
                              double spin) {
    const Orientation rot = Orientation::about_z(spin * s.nominal_time);
    s.target_pose = {center + rot.rotate(disc_target.position),
                     quat_mul(rot, disc_target.orientation)};
    s.disc_frame = true;
    last_pose_ = s.target_pose;
    return s;
  }

  const Pose& last_pose() const { return last_pose_; }
  double time() const { return time_; }

 private:
  TaskPlan& plan_;
  Pose last_pose_;
  double gripper_{0.0};
  double time_{0.0};
};

constexpr FaultSites kNone{};
constexpr FaultSites kOmit{true, false, false};
constexpr FaultSites kOmitPos{true, true, false};
constexpr FaultSites kOmitPosOri{true, true, true};

// Reach above, descend, close, lift. Names are suffixed with `what` unless empty.
void pick(PlanBuilder& b, const std::string& what, const std::string& object, const Pose& grasp,
          double lift = kApproachHeight) {
  const std::string sfx = what.empty() ? "" : "-" + what;
  b.move("reach-above" + sfx, above(grasp), 1.5);
  b.move(what.empty() ? "descend" : "descend-to" + sfx, grasp, 1.0, kOmitPos);
  b.grasp("grasp" + sfx, object, kOmitPos);
  b.move("lift" + sfx, above(grasp, lift), 1.0);
}

// Lower onto `place`, open, and back off upward.
void place(PlanBuilder& b, const std::string& what, const Pose& place, double transport = 2.0) {
  b.move("move-above-" + what, above(place), transport);
  b.move("place-" + what, place, 1.0, kOmitPosOri);
}

void release_and_retreat(PlanBuilder& b, const std::string& what,
                         const Position& retreat_dir = {0, 0, kApproachHeight}) {
  b.release("release-" + what, kOmit);
  b.move("retreat", shifted(b.last_pose(), retreat_dir), 1.0);
}

SceneObject object(std::string id, ObjectKind kind, Pose pose, bool graspable, double extent,
                   std::string parent = {}) {
  SceneObject o;
  o.id = std::move(id);
  o.kind = kind;
  o.pose = pose;
  o.graspable = graspable;
  o.extent = extent;
  o.parent = std::move(parent);
  return o;
}

Pose home_pose() { return {{0.25, 0.0, 0.30}, gripper_down()}; }

// Goal pinned to where the expert leaves `object`, relative to `reference`.
Goal goal_relative(const TaskPlan& plan, const std::string& object, const Pose& final_world,
                   const std::string& reference) {
  Goal g;
  g.object = object;
  g.reference = reference;
  if (reference.empty()) {
    g.relative = final_world;
  } else {
    const SceneObject* ref = plan.scene.find(reference);
    g.relative = compose(inverse(ref->pose), final_world);
  }
  return g;
}

// Object pose after being carried from `grasp_ee` (ee pose at grasp) to `final_ee`.
Pose carried(const Pose& object_pose, const Pose& grasp_ee, const Pose& final_ee) {
  return compose(final_ee, compose(inverse(grasp_ee), object_pose));
}

// ---------------------------------------------------------------------------
// Short-horizon tasks

void build_pick_cube(TaskPlan& plan, Rng& rng) {
  const double yaw = sample_yaw(rng);
  const Position c = sample_xy(rng, {0.35, 0.55, -0.20, 0.20}, kCubeHalf);
  Position g = sample_apart(rng, {0.35, 0.60, -0.25, 0.25}, 0.0, {c}, 0.10);
  g.z = rng.uniform(0.10, 0.25);
  const Pose cube{c, Orientation::about_z(yaw)};
  plan.scene.objects.push_back(object("cube", ObjectKind::Cube, cube, true, kCubeHalf));
  plan.scene.objects.push_back(
      object("goal", ObjectKind::TargetRegion, {g, Orientation{}}, false, 0.02));

  PlanBuilder b(plan, home_pose());
  const Pose grasp{c, gripper_down(yaw)};
  pick(b, "", "cube", grasp);
  const Pose target{g, gripper_down(yaw)};
  b.move("move-to-target", target, 2.0, kOmitPosOri);
  plan.goals.push_back(goal_relative(plan, "cube", carried(cube, grasp, target), ""));
}

void build_stack_cube(TaskPlan& plan, Rng& rng, const std::string& base_id = "cube_b") {
  const double yaw_a = sample_yaw(rng);
  const double yaw_b = sample_yaw(rng);
  const Position a = sample_xy(rng, {0.35, 0.55, -0.20, 0.20}, kCubeHalf);
  const Position bpos = sample_apart(rng, {0.35, 0.60, -0.25, 0.25}, kCubeHalf, {a}, 0.10);
  const Pose cube_a{a, Orientation::about_z(yaw_a)};
  const Pose cube_b{bpos, Orientation::about_z(yaw_b)};
  plan.scene.objects.push_back(object("cube_a", ObjectKind::Cube, cube_a, true, kCubeHalf));
  plan.scene.objects.push_back(object(base_id, ObjectKind::Cube, cube_b, true, kCubeHalf));

  PlanBuilder b(plan, home_pose());
  const Pose grasp{a, gripper_down(yaw_a)};
  pick(b, "cube", "cube_a", grasp);
  const Pose put{bpos + Position{0, 0, 2 * kCubeHalf}, gripper_down(yaw_b)};
  place(b, "cube", put);
  release_and_retreat(b, "cube");
  plan.goals.push_back(goal_relative(plan, "cube_a", carried(cube_a, grasp, put), base_id));
}

// Push (+X) or pull (-X) the cube onto the target by contact.
void build_push_pull_cube(TaskPlan& plan, Rng& rng, bool push) {
  const double yaw = sample_yaw(rng);
  const double dir = push ? 1.0 : -1.0;
  const Position c = push ? sample_xy(rng, {0.35, 0.45, -0.20, 0.20}, kCubeHalf)
                          : sample_xy(rng, {0.55, 0.65, -0.20, 0.20}, kCubeHalf);
  const double travel = rng.uniform(0.10, 0.15);
  const Position goal{c.x + dir * travel, c.y, 0.0};
  const Pose cube{c, Orientation::about_z(yaw)};
  plan.scene.objects.push_back(object("cube", ObjectKind::Cube, cube, true, kCubeHalf));
  plan.scene.objects.push_back(
      object("target", ObjectKind::TargetRegion, {goal, Orientation{}}, false, 0.04));

  PlanBuilder b(plan, home_pose());
  const Position stand_off{-dir * (kCubeHalf + kContactGap), 0, 0};
  const Pose start{c + stand_off, gripper_down()};
  const Pose end{Position{goal.x, goal.y, kCubeHalf} + stand_off, gripper_down()};
  const std::string side = push ? "behind-cube" : "beyond-cube";
  b.add("reach-" + side, SubstageKind::Move, above(start), 1.0, 1.5, kNone);
  b.move("descend", start, 1.0, kOmit);
  b.push(push ? "push-cube" : "pull-cube", "cube", end, 2.0, kOmitPosOri);
  b.move("retreat", above(end), 1.0);
  plan.goals.push_back(goal_relative(plan, "cube", carried(cube, start, end), ""));
}

void build_lift_peg_upright(TaskPlan& plan, Rng& rng) {
  const double yaw = sample_yaw(rng);
  const Position c = sample_xy(rng, {0.35, 0.55, -0.20, 0.20}, kPegRadius);
  const Pose peg{c, Orientation::about_z(yaw)};
  plan.scene.objects.push_back(object("peg", ObjectKind::Peg, peg, true, kPegHalfLength));

  PlanBuilder b(plan, home_pose());
  const Pose grasp{c, gripper_down(yaw)};
  pick(b, "peg", "peg", grasp, 0.15);
  // Tip the peg's long axis (local X) up to world +Z about its horizontal normal.
  const Orientation tip =
      Orientation::from_axis_angle(Orientation::about_z(yaw).rotate({0, 1, 0}), -kPi / 2.0);
  const Pose raised{c + Position{0, 0, 0.15}, quat_mul(tip, grasp.orientation)};
  b.move("upright-peg", raised, 1.5);
  const Pose down{Position{c.x, c.y, kPegHalfLength}, raised.orientation};
  b.move("place-peg", down, 1.0, kOmitPosOri);
  release_and_retreat(b, "peg", {-0.10, 0, 0.05});
  plan.goals.push_back(goal_relative(plan, "peg", carried(peg, grasp, down), ""));
}

// ---------------------------------------------------------------------------
// Medium-horizon tasks

void build_upright_stack(TaskPlan& plan, Rng& rng) {
  const double yaw_p = sample_yaw(rng);
  const double yaw_c = sample_yaw(rng);
  const Position p = sample_xy(rng, {0.35, 0.50, -0.25, 0.0}, kPegRadius);
  const Position c = sample_apart(rng, {0.40, 0.60, 0.05, 0.25}, kCubeHalf, {p}, 0.15);
  const Pose peg{p, Orientation::about_z(yaw_p)};
  const Pose cube{c, Orientation::about_z(yaw_c)};
  plan.scene.objects.push_back(object("peg", ObjectKind::Peg, peg, true, kPegHalfLength));
  plan.scene.objects.push_back(object("cube", ObjectKind::Cube, cube, true, kCubeHalf));

  PlanBuilder b(plan, home_pose());
  const Pose grasp{p, gripper_down(yaw_p)};
  pick(b, "peg", "peg", grasp, 0.15);
  const Orientation tip =
      Orientation::from_axis_angle(Orientation::about_z(yaw_p).rotate({0, 1, 0}), -kPi / 2.0);
  const Orientation upright = quat_mul(tip, grasp.orientation);
  b.move("upright-peg", {p + Position{0, 0, 0.15}, upright}, 1.5);
  const Pose put{c + Position{0, 0, kCubeHalf + kPegHalfLength}, upright};
  place(b, "peg", put);
  release_and_retreat(b, "peg", {-0.10, 0, 0.05});
  plan.goals.push_back(goal_relative(plan, "peg", carried(peg, grasp, put), "cube"));
}

// Side insertion along +X into a fixture (peg into block, charger into socket).
void build_side_insertion(TaskPlan& plan, Rng& rng, const std::string& item, ObjectKind item_kind,
                          double item_extent, const std::string& fixture, ObjectKind fixture_kind,
                          double fixture_extent, double depth) {
  const double yaw = sample_yaw(rng);
  const Position it = sample_xy(rng, {0.30, 0.45, -0.25, -0.05}, kPegRadius);
  const Position fx = sample_xy(rng, {0.55, 0.65, 0.05, 0.25}, fixture_extent);
  const Pose item_pose{it, Orientation::about_z(yaw)};
  const Pose fixture_pose{fx, Orientation{}};
  plan.scene.objects.push_back(object(item, item_kind, item_pose, true, item_extent));
  plan.scene.objects.push_back(object(fixture, fixture_kind, fixture_pose, false, fixture_extent));

  PlanBuilder b(plan, home_pose());
  const Pose grasp{it, gripper_down(yaw)};
  pick(b, item, item, grasp);
  // Align the item's long axis (local X) with the insertion axis (world X).
  const Orientation aligned = gripper_down(0.0);
  const Position mouth{fx.x - fixture_extent - item_extent - 0.04, fx.y, fx.z};
  b.move("align-" + item, {mouth, aligned}, 2.0);
  const Pose seated{mouth + Position{depth + 0.04, 0, 0}, aligned};
  b.move("insert-" + item, seated, 1.5, kOmitPosOri);
  release_and_retreat(b, item, {-0.10, 0, 0.05});
  plan.goals.push_back(goal_relative(plan, item, carried(item_pose, grasp, seated), fixture));
}

void build_peg_insertion_side(TaskPlan& plan, Rng& rng) {
  build_side_insertion(plan, rng, "peg", ObjectKind::Peg, kPegHalfLength, "block", ObjectKind::Box,
                       0.05, 0.07);
}

void build_plug_charger(TaskPlan& plan, Rng& rng) {
  build_side_insertion(plan, rng, "charger", ObjectKind::Charger, 0.03, "receptacle",
                       ObjectKind::Receptacle, 0.04, 0.03);
}

void build_insert_cylinder(TaskPlan& plan, Rng& rng) {
  const double yaw = sample_yaw(rng);
  const Position c = sample_xy(rng, {0.30, 0.45, -0.25, -0.05}, kPegRadius);
  const Position s = sample_xy(rng, {0.55, 0.65, 0.05, 0.25}, 0.0);
  const Pose cyl{c, Orientation::about_z(yaw)};
  const Pose shelf{s, Orientation{}};
  plan.scene.objects.push_back(object("cylinder", ObjectKind::Cylinder, cyl, true, 0.05));
  plan.scene.objects.push_back(object("shelf", ObjectKind::Shelf, shelf, false, 0.12));

  PlanBuilder b(plan, home_pose());
  const Pose grasp{c, gripper_down(yaw)};
  pick(b, "cylinder", "cylinder", grasp, 0.20);
  const Orientation tip =
      Orientation::from_axis_angle(Orientation::about_z(yaw).rotate({0, 1, 0}), -kPi / 2.0);
  const Orientation upright = quat_mul(tip, grasp.orientation);
  b.move("upright-cylinder", {c + Position{0, 0, 0.20}, upright}, 1.5);
  // Middle hole on the shelf top; the cylinder ends half inside.
  const Pose seated{s + Position{0, 0, 0.12}, upright};
  b.move("move-above-hole", above(seated, 0.12), 2.0);
  b.move("insert-cylinder", seated, 1.0, kOmitPosOri);
  release_and_retreat(b, "cylinder", {-0.10, 0, 0.10});
  plan.goals.push_back(goal_relative(plan, "cylinder", carried(cyl, grasp, seated), "shelf"));
}

void build_place_cube(TaskPlan& plan, Rng& rng) {
  const double yaw_c = sample_yaw(rng);
  const double yaw_b = sample_yaw(rng);
  const Position c = sample_xy(rng, {0.35, 0.50, -0.25, -0.05}, kCubeHalf);
  const Position bx = sample_xy(rng, {0.45, 0.60, 0.08, 0.25}, 0.0);
  const Pose cube{c, Orientation::about_z(yaw_c)};
  const Pose box{bx, Orientation::about_z(yaw_b)};
  plan.scene.objects.push_back(object("cube", ObjectKind::Cube, cube, true, kCubeHalf));
  plan.scene.objects.push_back(object("box", ObjectKind::Box, box, false, 0.06));

  PlanBuilder b(plan, home_pose());
  const Pose grasp{c, gripper_down(yaw_c)};
  pick(b, "cube", "cube", grasp);
  const Pose put{bx + Position{0, 0, kCubeHalf}, gripper_down(yaw_b)};
  b.move("move-above-box", above(put, 0.12), 2.0);
  b.move("lower-into-box", put, 1.0, kOmitPosOri);
  release_and_retreat(b, "cube");
  plan.goals.push_back(goal_relative(plan, "cube", carried(cube, grasp, put), "box"));
}

// Grab an L-shaped tool and drag the cube toward the robot with its hook.
void build_pull_cube_tool(TaskPlan& plan, Rng& rng) {
  const double yaw_t = sample_yaw(rng);
  const Position t = sample_xy(rng, {0.30, 0.40, -0.25, -0.10}, kCubeHalf);
  const Position c = sample_xy(rng, {0.60, 0.70, 0.0, 0.20}, kCubeHalf);
  const double travel = rng.uniform(0.10, 0.15);
  const Pose tool{t, Orientation::about_z(yaw_t)};
  const Pose cube{c, Orientation{}};
  plan.scene.objects.push_back(object("l_tool", ObjectKind::Tool, tool, true, 0.03));
  plan.scene.objects.push_back(object("cube", ObjectKind::Cube, cube, true, kCubeHalf));
  plan.scene.objects.push_back(object("target", ObjectKind::TargetRegion,
                                      {{c.x - travel, c.y, 0.0}, Orientation{}}, false, 0.04));

  PlanBuilder b(plan, home_pose());
  const Pose grasp{t, gripper_down(yaw_t)};
  pick(b, "tool", "l_tool", grasp);
  const Pose hook{c + Position{kCubeHalf + kContactGap, 0, 0}, gripper_down()};
  b.move("move-beyond-cube", above(hook), 2.0);
  b.move("lower-tool", hook, 1.0, kOmit);
  const Pose end = shifted(hook, {-travel, 0, 0});
  b.push("pull-cube", "cube", end, 2.0, kOmitPosOri, "l_tool");
  b.move("raise-tool", above(end), 1.0);
  plan.goals.push_back(goal_relative(plan, "cube", carried(cube, hook, end), ""));
}

// Pick the correct tool among two, drag the correct charger among two toward
// the robot, then pick that charger and plug it into the receptacle.
void build_tools_task(TaskPlan& plan, Rng& rng) {
  const double yaw_l = sample_yaw(rng);
  const double yaw_s = sample_yaw(rng);
  const Position lt = sample_xy(rng, {0.28, 0.36, -0.30, -0.22}, kCubeHalf);
  const Position st = sample_xy(rng, {0.28, 0.36, -0.12, -0.05}, kCubeHalf);
  const Position c2 = sample_xy(rng, {0.66, 0.72, -0.05, 0.05}, kCubeHalf);
  const Position c3 = sample_xy(rng, {0.66, 0.72, 0.15, 0.22}, kCubeHalf);
  const Position rc = sample_xy(rng, {0.45, 0.55, 0.30, 0.38}, 0.04);
  const Pose l_tool{lt, Orientation::about_z(yaw_l)};
  const Pose charger{c2, Orientation{}};
  plan.scene.objects.push_back(object("l_tool", ObjectKind::Tool, l_tool, true, 0.03));
  plan.scene.objects.push_back(
      object("straight_tool", ObjectKind::Tool, {st, Orientation::about_z(yaw_s)}, true, 0.03));
  plan.scene.objects.push_back(object("charger_2pin", ObjectKind::Charger, charger, true, kCubeHalf));
  plan.scene.objects.push_back(
      object("charger_3pin", ObjectKind::Charger, {c3, Orientation{}}, true, kCubeHalf));
  plan.scene.objects.push_back(
      object("receptacle", ObjectKind::Receptacle, {rc, Orientation{}}, false, 0.04));

  PlanBuilder b(plan, home_pose());
  const Pose tool_grasp{lt, gripper_down(yaw_l)};
  pick(b, "tool", "l_tool", tool_grasp);
  const Pose hook{c2 + Position{kCubeHalf + kContactGap, 0, 0}, gripper_down()};
  b.move("move-beyond-charger", above(hook), 2.0);
  b.move("lower-tool", hook, 1.0, kOmit);
  const double travel = 0.15;
  const Pose pulled_end = shifted(hook, {-travel, 0, 0});
  b.push("pull-charger", "charger_2pin", pulled_end, 2.0, kOmitPosOri, "l_tool");
  b.move("raise-tool", above(pulled_end), 1.0);
  const Pose aside{{0.30, -0.45, kApproachHeight + 0.05}, gripper_down()};
  b.move("move-tool-aside", aside, 1.5);
  b.release("release-tool", kNone).sites.timing = false;

  const Pose charger_now = carried(charger, hook, pulled_end);
  const Pose charger_grasp{charger_now.position, gripper_down()};
  pick(b, "charger", "charger_2pin", charger_grasp);
  const Position mouth{rc.x - 0.04 - kCubeHalf - 0.04, rc.y, rc.z};
  b.move("align-charger", {mouth, gripper_down()}, 2.0);
  const Pose seated{mouth + Position{0.07, 0, 0}, gripper_down()};
  b.move("insert-charger", seated, 1.5, kOmitPosOri);
  release_and_retreat(b, "charger", {-0.10, 0, 0.05});
  plan.goals.push_back(goal_relative(plan, "charger_2pin",
                                     carried(charger_now, charger_grasp, seated), "receptacle"));
}

// ---------------------------------------------------------------------------
// Long-horizon tasks

// Approach a door handle from the front, close on it, drag it to `to`, let go.
void operate_door(PlanBuilder& b, const std::string& verb, const Position& handle,
                  const Position& to) {
  const Orientation fwd = gripper_forward();
  const Pose at{handle, fwd};
  b.move("reach-door-handle-to-" + verb, shifted(at, {-kApproachHeight, 0, 0}), 1.5);
  b.move("approach-door-handle-to-" + verb, at, 1.0, kOmitPos);
  b.grasp("grasp-door-handle-to-" + verb, "door", kOmitPos);
  b.move(verb + "-door", {to, fwd}, 2.0, kOmitPosOri);
  b.release("release-door-handle-after-" + verb, kOmit);
  b.move("retreat-from-door-after-" + verb, shifted({to, fwd}, {-kApproachHeight, 0, 0}), 1.0);
}

void build_microwave_task(TaskPlan& plan, Rng& rng) {
  const double yaw_s = sample_yaw(rng);
  const Position spoon_p = sample_xy(rng, {0.30, 0.38, 0.20, 0.30}, 0.01);
  const Position cup_p = sample_xy(rng, {0.35, 0.42, 0.0, 0.08}, 0.0);
  const Position mw{0.68, -0.28, 0.0};
  const double mw_half = 0.15;
  const Position closed{mw.x - mw_half - 0.02, mw.y + 0.10, 0.12};
  const Position opened = closed + Position{-0.10, 0.12, 0.0};

  const Pose spoon{spoon_p, Orientation::about_z(yaw_s)};
  const Pose cup{cup_p, Orientation{}};
  plan.scene.objects.push_back(object("spoon", ObjectKind::Spoon, spoon, true, 0.03));
  plan.scene.objects.push_back(object("cup", ObjectKind::Cup, cup, true, 0.04));
  SceneObject oven = object("microwave", ObjectKind::Receptacle, {mw, Orientation{}}, false, mw_half);
  oven.gate_door = "door";
  plan.scene.objects.push_back(oven);
  SceneObject door = object("door", ObjectKind::Door, {closed, Orientation{}}, true, kCubeHalf);
  door.closed_position = closed;
  plan.scene.objects.push_back(door);

  PlanBuilder b(plan, home_pose());
  const Pose spoon_grasp{spoon_p, gripper_down(yaw_s)};
  pick(b, "spoon", "spoon", spoon_grasp);
  const Pose spoon_put{cup_p + Position{0, 0, 0.05}, gripper_down()};
  b.move("move-above-cup", above(spoon_put), 1.5);
  b.move("lower-spoon-into-cup", spoon_put, 1.0, kOmitPosOri);
  b.release("release-spoon", kOmit);
  b.move("retreat-from-cup", above(spoon_put), 1.0);

  operate_door(b, "open", closed, opened);

  // The cup is grasped at its rim height so the spoon stays clear.
  const Pose cup_grasp{cup_p + Position{0, 0, 0.04}, gripper_down()};
  pick(b, "cup", "cup", cup_grasp, 0.12);
  const Pose front{{mw.x - mw_half - 0.12, mw.y, 0.06}, gripper_down()};
  b.move("move-cup-to-microwave", front, 2.0);
  const Pose inside{{mw.x, mw.y, 0.06}, gripper_down()};
  b.move("insert-cup", inside, 1.5, kOmitPosOri);
  b.release("release-cup", kOmit);
  b.move("retreat-from-microwave", front, 1.5);

  operate_door(b, "close", opened, closed);

  const Pose spoon_final = carried(spoon, spoon_grasp, spoon_put);
  plan.goals.push_back(goal_relative(plan, "spoon", compose(inverse(cup), spoon_final), ""));
  plan.goals.back().reference = "cup";
  plan.goals.push_back(goal_relative(plan, "cup", carried(cup, cup_grasp, inside), "microwave"));
  plan.goals.push_back(goal_relative(plan, "door", {closed, Orientation{}}, ""));
}

void build_safe_task(TaskPlan& plan, Rng& rng) {
  const double yaw = sample_yaw(rng);
  const Position bar_p = sample_xy(rng, {0.32, 0.42, -0.25, -0.10}, kCubeHalf);
  const Position safe_p{0.68, 0.22, 0.0};
  const double safe_half = 0.12;
  const Position closed{safe_p.x - safe_half - 0.02, safe_p.y - 0.08, 0.12};
  const Position opened = closed + Position{-0.12, -0.14, 0.0};
  const Position knob_offset{-0.01, 0.06, 0.0};

  const Pose bar{bar_p, Orientation::about_z(yaw)};
  plan.scene.objects.push_back(object("gold_bar", ObjectKind::Cube, bar, true, 0.03));
  SceneObject safe = object("safe", ObjectKind::Receptacle, {safe_p, Orientation{}}, false, safe_half);
  safe.gate_door = "door";
  plan.scene.objects.push_back(safe);
  SceneObject door = object("door", ObjectKind::Door, {opened, Orientation{}}, true, kCubeHalf);
  door.closed_position = closed;
  plan.scene.objects.push_back(door);
  plan.scene.objects.push_back(object("knob", ObjectKind::Knob,
                                      {opened + knob_offset, Orientation{}}, true, kCubeHalf,
                                      "door"));

  PlanBuilder b(plan, home_pose());
  const Pose grasp{bar_p, gripper_down(yaw)};
  pick(b, "bar", "gold_bar", grasp);
  const Pose front{{safe_p.x - safe_half - 0.10, safe_p.y, 0.06}, gripper_down()};
  b.move("move-bar-to-safe", front, 2.0);
  const Pose inside{{safe_p.x, safe_p.y, 0.06}, gripper_down()};
  b.move("insert-bar", inside, 1.5, kOmitPosOri);
  b.release("release-bar", kOmit);
  b.move("retreat-from-safe", front, 1.5);

  operate_door(b, "close", opened, closed);

  const Orientation fwd = gripper_forward();
  const Position knob_closed = closed + knob_offset;
  b.move("reach-knob", {knob_closed - Position{kApproachHeight, 0, 0}, fwd}, 1.5);
  b.move("approach-knob", {knob_closed, fwd}, 1.0, kOmitPos);
  b.grasp("grasp-knob", "knob", kOmitPos);
  const Pose turned{knob_closed, quat_mul(Orientation::about_x(kPi / 2.0), fwd)};
  b.move("rotate-knob", turned, 1.5, kOmitPosOri);
  release_and_retreat(b, "knob", {-kApproachHeight, 0, 0});

  plan.goals.push_back(goal_relative(plan, "gold_bar", carried(bar, grasp, inside), "safe"));
  plan.goals.push_back(goal_relative(plan, "door", {closed, Orientation{}}, ""));
  const Pose knob_final = carried({knob_closed, Orientation{}}, {knob_closed, fwd}, turned);
  Goal knob_goal;
  knob_goal.object = "knob";
  knob_goal.reference = "door";
  knob_goal.relative = compose(inverse(Pose{closed, Orientation{}}), knob_final);
  plan.goals.push_back(knob_goal);
}

// ---------------------------------------------------------------------------
// Dynamic tasks: both cubes ride a disc spinning about +Z.

void build_spin_task(TaskPlan& plan, Rng& rng, bool pull_out) {
  const Position center{0.50, 0.0, 0.0};
  const double radius = 0.16;
  const double spin = 2.0 * kPi / (2.0 * kSubstageDynamic);
  plan.scene.spin_speed = spin;
  const double ang_a = rng.uniform(-kPi, kPi);
  const double ang_b = ang_a + rng.uniform(0.6 * kPi, 1.4 * kPi);
  const double ra = pull_out ? rng.uniform(0.04, 0.06) : rng.uniform(0.08, 0.11);
  const double rb = rng.uniform(0.08, 0.11);
  const double yaw_a = sample_yaw(rng);
  const double yaw_b = sample_yaw(rng);
  // Disc-frame (= world at t = 0) poses.
  const Pose a{{center.x + ra * std::cos(ang_a), center.y + ra * std::sin(ang_a), kCubeHalf},
               Orientation::about_z(yaw_a)};
  const Pose bb{{center.x + rb * std::cos(ang_b), center.y + rb * std::sin(ang_b), kCubeHalf},
                Orientation::about_z(yaw_b)};
  plan.scene.objects.push_back(object("disc", ObjectKind::Disc, {center, Orientation{}}, false, radius));
  plan.scene.objects.push_back(object("cube_a", ObjectKind::Cube, a, true, kCubeHalf, "disc"));
  plan.scene.objects.push_back(object("cube_b", ObjectKind::Cube, bb, true, kCubeHalf, "disc"));

  const double d = kSubstageDynamic;
  PlanBuilder b(plan, home_pose());
  // Targets below are disc-frame poses relative to the disc center.
  auto local = [&](const Pose& p) { return Pose{p.position - center, p.orientation}; };
  auto on_disc = [&](SubstageTarget& s, const Pose& disc_pose) {
    b.add_on_disc(s, disc_pose, center, spin);
  };
  const Pose grasp = local({a.position, gripper_down(yaw_a)});
  on_disc(b.move("reach-above-cube", above(grasp), 1.5 * d), above(grasp));
  on_disc(b.move("descend-to-cube", grasp, d, kOmitPos), grasp);
  on_disc(b.grasp("grasp-cube", "cube_a", kOmitPos), grasp);
  Pose held = grasp;
  if (pull_out) {
    const Position radial{std::cos(ang_a), std::sin(ang_a), 0.0};
    held = shifted(grasp, radial * 0.05);
    on_disc(b.move("pull-out-cube", held, d), held);
  }
  on_disc(b.move("lift-cube", above(held), d), above(held));
  const Pose put = local({bb.position + Position{0, 0, 2 * kCubeHalf}, gripper_down(yaw_b)});
  on_disc(b.move("move-above-cube", above(put), 1.5 * d), above(put));
  on_disc(b.move("place-cube", put, d, kOmitPosOri), put);
  on_disc(b.release("release-cube", kOmit), put);
  b.move("retreat", above(b.last_pose(), 0.15), d);

  const Pose final_a = carried(local(a), grasp, put);
  Goal g;
  g.object = "cube_a";
  g.reference = "cube_b";
  g.relative = compose(inverse(local(bb)), final_a);
  plan.goals.push_back(g);
}

using Builder = std::function<void(TaskPlan&, Rng&)>;

struct TaskDef {
  CatalogEntry entry;
  Builder build;
};

const std::vector<TaskDef>& definitions() {
  static const std::vector<TaskDef> defs = {
      {{"SpinStack", Category::Dynamic,
        "Pick up the cube on the spinning disc and stack it on another cube on the disc.", false},
       [](TaskPlan& p, Rng& r) { build_spin_task(p, r, false); }},
      {{"SpinPullStack", Category::Dynamic,
        "Pull out the cube on the spinning disc and stack it on another cube on the disc.", false},
       [](TaskPlan& p, Rng& r) { build_spin_task(p, r, true); }},
      {{"MicrowaveTask", Category::LongHorizon,
        "Put the spoon on the table into the cup. Open the door of microwave, put the cup into "
        "the microwave and close the door.",
        false},
       build_microwave_task},
      {{"SafeTask", Category::LongHorizon,
        "Put the gold bar into the safe, close the door of the safe and rotate the cross knob on "
        "the door to lock it.",
        false},
       build_safe_task},
      {{"ToolsTask", Category::MediumHorizon,
        "Choose the correct (L-shaped) tools, grasp it to pull the correct (2-pins) charger and "
        "plug it.",
        false},
       build_tools_task},
      {{"UprightStack", Category::MediumHorizon, "Upright the peg and stack it on the cube.", false},
       build_upright_stack},
      {{"PegInsertionSide", Category::MediumHorizon,
        "Insert the peg into the hole on the side of the block.", false},
       build_peg_insertion_side},
      {{"PullCubeTool", Category::MediumHorizon,
        "Grasp the L-shaped tool and pull the cube by it.", false},
       build_pull_cube_tool},
      {{"PlugCharger", Category::MediumHorizon,
        "Grasp the charger and plug it into the receptacle.", false},
       build_plug_charger},
      {{"InsertCylinder", Category::MediumHorizon,
        "Upright the cylinder and insert it into the middle hole on the shelf.", true},
       build_insert_cylinder},
      {{"PlaceCube", Category::MediumHorizon, "Pick up the cube and place it into the box.", true},
       build_place_cube},
      {{"LiftPegUpright", Category::ShortHorizon, "Lift the peg and upright it.", false},
       build_lift_peg_upright},
      {{"PickCube", Category::ShortHorizon, "Pick the cube to the target position.", false},
       build_pick_cube},
      {{"PullCube", Category::ShortHorizon, "Pull the cube to the red and white target.", false},
       [](TaskPlan& p, Rng& r) { build_push_pull_cube(p, r, false); }},
      {{"PushCube", Category::ShortHorizon, "Push the cube to the red and white target.", false},
       [](TaskPlan& p, Rng& r) { build_push_pull_cube(p, r, true); }},
      {{"StackCube", Category::ShortHorizon, "Pick up the cube and stack it on another cube.",
        false},
       [](TaskPlan& p, Rng& r) { build_stack_cube(p, r); }},
  };
  return defs;
}

const TaskDef& definition(std::string_view id) {
  for (const auto& d : definitions()) {
    if (d.entry.id == id) return d;
  }
  throw CatalogError("unknown task id: " + std::string(id));
}

}  // namespace

std::string_view to_string(Category c) {
  switch (c) {
    case Category::ShortHorizon: return "short-horizon";
    case Category::MediumHorizon: return "medium-horizon";
    case Category::LongHorizon: return "long-horizon";
    case Category::Dynamic: return "dynamic";
  }
  return "unknown";
}

namespace {
constexpr std::array<std::pair<ObjectKind, std::string_view>, 14> kKindNames{{
    {ObjectKind::Cube, "cube"},
    {ObjectKind::Peg, "peg"},
    {ObjectKind::Cylinder, "cylinder"},
    {ObjectKind::Tool, "tool"},
    {ObjectKind::Charger, "charger"},
    {ObjectKind::Receptacle, "receptacle"},
    {ObjectKind::Cup, "cup"},
    {ObjectKind::Spoon, "spoon"},
    {ObjectKind::Door, "door"},
    {ObjectKind::Knob, "knob"},
    {ObjectKind::TargetRegion, "target-region"},
    {ObjectKind::Box, "box"},
    {ObjectKind::Shelf, "shelf"},
    {ObjectKind::Disc, "disc"},
}};
}  // namespace

std::string_view to_string(ObjectKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

std::string_view to_string(SubstageKind k) {
  switch (k) {
    case SubstageKind::Move: return "move";
    case SubstageKind::Grasp: return "grasp";
    case SubstageKind::Release: return "release";
    case SubstageKind::Push: return "push";
  }
  return "unknown";
}

Category category_from_string(std::string_view s) {
  for (Category c : {Category::ShortHorizon, Category::MediumHorizon, Category::LongHorizon,
                     Category::Dynamic}) {
    if (to_string(c) == s) return c;
  }
  throw InvalidArgument("unknown category: " + std::string(s));
}

ObjectKind object_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kKindNames) {
    if (name == s) return kind;
  }
  throw InvalidArgument("unknown object kind: " + std::string(s));
}

SubstageKind substage_kind_from_string(std::string_view s) {
  for (SubstageKind k :
       {SubstageKind::Move, SubstageKind::Grasp, SubstageKind::Release, SubstageKind::Push}) {
    if (to_string(k) == s) return k;
  }
  throw InvalidArgument("unknown substage kind: " + std::string(s));
}

const SceneObject* Scene::find(std::string_view id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

std::optional<std::size_t> Scene::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].id == id) return i;
  }
  return std::nullopt;
}

Orientation gripper_down(double yaw) {
  return quat_mul(Orientation::about_z(yaw), Orientation::about_x(kPi));
}

const std::vector<CatalogEntry>& task_catalog() {
  static const std::vector<CatalogEntry> entries = [] {
    std::vector<CatalogEntry> out;
    for (const auto& d : definitions()) out.push_back(d.entry);
    return out;
  }();
  return entries;
}

std::vector<std::string> task_ids() {
  std::vector<std::string> out;
  for (const auto& e : task_catalog()) out.emplace_back(e.id);
  return out;
}

const CatalogEntry& catalog_entry(std::string_view task_id) { return definition(task_id).entry; }

Category category_of(std::string_view task_id) { return definition(task_id).entry.category; }

TaskPlan build_task(std::string_view task_id, std::uint64_t seed) {
  const TaskDef& def = definition(task_id);
  TaskPlan plan;
  plan.task_id = std::string(def.entry.id);
  plan.category = def.entry.category;
  plan.instruction = std::string(def.entry.instruction);
  plan.seed = seed;
  plan.scene.workspace = kWorkspace;
  Rng rng(derive_seed(seed, {hash_string(task_id)}));
  plan.scene.variant = def.entry.real_world_analog
                           ? "real-analog"
                           : std::string(kSimVariants[rng.index(kSimVariants.size())]);
  def.build(plan, rng);
  plan.horizon = plan.substages.back().nominal_time;
  validate_plan(plan);
  return plan;
}

const std::vector<SubstageTarget>& expert_plan(const TaskPlan& plan) { return plan.substages; }

std::vector<std::string> all_substage_names() {
  std::set<std::string> names;
  for (const auto& e : task_catalog()) {
    for (const auto& s : build_task(e.id, 0).substages) names.insert(s.name);
  }
  return {names.begin(), names.end()};
}

void validate_plan(const TaskPlan& plan) {
  if (plan.substages.empty()) throw PlanInfeasible("plan has no substages");
  if (!(plan.horizon > 0.0)) throw PlanInfeasible("plan has zero duration");
  if (plan.scene.objects.empty()) throw PlanInfeasible("scene has no objects");
  std::set<std::string> ids;
  for (const auto& o : plan.scene.objects) {
    if (!ids.insert(o.id).second) throw PlanInfeasible("duplicate object id: " + o.id);
    if (!(o.extent > 0.0)) throw PlanInfeasible("object extent must be positive: " + o.id);
  }
  for (const auto& s : plan.substages) {
    if (!(s.duration > 0.0)) throw PlanInfeasible("substage has non-positive duration: " + s.name);
    if (!(s.gripper >= 0.0 && s.gripper <= 1.0)) {
      throw PlanInfeasible("gripper target outside [0, 1]: " + s.name);
    }
    if (!s.target_pose.position.finite()) throw PlanInfeasible("non-finite target: " + s.name);
    if (!plan.scene.workspace.contains(s.target_pose.position)) {
      throw PlanInfeasible("target outside workspace bounds: " + s.name);
    }
    for (const std::string* id : {&s.object_id, &s.tool_id}) {
      if (!id->empty() && !plan.scene.find(*id)) {
        throw PlanInfeasible("substage references unknown object: " + *id);
      }
    }
    if (s.kind == SubstageKind::Grasp && !s.object_id.empty() &&
        !plan.scene.find(s.object_id)->graspable) {
      throw PlanInfeasible("grasp on non-graspable object: " + s.object_id);
    }
  }
  for (const auto& g : plan.goals) {
    if (!plan.scene.find(g.object) || (!g.reference.empty() && !plan.scene.find(g.reference))) {
      throw PlanInfeasible("goal references unknown object");
    }
  }
}

}  // namespace manifail
