#pragma once

// Task catalog: sixteen tabletop manipulation tasks, each built from a seed
// into a scene plus an expert substage plan.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "manifail/geometry.hpp"

namespace manifail {

enum class Category { ShortHorizon, MediumHorizon, LongHorizon, Dynamic };

enum class ObjectKind {
  Cube,
  Peg,
  Cylinder,
  Tool,
  Charger,
  Receptacle,
  Cup,
  Spoon,
  Door,
  Knob,
  TargetRegion,
  Box,
  Shelf,
  Disc,
};

// Move: pure arm motion. Grasp: closes the gripper on the designated object.
// Release: opens the gripper while holding the arm still. Push: moves the
// designated object by contact (optionally through a held tool).
enum class SubstageKind { Move, Grasp, Release, Push };

std::string_view to_string(Category c);
std::string_view to_string(ObjectKind k);
std::string_view to_string(SubstageKind k);
Category category_from_string(std::string_view s);
ObjectKind object_kind_from_string(std::string_view s);
SubstageKind substage_kind_from_string(std::string_view s);

struct SceneObject {
  std::string id;
  ObjectKind kind{ObjectKind::Cube};
  Pose pose;
  bool graspable{false};
  double extent{0.02};  // characteristic half-size, meters
  std::string parent;   // object this one rests on or is mounted to; empty = world
  // Doors: world position of the handle when the door is closed.
  std::optional<Position> closed_position;
  // Receptacles: door that must be open for objects to be carried inside.
  std::string gate_door;

  bool operator==(const SceneObject&) const = default;
};

struct Bounds {
  Position min;
  Position max;

  bool contains(const Position& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
           p.z <= max.z;
  }
  bool operator==(const Bounds&) const = default;
};

struct Scene {
  std::vector<SceneObject> objects;
  Bounds workspace;
  double spin_speed{0.0};  // rad/s of the disc, if any
  std::string variant;     // background/viewpoint tag; no rendering depends on it

  const SceneObject* find(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;
  bool operator==(const Scene&) const = default;
};

// Which failure injections a substage supports. Fixed per substage role in
// the catalog so that every injected episode actually fails.
struct FaultSites {
  bool omittable{false};
  bool position{false};
  bool orientation{false};
  bool timing{false};

  bool operator==(const FaultSites&) const = default;
};

struct SubstageTarget {
  int index{1};
  std::string name;
  SubstageKind kind{SubstageKind::Move};
  Pose target_pose;
  double gripper{0.0};
  std::string object_id;  // empty when the substage designates no object
  std::string tool_id;    // Push only: tool that must be held for contact
  double nominal_time{0.0};
  double duration{1.0};
  bool hold_pose{false};   // arm stays where it is (target_pose is informational)
  bool disc_frame{false};  // target tracks the spinning disc
  FaultSites sites;

  double start_time() const { return nominal_time - duration; }
  bool operator==(const SubstageTarget&) const = default;
};

// Success condition: `object` must sit at `relative` in the frame of
// `reference` (world when empty).
struct Goal {
  std::string object;
  std::string reference;
  Pose relative;
  bool check_orientation{true};

  bool operator==(const Goal&) const = default;
};

struct TaskPlan {
  std::string task_id;
  Category category{Category::ShortHorizon};
  std::string instruction;
  std::uint64_t seed{0};
  std::vector<SubstageTarget> substages;
  Scene scene;
  std::vector<Goal> goals;
  Pose home;
  double horizon{0.0};

  bool operator==(const TaskPlan&) const = default;
};

struct CatalogEntry {
  std::string_view id;
  Category category;
  std::string_view instruction;
  bool real_world_analog;  // the tasks only recorded on hardware
};

// Gripper pointing straight down.
Orientation gripper_down(double yaw = 0.0);

const std::vector<CatalogEntry>& task_catalog();
std::vector<std::string> task_ids();
const CatalogEntry& catalog_entry(std::string_view task_id);
Category category_of(std::string_view task_id);

TaskPlan build_task(std::string_view task_id, std::uint64_t seed);

const std::vector<SubstageTarget>& expert_plan(const TaskPlan& plan);

// Every distinct substage name across the catalog, sorted.
std::vector<std::string> all_substage_names();

// Structural checks on a plan; throws PlanInfeasible.
void validate_plan(const TaskPlan& plan);

}  // namespace manifail
