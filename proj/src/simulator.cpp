#include "manifail/simulator.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "manifail/errors.hpp"

namespace manifail {

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::Failure: return "failure";
    case Outcome::InProgress: return "in-progress";
  }
  return "unknown";
}

Outcome outcome_from_string(std::string_view s) {
  for (Outcome o : {Outcome::Success, Outcome::Failure, Outcome::InProgress}) {
    if (to_string(o) == s) return o;
  }
  throw InvalidArgument("unknown outcome: " + std::string(s));
}

namespace {

constexpr double kTimeEps = 1e-9;
const std::string kEe = "@ee";

bool supports(ObjectKind k) {
  switch (k) {
    case ObjectKind::Disc:
    case ObjectKind::Cube:
    case ObjectKind::Cup:
    case ObjectKind::Box:
    case ObjectKind::Receptacle:
    case ObjectKind::Shelf:
      return true;
    default:
      return false;
  }
}

// One interpolation leg of the end effector, in world or disc frame.
struct Segment {
  double start{0.0};
  double duration{0.0};
  Pose from;
  Pose to;
  double g0{0.0};
  double g1{0.0};
  bool disc{false};

  double progress(double t) const {
    if (duration <= 0.0) return 1.0;
    const double s = (t - start) / duration;
    if (s >= 1.0 - kTimeEps) return 1.0;
    return std::clamp(s, 0.0, 1.0);
  }
};

struct ObjState {
  std::string parent;  // "" world, kEe end effector, else an object id
  Pose local;
  bool contact{false};  // attached by a push rather than a grasp
};

class Episode {
 public:
  Episode(const TaskPlan& plan, const std::vector<SubstageTarget>& subs)
      : plan_(plan), subs_(subs) {
    spin_ = plan.scene.spin_speed;
    for (const auto& o : plan.scene.objects) {
      if (o.kind == ObjectKind::Disc) {
        disc_id_ = o.id;
        disc_center_ = o.pose.position;
        disc_q0_ = o.pose.orientation;
      }
    }
    for (const auto& o : plan.scene.objects) {
      ObjState st;
      st.parent = o.parent;
      st.local = o.parent.empty() ? o.pose
                                  : compose(inverse(plan.scene.find(o.parent)->pose), o.pose);
      state_[o.id] = st;
    }
    seg_.from = seg_.to = plan.home;
  }

  std::vector<Frame> run(double rate, double horizon) {
    const auto n_max = static_cast<long>(std::floor(horizon * rate + 1e-6));
    std::vector<Frame> frames;
    frames.reserve(static_cast<std::size_t>(n_max) + 1);
    double prev_g = seg_.g0;
    std::map<std::string, Pose> prev_world;
    for (long n = 0; n <= n_max; ++n) {
      const double t = static_cast<double>(n) / rate;
      const int a = active_at(t);
      if (a != active_) {
        if (active_ >= 0) {
          end_contacts(std::min(active_sub()->nominal_time,
                                subs_[static_cast<std::size_t>(a)].start_time()));
        }
        activate(a);
      }
      const Pose ee = ee_pose(seg_, t);
      const double g = seg_.g0 + (seg_.g1 - seg_.g0) * seg_.progress(t);

      if (n > 0) update_attachments(t, ee, prev_g, g, prev_world);

      Frame f;
      f.time = t;
      f.ee_pose = ee;
      f.gripper = g;
      f.active_substage = a >= 0 ? subs_[static_cast<std::size_t>(a)].index : subs_.front().index;
      f.object_poses = world_poses(t, ee);
      prev_world = f.object_poses;
      prev_g = g;
      frames.push_back(std::move(f));
    }
    return frames;
  }

 private:
  int active_at(double t) const {
    int best = -1;
    for (std::size_t i = 0; i < subs_.size(); ++i) {
      if (subs_[i].start_time() <= t + kTimeEps) best = static_cast<int>(i);
    }
    return best;
  }

  Pose disc_to_world(const Pose& p, double t) const {
    const Orientation r = Orientation::about_z(spin_ * t);
    return {disc_center_ + r.rotate(p.position), quat_mul(r, p.orientation)};
  }

  Pose world_to_disc(const Pose& p, double t) const {
    const Orientation r = Orientation::about_z(-spin_ * t);
    return {r.rotate(p.position - disc_center_), quat_mul(r, p.orientation)};
  }

  Pose ee_pose(const Segment& s, double t) const {
    const double u = s.progress(t);
    const Pose local{lerp(s.from.position, s.to.position, u),
                     slerp(s.from.orientation, s.to.orientation, u)};
    return s.disc ? disc_to_world(local, t) : local;
  }

  void activate(int a) {
    const SubstageTarget& sub = subs_[static_cast<std::size_t>(a)];
    const double ts = sub.start_time();
    const Pose start_world = ee_pose(seg_, ts);
    const double g_start = seg_.g0 + (seg_.g1 - seg_.g0) * seg_.progress(ts);
    Segment next;
    next.start = ts;
    next.duration = sub.duration;
    next.disc = sub.disc_frame && !disc_id_.empty();
    next.from = next.disc ? world_to_disc(start_world, ts) : start_world;
    if (sub.hold_pose) {
      next.to = next.from;
    } else {
      next.to = next.disc ? world_to_disc(sub.target_pose, sub.nominal_time) : sub.target_pose;
    }
    next.g0 = g_start;
    next.g1 = sub.gripper;
    seg_ = next;
    active_ = a;
  }

  const SubstageTarget* active_sub() const {
    return active_ >= 0 ? &subs_[static_cast<std::size_t>(active_)] : nullptr;
  }

  Pose world_of(const std::string& id, double t, const Pose& ee,
                std::map<std::string, Pose>& memo) const {
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    Pose w;
    if (id == disc_id_) {
      w = {disc_center_, quat_mul(Orientation::about_z(spin_ * t), disc_q0_)};
    } else {
      const ObjState& st = state_.at(id);
      if (st.parent.empty()) {
        w = st.local;
      } else if (st.parent == kEe) {
        w = compose(ee, st.local);
      } else {
        w = compose(world_of(st.parent, t, ee, memo), st.local);
      }
    }
    memo[id] = w;
    return w;
  }

  std::map<std::string, Pose> world_poses(double t, const Pose& ee) const {
    std::map<std::string, Pose> memo;
    for (const auto& o : plan_.scene.objects) world_of(o.id, t, ee, memo);
    return memo;
  }

  bool descends_from(const std::string& id, const std::string& ancestor) const {
    std::string cur = id;
    for (int depth = 0; depth < 64 && !cur.empty() && cur != kEe; ++depth) {
      if (cur == ancestor) return true;
      cur = state_.at(cur).parent;
    }
    return false;
  }

  bool carried_by_ee(const std::string& id) const {
    std::string cur = id;
    for (int depth = 0; depth < 64 && !cur.empty(); ++depth) {
      if (cur == kEe) return true;
      cur = state_.at(cur).parent;
    }
    return false;
  }

  // Re-parents a released object onto whatever it rests on, else freezes it.
  void release(const std::string& id, const Pose& world, std::map<std::string, Pose>& now) {
    const SceneObject& obj = *plan_.scene.find(id);
    ObjState& st = state_[id];
    st.contact = false;
    std::string parent;
    if (obj.kind == ObjectKind::Knob && !obj.parent.empty()) {
      parent = obj.parent;
    } else if (obj.kind != ObjectKind::Door) {
      double best = 1e300;
      for (const auto& s : plan_.scene.objects) {
        if (s.id == id || !supports(s.kind) || descends_from(s.id, id) || carried_by_ee(s.id)) {
          continue;
        }
        const Position local = compose(inverse(now.at(s.id)), world).position;
        const double reach = s.extent + kGraspMargin;
        const bool lateral = s.kind == ObjectKind::Disc
                                 ? std::hypot(local.x, local.y) <= reach
                                 : std::abs(local.x) <= reach && std::abs(local.y) <= reach;
        const bool vertical =
            local.z >= -reach && local.z <= s.extent + obj.extent + 0.03;
        if (lateral && vertical && local.norm() < best) {
          best = local.norm();
          parent = s.id;
        }
      }
    }
    st.parent = parent;
    st.local = parent.empty() ? world : compose(inverse(now.at(parent)), world);
  }

  bool inside(const SceneObject& receptacle, const Pose& rec_world, const Position& p) const {
    const Position l = compose(inverse(rec_world), Pose{p, {}}).position;
    const double e = receptacle.extent;
    return std::abs(l.x) <= e && std::abs(l.y) <= e && l.z >= 0.0 && l.z <= 2.0 * e;
  }

  bool door_closed(const std::string& door_id, const std::map<std::string, Pose>& world) const {
    const SceneObject* door = plan_.scene.find(door_id);
    if (!door || !door->closed_position) return false;
    return distance(world.at(door_id).position, *door->closed_position) <= kDoorClosedBand;
  }

  // Drops pushed objects where the end effector was at time `tc`.
  void end_contacts(double tc) {
    const Pose ee = ee_pose(seg_, tc);
    std::map<std::string, Pose> now = world_poses(tc, ee);
    for (const auto& o : plan_.scene.objects) {
      if (state_[o.id].parent == kEe && state_[o.id].contact) release(o.id, now.at(o.id), now);
    }
  }

  void update_attachments(double t, const Pose& ee, double prev_g, double g,
                          const std::map<std::string, Pose>& prev_world) {
    const SubstageTarget* sub = active_sub();
    const bool in_window = sub && t <= sub->nominal_time + kTimeEps;
    if (sub && !in_window) end_contacts(sub->nominal_time);
    // Placement of everything at t before this frame's attachment changes.
    std::map<std::string, Pose> now = world_poses(t, ee);

    for (const auto& o : plan_.scene.objects) {
      ObjState& st = state_[o.id];
      if (st.parent == kEe && !st.contact && g < kAttachThreshold) release(o.id, now.at(o.id), now);
    }

    if (sub && in_window && !sub->object_id.empty()) {
      const SceneObject* obj = plan_.scene.find(sub->object_id);
      ObjState& st = state_[obj->id];
      const Pose& ow = now.at(obj->id);
      const bool near = distance(ee.position, ow.position) <= obj->extent + kGraspMargin;
      if (sub->kind == SubstageKind::Grasp && obj->graspable && st.parent != kEe &&
          prev_g < kAttachThreshold && g >= kAttachThreshold && near) {
        st = {kEe, compose(inverse(ee), ow), false};
      } else if (sub->kind == SubstageKind::Push && st.parent != kEe && near) {
        const bool tool_ok = sub->tool_id.empty() || (state_[sub->tool_id].parent == kEe &&
                                                      !state_[sub->tool_id].contact);
        if (tool_ok) st = {kEe, compose(inverse(ee), ow), true};
      }
    }

    // A closed door blocks carrying anything into its receptacle.
    std::map<std::string, Pose> memo;
    for (const auto& o : plan_.scene.objects) {
      ObjState& st = state_[o.id];
      if (st.parent != kEe) continue;
      const Position next = compose(ee, st.local).position;
      for (const auto& r : plan_.scene.objects) {
        if (r.gate_door.empty() || !door_closed(r.gate_door, prev_world)) continue;
        const Pose& rw = prev_world.at(r.id);
        if (inside(r, rw, next) && !inside(r, rw, prev_world.at(o.id).position)) {
          st = {"", prev_world.at(o.id), false};
          break;
        }
      }
    }
  }

  const TaskPlan& plan_;
  const std::vector<SubstageTarget>& subs_;
  double spin_{0.0};
  std::string disc_id_;
  Position disc_center_;
  Orientation disc_q0_;
  std::map<std::string, ObjState> state_;
  Segment seg_;
  int active_{-1};
};

}  // namespace

Trajectory run_episode(const TaskPlan& plan,
                       const std::optional<std::vector<SubstageTarget>>& overrides,
                       double frame_rate, std::uint64_t seed) {
  if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) {
    throw InvalidArgument("frame rate must be positive");
  }
  validate_plan(plan);
  const std::vector<SubstageTarget>& subs = overrides ? *overrides : plan.substages;
  if (subs.empty()) throw PlanInfeasible("no substages to execute");
  const int n = static_cast<int>(plan.substages.size());
  int last = 0;
  double horizon = plan.horizon;
  for (const auto& s : subs) {
    if (s.index < 1 || s.index > n || s.index <= last) {
      throw InvalidArgument("override substage index out of range or out of order");
    }
    last = s.index;
    if (!(s.duration > 0.0)) throw PlanInfeasible("substage has non-positive duration: " + s.name);
    if (!std::isfinite(s.nominal_time)) throw InvalidArgument("non-finite substage time");
    if (!s.target_pose.position.finite()) throw InvalidArgument("non-finite substage target");
    if (!plan.scene.workspace.contains(s.target_pose.position)) {
      throw PlanInfeasible("target outside workspace bounds: " + s.name);
    }
    horizon = std::max(horizon, s.nominal_time);
  }

  Trajectory tr;
  tr.plan = plan;
  tr.executed = subs;
  tr.frame_rate = frame_rate;
  tr.episode_seed = seed;
  Episode ep(plan, tr.executed);
  tr.frames = ep.run(frame_rate, horizon);
  tr.duration = tr.frames.back().time;
  tr.outcome = success_predicate(plan, tr.frames.back()) ? Outcome::Success : Outcome::Failure;
  return tr;
}

std::vector<std::pair<double, double>> goal_errors(const TaskPlan& plan, const Frame& frame) {
  std::vector<std::pair<double, double>> out;
  for (const auto& g : plan.goals) {
    const Pose& obj = frame.object_poses.at(g.object);
    const Pose rel = g.reference.empty() ? obj
                                         : compose(inverse(frame.object_poses.at(g.reference)), obj);
    out.emplace_back(distance(rel.position, g.relative.position),
                     angular_distance(rel.orientation, g.relative.orientation));
  }
  return out;
}

bool success_predicate(const TaskPlan& plan, const Frame& final_frame) {
  const auto errs = goal_errors(plan, final_frame);
  for (std::size_t i = 0; i < errs.size(); ++i) {
    if (errs[i].first > kPosTol) return false;
    if (plan.goals[i].check_orientation && errs[i].second > kAngTol) return false;
  }
  return true;
}

Trajectory segment(const Trajectory& trajectory, double t_pause) {
  // A pause that falls between the last frame and the next one is still
  // inside the recording, so re-segmenting a segment is idempotent.
  if (!(t_pause > 0.0) || t_pause >= trajectory.duration + 1.0 / trajectory.frame_rate - kTimeEps) {
    throw InvalidArgument("pause time outside the recording");
  }
  Trajectory out = trajectory;
  out.frames.clear();
  for (const auto& f : trajectory.frames) {
    if (f.time <= t_pause + kTimeEps) out.frames.push_back(f);
  }
  out.outcome = Outcome::InProgress;
  out.duration = out.frames.back().time;
  return out;
}

const Frame& frame_at(const Trajectory& trajectory, double t) {
  if (trajectory.frames.empty()) throw InvalidArgument("trajectory has no frames");
  const Frame* best = &trajectory.frames.front();
  for (const auto& f : trajectory.frames) {
    if (std::abs(f.time - t) < std::abs(best->time - t)) best = &f;
  }
  return *best;
}

}  // namespace manifail
