#include "manifail/injector.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "manifail/errors.hpp"
#include "manifail/grammar.hpp"
#include "manifail/random.hpp"
#include "manifail/simulator.hpp"

namespace manifail {

namespace {

struct TaxonomyInfo {
  FailureTaxonomy taxonomy;
  std::string_view id;
  std::string_view option;
  FailureLevel level;
};

constexpr std::array<TaxonomyInfo, 6> kInfo{{
    {FailureTaxonomy::StepOmission, "step_omission", "Step omission.", FailureLevel::TaskPlanning},
    {FailureTaxonomy::WrongObject, "wrong_object", "Wrong target object.",
     FailureLevel::TaskPlanning},
    {FailureTaxonomy::PositionDeviation, "position_deviation", "Position deviation.",
     FailureLevel::MotionPlanning},
    {FailureTaxonomy::OrientationDeviation, "orientation_deviation", "Orientation deviation.",
     FailureLevel::MotionPlanning},
    {FailureTaxonomy::GraspingError, "grasping_error", "Grasping error.",
     FailureLevel::ExecutionControl},
    {FailureTaxonomy::TimingError, "timing_error", "Timing error.", FailureLevel::ExecutionControl},
}};

const TaxonomyInfo& info(FailureTaxonomy t) {
  for (const auto& i : kInfo) {
    if (i.taxonomy == t) return i;
  }
  throw InvalidArgument("unknown taxonomy");
}

// Magnitude ranges; all exceed the success tolerances.
constexpr double kDpMin = 2.0 * kPosTol;
constexpr double kDpMax = 10.0 * kPosTol;
constexpr double kDqMinDeg = 15.0;
constexpr double kDqMaxDeg = 60.0;
constexpr double kGripMax = kAttachThreshold - 0.1;

const SubstageTarget& substage_at(const TaskPlan& plan, int k) {
  if (k < 1 || k > static_cast<int>(plan.substages.size())) {
    throw InvalidArgument("substage index out of range");
  }
  return plan.substages[static_cast<std::size_t>(k - 1)];
}

std::vector<std::string> other_graspables(const TaskPlan& plan, const std::string& id) {
  std::vector<std::string> out;
  for (const auto& o : plan.scene.objects) {
    if (o.graspable && o.id != id) out.push_back(o.id);
  }
  return out;
}

bool compatible(const TaskPlan& plan, const SubstageTarget& s, FailureTaxonomy t) {
  switch (t) {
    case FailureTaxonomy::StepOmission: return s.sites.omittable;
    case FailureTaxonomy::WrongObject:
      return s.kind == SubstageKind::Grasp && !s.object_id.empty() &&
             !other_graspables(plan, s.object_id).empty();
    case FailureTaxonomy::PositionDeviation: return s.sites.position;
    case FailureTaxonomy::OrientationDeviation: return s.sites.orientation;
    case FailureTaxonomy::GraspingError: return s.kind == SubstageKind::Grasp;
    case FailureTaxonomy::TimingError: return s.sites.timing;
  }
  return false;
}

Position random_axis(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * kPi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

std::string correction_hint(const FailureRecord& r) {
  const std::string& name = r.substage_name;
  return std::visit(
      [&](const auto& p) -> std::string {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, OmittedSubstage>) {
          return "Perform the '" + name + "' substage before continuing.";
        } else if constexpr (std::is_same_v<P, WrongObjectPair>) {
          return "Interact with '" + p.original + "' instead of '" + p.replacement + "'.";
        } else if constexpr (std::is_same_v<P, PositionDelta>) {
          return "Move the end-effector back to the desired target position.";
        } else if constexpr (std::is_same_v<P, OrientationDelta>) {
          return "Rotate the end-effector back to the desired orientation.";
        } else if constexpr (std::is_same_v<P, GripperChange>) {
          return "Redo the grasp and close the gripper firmly.";
        } else {
          return p.dt < 0.0 ? "Wait for alignment before the '" + name + "' substage."
                            : "Act without delay at the '" + name + "' substage.";
        }
      },
      r.payload);
}

// Digest of the payload numbers so records differing only in magnitude get
// distinct ids.
std::string payload_digest(const FailurePayload& payload) {
  std::string out;
  auto num = [&](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.9g,", v);
    out += b;
  };
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, OmittedSubstage>) {
          out += p.substage.name;
        } else if constexpr (std::is_same_v<P, WrongObjectPair>) {
          out += p.original + ">" + p.replacement + ",";
          num(p.shift.x), num(p.shift.y), num(p.shift.z);
        } else if constexpr (std::is_same_v<P, PositionDelta>) {
          num(p.dp.x), num(p.dp.y), num(p.dp.z);
        } else if constexpr (std::is_same_v<P, OrientationDelta>) {
          num(p.dq.w()), num(p.dq.x()), num(p.dq.y()), num(p.dq.z());
        } else if constexpr (std::is_same_v<P, GripperChange>) {
          num(p.nominal), num(p.actual);
        } else {
          num(p.nominal_time), num(p.dt);
        }
      },
      payload);
  return out;
}

}  // namespace

std::string_view to_string(FailureTaxonomy t) { return info(t).id; }

FailureTaxonomy taxonomy_from_string(std::string_view s) {
  for (const auto& i : kInfo) {
    if (i.id == s || i.option == s) return i.taxonomy;
  }
  throw InvalidArgument("unknown failure taxonomy: " + std::string(s));
}

std::string_view option_string(FailureTaxonomy t) { return info(t).option; }

FailureLevel level_of(FailureTaxonomy t) { return info(t).level; }

std::string_view to_string(FailureLevel l) {
  switch (l) {
    case FailureLevel::TaskPlanning: return "task_planning";
    case FailureLevel::MotionPlanning: return "motion_planning";
    case FailureLevel::ExecutionControl: return "execution_control";
  }
  return "unknown";
}

std::string_view axis_phrase(int axis, double sign) {
  static constexpr std::array<std::array<std::string_view, 2>, 3> kPhrases{{
      {"in front of", "behind"},
      {"to the left of", "to the right of"},
      {"above", "below"},
  }};
  if (axis < 0 || axis > 2) throw InvalidArgument("axis must be 0, 1 or 2");
  return kPhrases[static_cast<std::size_t>(axis)][sign >= 0.0 ? 0 : 1];
}

std::vector<int> applicable_substages(const TaskPlan& plan, FailureTaxonomy t) {
  std::vector<int> out;
  for (const auto& s : plan.substages) {
    if (compatible(plan, s, t)) out.push_back(s.index);
  }
  return out;
}

std::vector<FailureTaxonomy> applicable_taxonomies(const TaskPlan& plan) {
  std::vector<FailureTaxonomy> out;
  for (FailureTaxonomy t : kAllTaxonomies) {
    if (!applicable_substages(plan, t).empty()) out.push_back(t);
  }
  return out;
}

FailureSpec sample_failure_spec(const TaskPlan& plan, std::optional<FailureTaxonomy> taxonomy,
                                std::uint64_t seed) {
  Rng rng(derive_seed(seed, {hash_string("inject"), hash_string(plan.task_id)}));
  FailureTaxonomy tax;
  if (taxonomy) {
    tax = *taxonomy;
  } else {
    const auto options = applicable_taxonomies(plan);
    if (options.empty()) throw NotApplicable("no failure taxonomy applies to " + plan.task_id);
    tax = options[rng.index(options.size())];
  }
  const auto sites = applicable_substages(plan, tax);
  if (sites.empty()) {
    throw NotApplicable(std::string(to_string(tax)) + " is not applicable to " + plan.task_id);
  }
  FailureSpec spec;
  spec.taxonomy = tax;
  spec.substage = sites[rng.index(sites.size())];
  const SubstageTarget& s = substage_at(plan, spec.substage);
  switch (tax) {
    case FailureTaxonomy::StepOmission:
      spec.payload = OmittedSubstage{s};
      break;
    case FailureTaxonomy::WrongObject: {
      const auto others = other_graspables(plan, s.object_id);
      const std::string& pick = others[rng.index(others.size())];
      const Position shift =
          plan.scene.find(pick)->pose.position - plan.scene.find(s.object_id)->pose.position;
      spec.payload = WrongObjectPair{s.object_id, pick, shift};
      break;
    }
    case FailureTaxonomy::PositionDeviation: {
      Position dp;
      for (double* c : {&dp.x, &dp.y, &dp.z}) *c = rng.sign() * rng.uniform(kDpMin, kDpMax);
      spec.payload = PositionDelta{dp};
      break;
    }
    case FailureTaxonomy::OrientationDeviation: {
      const Position axis = random_axis(rng);
      const double angle = deg_to_rad(rng.uniform(kDqMinDeg, kDqMaxDeg));
      spec.payload = OrientationDelta{Orientation::from_axis_angle(axis, angle)};
      break;
    }
    case FailureTaxonomy::GraspingError:
      spec.payload = GripperChange{s.gripper, rng.uniform(0.0, kGripMax)};
      break;
    case FailureTaxonomy::TimingError: {
      const double dt = rng.sign() * rng.uniform(1.0, 2.0) * s.duration;
      spec.payload = TimingShift{s.nominal_time, dt};
      break;
    }
  }
  return spec;
}

Injection inject(const TaskPlan& plan, const FailureSpec& spec) {
  const SubstageTarget& s = substage_at(plan, spec.substage);
  if (!compatible(plan, s, spec.taxonomy)) {
    throw NotApplicable(std::string(to_string(spec.taxonomy)) + " is not applicable at substage " +
                        s.name);
  }
  const auto payload_matches = [&]() {
    switch (spec.taxonomy) {
      case FailureTaxonomy::StepOmission: return std::holds_alternative<OmittedSubstage>(spec.payload);
      case FailureTaxonomy::WrongObject: return std::holds_alternative<WrongObjectPair>(spec.payload);
      case FailureTaxonomy::PositionDeviation: return std::holds_alternative<PositionDelta>(spec.payload);
      case FailureTaxonomy::OrientationDeviation:
        return std::holds_alternative<OrientationDelta>(spec.payload);
      case FailureTaxonomy::GraspingError: return std::holds_alternative<GripperChange>(spec.payload);
      case FailureTaxonomy::TimingError: return std::holds_alternative<TimingShift>(spec.payload);
    }
    return false;
  };
  if (!payload_matches()) throw InvalidArgument("payload does not match taxonomy");

  Injection out;
  out.substages = plan.substages;
  const auto pos = static_cast<std::size_t>(spec.substage - 1);
  SubstageTarget& t = out.substages[pos];
  FailureRecord& r = out.record;
  r.task_id = plan.task_id;
  r.taxonomy = spec.taxonomy;
  r.substage = spec.substage;
  r.substage_name = s.name;
  r.payload = spec.payload;

  if (std::holds_alternative<OmittedSubstage>(spec.payload)) {
    r.payload = OmittedSubstage{s};
    out.substages.erase(out.substages.begin() + static_cast<std::ptrdiff_t>(pos));
  } else if (const auto* p = std::get_if<WrongObjectPair>(&spec.payload)) {
    if (p->original != s.object_id || p->replacement == p->original ||
        !plan.scene.find(p->replacement)) {
      throw InvalidArgument("wrong-object pair inconsistent with plan");
    }
    t.object_id = p->replacement;
    t.target_pose.position = t.target_pose.position + p->shift;
  } else if (const auto* p = std::get_if<PositionDelta>(&spec.payload)) {
    t.target_pose.position = apply_position_perturbation(t.target_pose.position, p->dp);
    r.perturbed_pose = t.target_pose;
  } else if (const auto* p = std::get_if<OrientationDelta>(&spec.payload)) {
    t.target_pose.orientation = apply_orientation_perturbation(t.target_pose.orientation, p->dq);
    r.perturbed_pose = t.target_pose;
  } else if (const auto* p = std::get_if<GripperChange>(&spec.payload)) {
    if (!(p->actual < p->nominal) || p->actual < 0.0) {
      throw InvalidArgument("grasping error requires 0 <= actual closure < nominal");
    }
    t.gripper = p->actual;
  } else if (const auto* p = std::get_if<TimingShift>(&spec.payload)) {
    if (p->dt == 0.0 || !std::isfinite(p->dt)) throw InvalidArgument("timing shift must be nonzero");
    t.nominal_time = s.nominal_time + p->dt;
  }

  r.description = describe_failure(r);
  r.correction_hint = correction_hint(r);
  char id[128];
  std::snprintf(id, sizeof id, "%s-%llu-%s-k%d-%08llx", plan.task_id.c_str(),
                static_cast<unsigned long long>(plan.seed), std::string(to_string(r.taxonomy)).c_str(),
                r.substage,
                static_cast<unsigned long long>(hash_string(r.description + payload_digest(r.payload)) & 0xffffffffULL));
  r.id = id;
  return out;
}

std::string describe_failure(const FailureRecord& r) {
  const std::string sub = "'" + r.substage_name + "'";
  return std::visit(
      [&](const auto& p) -> std::string {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, OmittedSubstage>) {
          return "Step omission: the substage " + sub +
                 " was skipped, so the plan was left incomplete and the task could not finish.";
        } else if constexpr (std::is_same_v<P, WrongObjectPair>) {
          return "Wrong target object during " + sub + ": the robot went for '" + p.replacement +
                 "' instead of '" + p.original + "'.";
        } else if constexpr (std::is_same_v<P, PositionDelta>) {
          std::vector<std::string> parts;
          const std::array<double, 3> c{p.dp.x, p.dp.y, p.dp.z};
          for (int a = 0; a < 3; ++a) {
            const double v = c[static_cast<std::size_t>(a)];
            if (v != 0.0) parts.push_back(std::string(axis_phrase(a, v)) + " the desired target position");
          }
          std::string text = "Position deviation during " + sub + ": the end-effector is ";
          if (parts.empty()) return text + "at the desired target position.";
          for (std::size_t i = 0; i < parts.size(); ++i) {
            if (i > 0) text += i + 1 == parts.size() ? " and " : ", ";
            text += parts[i];
          }
          return text + ".";
        } else if constexpr (std::is_same_v<P, OrientationDelta>) {
          return "Orientation deviation during " + sub + ": the end-effector is rotated " +
                 rotation_phrase(dominant_rotation(p.dq)) + " away from the desired orientation.";
        } else if constexpr (std::is_same_v<P, GripperChange>) {
          return "Grasping error during " + sub +
                 ": the gripper did not close firmly enough, so the object was never held.";
        } else {
          return "Timing error during " + sub + ": the substage was executed too " +
                 (p.dt < 0.0 ? "early" : "late") + ", out of step with the rest of the motion.";
        }
      },
      r.payload);
}

std::vector<SubstageTarget> invert(const std::vector<SubstageTarget>& perturbed,
                                   const FailureRecord& record) {
  std::vector<SubstageTarget> out = perturbed;
  if (const auto* p = std::get_if<OmittedSubstage>(&record.payload)) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const SubstageTarget& s) { return s.index > p->substage.index; });
    out.insert(it, p->substage);
    return out;
  }
  auto it = std::find_if(out.begin(), out.end(),
                         [&](const SubstageTarget& s) { return s.index == record.substage; });
  if (it == out.end()) throw InvalidArgument("perturbed plan lacks the failed substage");
  SubstageTarget& t = *it;
  if (const auto* p = std::get_if<WrongObjectPair>(&record.payload)) {
    t.object_id = p->original;
    t.target_pose.position = t.target_pose.position - p->shift;
  } else if (const auto* p = std::get_if<PositionDelta>(&record.payload)) {
    t.target_pose.position = t.target_pose.position - p->dp;
  } else if (const auto* p = std::get_if<OrientationDelta>(&record.payload)) {
    t.target_pose.orientation = quat_mul(p->dq.inverse(), t.target_pose.orientation);
  } else if (const auto* p = std::get_if<GripperChange>(&record.payload)) {
    t.gripper = p->nominal;
  } else if (const auto* p = std::get_if<TimingShift>(&record.payload)) {
    t.nominal_time = p->nominal_time;
  }
  return out;
}

}  // namespace manifail
