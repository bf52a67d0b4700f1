#include <algorithm>
#include <map>

#include "doctest.h"
#include "manifail/errors.hpp"
#include "manifail/injector.hpp"
#include "manifail/serialize.hpp"
#include "manifail/simulator.hpp"

using namespace manifail;

namespace {

// Fields of a substage that differ from the expert one.
std::vector<std::string> diff_fields(const SubstageTarget& a, const SubstageTarget& b) {
  std::vector<std::string> d;
  if (a.target_pose.position != b.target_pose.position) d.push_back("position");
  if (a.target_pose.orientation != b.target_pose.orientation) d.push_back("orientation");
  if (a.gripper != b.gripper) d.push_back("gripper");
  if (a.object_id != b.object_id) d.push_back("object");
  if (a.nominal_time != b.nominal_time) d.push_back("time");
  if (a.name != b.name || a.kind != b.kind || a.index != b.index || a.duration != b.duration ||
      a.tool_id != b.tool_id || a.hold_pose != b.hold_pose || a.disc_frame != b.disc_frame) {
    d.push_back("other");
  }
  return d;
}

bool subset(const std::vector<std::string>& got, std::initializer_list<const char*> allowed) {
  for (const auto& g : got) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return g == a; }) ==
        allowed.end()) {
      return false;
    }
  }
  return !got.empty();
}

}  // namespace

TEST_CASE("taxonomy names and option strings") {
  for (auto t : kAllTaxonomies) CHECK(taxonomy_from_string(to_string(t)) == t);
  CHECK(option_string(FailureTaxonomy::PositionDeviation) == "Position deviation.");
  CHECK(option_string(FailureTaxonomy::WrongObject) == "Wrong target object.");
  CHECK(level_of(FailureTaxonomy::StepOmission) == FailureLevel::TaskPlanning);
  CHECK(level_of(FailureTaxonomy::GraspingError) == FailureLevel::ExecutionControl);
  CHECK_THROWS_AS(taxonomy_from_string("bogus"), InvalidArgument);
}

TEST_CASE("grasping error does not apply to PushCube") {
  const TaskPlan p = build_task("PushCube", 0);
  CHECK(applicable_substages(p, FailureTaxonomy::GraspingError).empty());
  CHECK_THROWS_AS(sample_failure_spec(p, FailureTaxonomy::GraspingError, 1), NotApplicable);
}

TEST_CASE("failure specs are deterministic in the seed") {
  const TaskPlan p = build_task("PickCube", 0);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto a = inject(p, sample_failure_spec(p, FailureTaxonomy::PositionDeviation, s));
    const auto b = inject(p, sample_failure_spec(p, FailureTaxonomy::PositionDeviation, s));
    CHECK(a.record == b.record);
  }
}

TEST_CASE("unspecified taxonomy is uniform over the applicable ones") {
  const TaskPlan p = build_task("StackCube", 0);
  const auto applicable = applicable_taxonomies(p);
  REQUIRE(applicable.size() == kAllTaxonomies.size());
  std::map<FailureTaxonomy, int> counts;
  const int n = 6000;
  for (int s = 0; s < n; ++s) counts[sample_failure_spec(p, std::nullopt, s).taxonomy]++;
  for (auto t : applicable) {
    CAPTURE(to_string(t));
    CHECK(std::abs(counts[t] / double(n) - 1.0 / applicable.size()) <= 0.03);
  }
}

TEST_CASE("position deviation adds dp to the target") {
  const TaskPlan p = build_task("PickCube", 0);
  FailureSpec spec{FailureTaxonomy::PositionDeviation, 3, PositionDelta{{0.05, 0, 0}}};
  const Injection inj = inject(p, spec);
  REQUIRE(inj.record.perturbed_pose.has_value());
  CHECK(inj.record.perturbed_pose->position.x ==
        doctest::Approx(p.substages[2].target_pose.position.x + 0.05).epsilon(1e-12));
  CHECK(inj.record.substage_name == "grasp");
}

TEST_CASE("descriptions use the axis convention") {
  const TaskPlan p = build_task("PickCube", 0);
  auto desc = [&](Position dp) {
    return inject(p, {FailureTaxonomy::PositionDeviation, 3, PositionDelta{dp}}).record.description;
  };
  CHECK(desc({0.05, 0, 0}).find("in front of the desired target position") != std::string::npos);
  CHECK(desc({0, -0.04, 0}).find("to the right of the desired target position") !=
        std::string::npos);
  const auto omit = inject(p, {FailureTaxonomy::StepOmission, 3, OmittedSubstage{}});
  CHECK(omit.record.description.find("grasp") != std::string::npos);
}

TEST_CASE("a weak grasp fails the episode") {
  const TaskPlan p = build_task("PickCube", 9);
  const auto inj = inject(p, {FailureTaxonomy::GraspingError, 3, GripperChange{1.0, 0.2}});
  CHECK(run_episode(p, inj.substages).outcome == Outcome::Failure);
}

TEST_CASE("every record satisfies the formal checks for its taxonomy") {
  std::map<FailureTaxonomy, int> checked;
  for (const auto& id : task_ids()) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      const TaskPlan p = build_task(id, seed);
      for (auto tax : applicable_taxonomies(p)) {
        CAPTURE(id);
        CAPTURE(to_string(tax));
        const FailureSpec spec = sample_failure_spec(p, tax, seed * 7 + 1);
        const Injection inj = inject(p, spec);
        const FailureRecord& r = inj.record;
        const int k = r.substage;
        const auto& orig = p.substages[k - 1];
        CHECK(r.taxonomy == tax);
        if (tax == FailureTaxonomy::StepOmission) {
          REQUIRE(inj.substages.size() == p.substages.size() - 1);
          std::vector<SubstageTarget> expect = p.substages;
          expect.erase(expect.begin() + (k - 1));
          CHECK(inj.substages == expect);
        } else {
          REQUIRE(inj.substages.size() == p.substages.size());
          for (std::size_t i = 0; i < p.substages.size(); ++i) {
            if (int(i) + 1 != k) CHECK(inj.substages[i] == p.substages[i]);
          }
          const auto& got = inj.substages[k - 1];
          const auto d = diff_fields(orig, got);
          switch (tax) {
            case FailureTaxonomy::PositionDeviation: {
              CHECK(d == std::vector<std::string>{"position"});
              const Position dp = std::get<PositionDelta>(r.payload).dp;
              CHECK(distance(got.target_pose.position, orig.target_pose.position + dp) <= 1e-9);
              for (double c : {dp.x, dp.y, dp.z}) {
                CHECK((c == 0.0 || (std::abs(c) >= 2 * kPosTol - 1e-12 &&
                                    std::abs(c) <= 10 * kPosTol + 1e-12)));
              }
              break;
            }
            case FailureTaxonomy::OrientationDeviation: {
              CHECK(d == std::vector<std::string>{"orientation"});
              const Orientation dq = std::get<OrientationDelta>(r.payload).dq;
              CHECK(angular_distance(got.target_pose.orientation,
                                     quat_mul(dq, orig.target_pose.orientation)) <= 1e-9);
              CHECK(dq.angle() >= deg_to_rad(15) - 1e-9);
              CHECK(dq.angle() <= deg_to_rad(60) + 1e-9);
              break;
            }
            case FailureTaxonomy::GraspingError: {
              CHECK(d == std::vector<std::string>{"gripper"});
              const auto g = std::get<GripperChange>(r.payload);
              CHECK(g.actual < g.nominal);
              CHECK(g.actual <= kAttachThreshold - 0.1 + 1e-12);
              CHECK(got.gripper == g.actual);
              CHECK(orig.kind == SubstageKind::Grasp);
              break;
            }
            case FailureTaxonomy::TimingError: {
              CHECK(d == std::vector<std::string>{"time"});
              const auto ts = std::get<TimingShift>(r.payload);
              CHECK(ts.dt != 0.0);
              CHECK(got.nominal_time == doctest::Approx(orig.nominal_time + ts.dt));
              break;
            }
            case FailureTaxonomy::WrongObject: {
              CHECK(subset(d, {"object", "position"}));
              const auto w = std::get<WrongObjectPair>(r.payload);
              CHECK(w.original == orig.object_id);
              CHECK(w.replacement != w.original);
              REQUIRE(p.scene.find(w.replacement) != nullptr);
              CHECK(p.scene.find(w.replacement)->graspable);
              CHECK(got.object_id == w.replacement);
              break;
            }
            default: break;
          }
        }
        // Exact up to the serialized precision; round-off stays below 1e-12.
        const auto back = invert(inj.substages, r);
        REQUIRE(back.size() == p.substages.size());
        for (std::size_t i = 0; i < back.size(); ++i) {
          CHECK(dump_line(to_json(back[i])) == dump_line(to_json(p.substages[i])));
          CHECK(distance(back[i].target_pose.position, p.substages[i].target_pose.position) <= 1e-12);
          CHECK(angular_distance(back[i].target_pose.orientation,
                                 p.substages[i].target_pose.orientation) <= 1e-12);
        }
        checked[tax]++;
      }
    }
  }
  for (auto t : kAllTaxonomies) CHECK(checked[t] >= 100);
}

TEST_CASE("record ids differ across payload magnitudes") {
  const TaskPlan p = build_task("PickCube", 0);
  const auto a = inject(p, {FailureTaxonomy::PositionDeviation, 3, PositionDelta{{0.05, 0, 0}}});
  const auto b = inject(p, {FailureTaxonomy::PositionDeviation, 3, PositionDelta{{0.06, 0, 0}}});
  CHECK(a.record.description == b.record.description);
  CHECK(a.record.id != b.record.id);
}
