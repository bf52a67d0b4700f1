#pragma once

#include "manifail/injector.hpp"
#include "manifail/serialize.hpp"
#include "manifail/simulator.hpp"

namespace fixtures {

struct Failed {
  manifail::Trajectory trajectory;
  manifail::FailureRecord record;
};

inline Failed failed(const std::string& task, std::uint64_t seed, const manifail::FailureSpec& spec) {
  const manifail::TaskPlan p = manifail::build_task(task, seed);
  const manifail::Injection inj = manifail::inject(p, spec);
  manifail::Trajectory t = manifail::run_episode(p, inj.substages, manifail::kDefaultFrameRate, seed);
  t.failure_record = inj.record.id;
  return {std::move(t), inj.record};
}

inline Failed failed(const std::string& task, std::uint64_t seed,
                     std::optional<manifail::FailureTaxonomy> tax = std::nullopt) {
  const manifail::TaskPlan p = manifail::build_task(task, seed);
  return failed(task, seed, manifail::sample_failure_spec(p, tax, seed + 1000));
}

inline manifail::FailureSpec push_forward(double dx) {
  return {manifail::FailureTaxonomy::PositionDeviation, 3, manifail::PositionDelta{{dx, 0, 0}}};
}

}  // namespace fixtures
