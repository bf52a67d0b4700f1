#include "manifail/correctionloop.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "manifail/errors.hpp"
#include "manifail/qasynth.hpp"
#include "manifail/random.hpp"
#include "manifail/serialize.hpp"

namespace manifail {

namespace {

constexpr int kSpecRetries = 20;

double& axis_ref(Position& p, int a) { return a == 0 ? p.x : a == 1 ? p.y : p.z; }
double axis_val(const Position& p, int a) { return a == 0 ? p.x : a == 1 ? p.y : p.z; }

int axis_of(Direction d) {
  const Position v = direction_vector(d);
  return v.x != 0 ? 0 : v.y != 0 ? 1 : 2;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

bool is_zero(const Position& p) { return p.x == 0.0 && p.y == 0.0 && p.z == 0.0; }

}  // namespace

std::string_view to_string(CorrectionLevel l) { return l == CorrectionLevel::High ? "high" : "low"; }

CorrectionLevel correction_level_from_string(std::string_view s) {
  if (s == "high") return CorrectionLevel::High;
  if (s == "low") return CorrectionLevel::Low;
  throw ConfigError("correction level must be 'high' or 'low': " + std::string(s));
}

std::vector<std::string> appended_instructions(const std::string& prompt) {
  std::vector<std::string> out;
  std::size_t pos = prompt.find(kPromptSeparator);
  while (pos != std::string::npos) {
    const std::size_t start = pos + kPromptSeparator.size();
    const std::size_t next = prompt.find(kPromptSeparator, start);
    out.push_back(prompt.substr(start, next == std::string::npos ? std::string::npos : next - start));
    pos = next;
  }
  return out;
}

void ScriptedNoisyPolicy::reset(const TaskPlan& plan, std::uint64_t seed) {
  seed_ = seed;
  spec_.reset();
  record_.reset();
  ignored_.clear();
  if (opts_.compliance < 0.0 || opts_.compliance > 1.0) {
    throw ConfigError("compliance must lie in [0, 1]");
  }
  if (opts_.spec) {
    spec_ = opts_.spec;
    record_ = inject(plan, *spec_).record;
    return;
  }
  std::vector<FailureTaxonomy> choices = applicable_taxonomies(plan);
  if (opts_.taxonomy) {
    if (std::find(choices.begin(), choices.end(), *opts_.taxonomy) == choices.end()) {
      throw NotApplicable(std::string(to_string(*opts_.taxonomy)) + " does not apply to " +
                          plan.task_id);
    }
    choices = {*opts_.taxonomy};
  }
  if (choices.empty()) return;
  Rng rng(derive_seed(seed, {hash_string("latent-taxonomy")}));
  const FailureTaxonomy tax = choices[rng.index(choices.size())];
  // Resample until the faulty plan stays inside the workspace.
  for (int i = 0; i < kSpecRetries; ++i) {
    FailureSpec spec =
        sample_failure_spec(plan, tax, derive_seed(seed, {hash_string("latent-spec"), static_cast<std::uint64_t>(i)}));
    Injection inj = inject(plan, spec);
    try {
      run_episode(plan, inj.substages, 5.0, 0);
    } catch (const PlanInfeasible&) {
      continue;
    }
    spec_ = spec;
    record_ = inj.record;
    return;
  }
  throw PlanInfeasible("no feasible latent fault for " + plan.task_id);
}

std::optional<FailureSpec> ScriptedNoisyPolicy::residual(const std::string& prompt) const {
  if (!spec_) return std::nullopt;
  FailureSpec cur = *spec_;
  const FailurePayload& orig = spec_->payload;
  bool cancelled = false;
  const auto instructions = appended_instructions(prompt);
  for (std::size_t i = 0; i < instructions.size(); ++i) {
    Rng comply(derive_seed(seed_, {hash_string("comply"), static_cast<std::uint64_t>(i)}));
    if (comply.uniform() >= opts_.compliance) continue;
    const ParsedInstruction p = parse_instruction(instructions[i]);
    if (auto* d = std::get_if<PositionDelta>(&cur.payload)) {
      const Position& o = std::get<PositionDelta>(orig).dp;
      for (Direction m : p.moves) {
        const int a = axis_of(m);
        const double s = axis_val(direction_vector(m), a);
        if (axis_val(o, a) == 0.0) continue;
        axis_ref(d->dp, a) = s * axis_val(o, a) < 0.0 ? 0.0 : axis_val(o, a);
      }
    } else if (std::holds_alternative<OrientationDelta>(cur.payload)) {
      const RotationSense s = dominant_rotation(std::get<OrientationDelta>(orig).dq);
      for (const RotationSense& r : p.rotations) {
        if (r == reversed(s)) cancelled = true;
        if (r == s) cancelled = false;
      }
    } else if (const auto* w = std::get_if<WrongObjectPair>(&cur.payload)) {
      if (contains(p.quoted, w->original)) cancelled = true;
    } else if (const auto* o = std::get_if<OmittedSubstage>(&cur.payload)) {
      if (contains(p.quoted, o->substage.name)) cancelled = true;
    } else if (std::holds_alternative<GripperChange>(cur.payload)) {
      if (p.redo_grasp) cancelled = true;
    } else if (const auto* t = std::get_if<TimingShift>(&cur.payload)) {
      const bool fix = t->dt < 0 ? p.wait_for_alignment : p.act_without_delay;
      const bool undo = t->dt < 0 ? p.act_without_delay : p.wait_for_alignment;
      if (fix) cancelled = true;
      if (undo) cancelled = false;
    }
  }
  if (cancelled) return std::nullopt;
  if (const auto* d = std::get_if<PositionDelta>(&cur.payload); d && is_zero(d->dp)) {
    return std::nullopt;
  }
  return cur;
}

std::optional<std::vector<SubstageTarget>> ScriptedNoisyPolicy::substages(
    const TaskPlan& plan, const std::string& prompt) {
  ignored_.clear();
  // An instruction is ignored when dropping it leaves the residual unchanged.
  const auto instructions = appended_instructions(prompt);
  const std::string base = prompt.substr(0, prompt.find(kPromptSeparator));
  std::string acc = base;
  std::optional<FailureSpec> prev = residual(acc);
  for (const auto& ins : instructions) {
    acc += std::string(kPromptSeparator) + ins;
    std::optional<FailureSpec> now = residual(acc);
    const bool same = prev.has_value() == now.has_value() &&
                      (!prev || (prev->substage == now->substage && prev->payload == now->payload));
    if (same) ignored_.push_back(ins);
    prev = std::move(now);
  }
  if (!prev) return std::nullopt;
  return inject(plan, *prev).substages;
}

std::string oracle_instruction(const TaskPlan& plan, const FailureRecord& record,
                               CorrectionLevel level) {
  if (const auto* d = std::get_if<PositionDelta>(&record.payload); d && is_zero(d->dp)) {
    return std::string(kProceedPhrase);
  }
  if (const auto* o = std::get_if<OrientationDelta>(&record.payload);
      o && std::abs(o->dq.w()) >= 1.0) {
    return std::string(kProceedPhrase);
  }
  return level == CorrectionLevel::High ? fallback_high_level(plan, record)
                                        : fallback_low_level(plan, record);
}

std::optional<std::string> OracleCritic::critique(const CritiqueRequest& req) {
  if (!req.truth || req.plan == nullptr) return std::string(kProceedPhrase);
  return oracle_instruction(*req.plan, *req.truth, level_);
}

std::optional<std::string> RandomCritic::critique(const CritiqueRequest& req) {
  Rng rng(derive_seed(seed_, {hash_string("random-critic"), static_cast<std::uint64_t>(req.attempt)}));
  std::vector<Direction> moves(1 + rng.index(2));
  for (auto& m : moves) m = static_cast<Direction>(rng.index(6));
  return join_moves(moves) + ".";
}

std::optional<std::string> RemoteCritic::critique(const CritiqueRequest& req) {
  const nlohmann::json body{{"task_prompt", req.task_prompt},
                            {"prompt", req.prompt},
                            {"trajectory", trajectory_summary(req.segment)},
                            {"level", to_string(level_)}};
  const RemoteResult r = post_json(ep_, body, [](const nlohmann::json& reply) {
    auto doc = unwrap_reply(reply, "instruction");
    if (!doc || !doc->is_object() || !(*doc)["instruction"].is_string()) {
      return std::optional<nlohmann::json>{};
    }
    return std::optional<nlohmann::json>((*doc)["instruction"]);
  });
  if (!r.value) return std::nullopt;
  return r.value->get<std::string>();
}

CorrectionSession run_session(const std::string& task_id, Policy& policy, Critic& critic,
                              double pause_fraction, std::uint64_t seed, CorrectionLevel level,
                              double frame_rate) {
  if (!(pause_fraction > 0.0 && pause_fraction <= 1.0)) {
    throw ConfigError("pause fraction must lie in (0, 1]");
  }
  const TaskPlan plan = build_task(task_id, seed);
  policy.reset(plan, derive_seed(seed, {hash_string("policy")}));

  CorrectionSession s;
  s.task_id = task_id;
  s.seed = seed;
  s.fault = policy.fault();
  std::string prompt = plan.instruction;
  for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
    Attempt a;
    a.prompt = prompt;
    const auto subs = policy.substages(plan, prompt);
    if (auto* sp = dynamic_cast<ScriptedNoisyPolicy*>(&policy)) a.ignored = sp->ignored();
    const Trajectory traj = run_episode(plan, subs, frame_rate, seed);
    a.outcome = traj.outcome;
    a.duration = traj.duration;
    if (traj.outcome == Outcome::Success || attempt == kMaxAttempts) {
      s.attempts.push_back(std::move(a));
      break;
    }
    a.pause_time = pause_fraction * plan.horizon;
    CritiqueRequest req;
    req.plan = &plan;
    req.task_prompt = plan.instruction;
    req.prompt = prompt;
    req.segment = segment(traj, std::min(a.pause_time, traj.duration));
    req.level = level;
    req.truth = s.fault;
    req.attempt = attempt;
    std::optional<std::string> ins;
    try {
      ins = critic.critique(req);
    } catch (const std::exception&) {
      ins.reset();
    }
    a.critic_failed = !ins.has_value();
    a.instruction = ins.value_or("");
    prompt += std::string(kPromptSeparator) + a.instruction;
    s.attempts.push_back(std::move(a));
  }
  const Attempt& last = s.attempts.back();
  s.success_final = last.outcome == Outcome::Success;
  // Success on the first run or on the first corrected re-run.
  s.success_after_first = s.success_final && s.attempts_used() <= 2;
  return s;
}

nlohmann::json to_json(const CorrectionSession& s) {
  nlohmann::json attempts = nlohmann::json::array();
  for (const auto& a : s.attempts) {
    attempts.push_back({{"prompt", a.prompt},
                        {"pause_time", round9(a.pause_time)},
                        {"instruction", a.instruction},
                        {"critic_failed", a.critic_failed},
                        {"outcome", a.outcome == Outcome::Success ? "success" : "failure"},
                        {"duration", round9(a.duration)},
                        {"ignored", a.ignored}});
  }
  nlohmann::json j{{"task_id", s.task_id},
                   {"seed", s.seed},
                   {"attempts", attempts},
                   {"attempts_used", s.attempts_used()},
                   {"success_after_first", s.success_after_first},
                   {"success_final", s.success_final}};
  if (s.fault) j["fault"] = to_json(*s.fault);
  return j;
}

RateTable batch_rates(const std::vector<std::string>& task_ids, int episodes_per_task,
                      const PolicyFactory& policy, const CriticFactory& critic, std::uint64_t seed,
                      double pause_fraction, CorrectionLevel level, int concurrency,
                      double frame_rate) {
  if (episodes_per_task < 1) throw ConfigError("episodes per task must be at least 1");
  if (concurrency < 1) throw ConfigError("concurrency must be at least 1");
  const std::size_t per = static_cast<std::size_t>(episodes_per_task);
  const std::size_t total = task_ids.size() * per;
  std::vector<CorrectionSession> sessions(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < total; i = next++) {
      try {
        const std::string& task = task_ids[i / per];
        const std::uint64_t s =
            derive_seed(seed, {hash_string(task), static_cast<std::uint64_t>(i % per)});
        auto p = policy();
        auto c = critic(s);
        sessions[i] = run_session(task, *p, *c, pause_fraction, s, level, frame_rate);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<int>(concurrency, static_cast<int>(std::max<std::size_t>(total, 1))); ++t) {
    pool.emplace_back(work);
  }
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  RateTable table;
  for (std::size_t k = 0; k < task_ids.size(); ++k) {
    RateRow row;
    row.task_id = task_ids[k];
    row.episodes = episodes_per_task;
    int first = 0, final_ = 0;
    for (std::size_t e = 0; e < per; ++e) {
      first += sessions[k * per + e].success_after_first ? 1 : 0;
      final_ += sessions[k * per + e].success_final ? 1 : 0;
    }
    row.after_first = static_cast<double>(first) / episodes_per_task;
    row.after_final = static_cast<double>(final_) / episodes_per_task;
    table.average_first += row.after_first;
    table.average_final += row.after_final;
    table.rows.push_back(row);
  }
  if (!table.rows.empty()) {
    table.average_first /= static_cast<double>(table.rows.size());
    table.average_final /= static_cast<double>(table.rows.size());
  }
  table.sessions = std::move(sessions);
  return table;
}

nlohmann::json to_json(const RateTable& t, bool include_sessions) {
  nlohmann::json tasks = nlohmann::json::array();
  nlohmann::json first{{"row", "1 attempt"}}, final_{{"row", "5 attempts"}};
  for (const auto& r : t.rows) {
    tasks.push_back(r.task_id);
    first[r.task_id] = r.after_first;
    final_[r.task_id] = r.after_final;
  }
  first["average"] = t.average_first;
  final_["average"] = t.average_final;
  nlohmann::json j{{"tasks", tasks},
                   {"episodes_per_task", t.rows.empty() ? 0 : t.rows.front().episodes},
                   {"rows", {first, final_}}};
  if (include_sessions) {
    nlohmann::json s = nlohmann::json::array();
    for (const auto& x : t.sessions) s.push_back(to_json(x));
    j["sessions"] = s;
  }
  return j;
}

}  // namespace manifail
