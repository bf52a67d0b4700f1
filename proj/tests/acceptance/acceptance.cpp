// One line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <map>
#include <random>
#include <set>

#include "manifail/correctionloop.hpp"
#include "manifail/errors.hpp"
#include "manifail/evalharness.hpp"
#include "manifail/geometry.hpp"
#include "manifail/injector.hpp"
#include "manifail/pipeline.hpp"
#include "manifail/qasynth.hpp"
#include "manifail/random.hpp"
#include "manifail/serialize.hpp"
#include "manifail/simulator.hpp"

using namespace manifail;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass{true};
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// Runs fn over each task in parallel and collects the results in task order.
template <typename T>
std::vector<T> per_task(const std::function<T(const std::string&)>& fn) {
  std::vector<std::future<T>> fut;
  for (const auto& id : task_ids()) fut.push_back(std::async(std::launch::async, fn, id));
  std::vector<T> out;
  for (auto& f : fut) out.push_back(f.get());
  return out;
}

Verdict expert_soundness() {
  const auto t0 = Clock::now();
  int ok = 0, total = 0;
  for (const auto& id : task_ids()) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ++total;
      if (run_episode(build_task(id, seed)).outcome == Outcome::Success) ++ok;
    }
  }
  const double secs = seconds_since(t0);
  return {ok == total && total == 320 && secs < 60.0,
          fmt("%.0f/%.0f expert episodes succeeded in %.2f s", ok, total, secs)};
}

// Substage fields touched, compared against the expert plan.
bool one_fault(const TaskPlan& p, const Injection& inj) {
  const int k = inj.record.substage;
  if (inj.record.taxonomy == FailureTaxonomy::StepOmission) {
    auto expect = p.substages;
    expect.erase(expect.begin() + (k - 1));
    return inj.substages == expect;
  }
  if (inj.substages.size() != p.substages.size()) return false;
  for (std::size_t i = 0; i < p.substages.size(); ++i) {
    SubstageTarget a = p.substages[i], b = inj.substages[i];
    if (int(i) + 1 != k) {
      if (!(a == b)) return false;
      continue;
    }
    switch (inj.record.taxonomy) {
      case FailureTaxonomy::PositionDeviation:
        if (a.target_pose.position == b.target_pose.position) return false;
        b.target_pose.position = a.target_pose.position;
        break;
      case FailureTaxonomy::OrientationDeviation:
        if (a.target_pose.orientation == b.target_pose.orientation) return false;
        b.target_pose.orientation = a.target_pose.orientation;
        break;
      case FailureTaxonomy::GraspingError:
        if (a.gripper == b.gripper) return false;
        b.gripper = a.gripper;
        break;
      case FailureTaxonomy::TimingError:
        if (a.nominal_time == b.nominal_time) return false;
        b.nominal_time = a.nominal_time;
        break;
      case FailureTaxonomy::WrongObject:
        if (a.object_id == b.object_id) return false;
        b.object_id = a.object_id;
        b.target_pose.position = a.target_pose.position;
        break;
      default: return false;
    }
    if (!(a == b)) return false;
  }
  return true;
}

struct Efficacy {
  std::string worst_pair;
  double worst_rate{2.0};  // above any rate until the first pair is seen
  int pairs{0};
  int records{0};
  int diff_ok{0};
};

Verdict injection_efficacy() {
  const auto results = per_task<Efficacy>([](const std::string& id) {
    Efficacy e;
    const TaskPlan probe = build_task(id, 0);
    for (auto tax : kAllTaxonomies) {
      if (applicable_substages(probe, tax).empty()) continue;
      int failed = 0, runs = 0;
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const TaskPlan p = build_task(id, seed);
        if (applicable_substages(p, tax).empty()) continue;
        const Injection inj = inject(p, sample_failure_spec(p, tax, derive_seed(seed, {17})));
        ++e.records;
        if (one_fault(p, inj)) ++e.diff_ok;
        try {
          if (run_episode(p, inj.substages).outcome == Outcome::Failure) ++failed;
          ++runs;
        } catch (const PlanInfeasible&) {
        }
      }
      ++e.pairs;
      const double rate = runs ? failed / double(runs) : 0.0;
      if (rate < e.worst_rate || runs < 90) {
        e.worst_rate = runs < 90 ? 0.0 : rate;
        e.worst_pair = id + "/" + std::string(to_string(tax));
      }
    }
    return e;
  });
  Efficacy all;
  for (const auto& e : results) {
    all.pairs += e.pairs;
    all.records += e.records;
    all.diff_ok += e.diff_ok;
    if (e.worst_rate < all.worst_rate) {
      all.worst_rate = e.worst_rate;
      all.worst_pair = e.worst_pair;
    }
  }
  return {all.worst_rate >= 0.95 && all.diff_ok == all.records,
          fmt("%.0f pairs, lowest failure rate %.2f (", all.pairs, all.worst_rate) +
              all.worst_pair + fmt("), single-fault diff %.0f/%.0f", all.diff_ok, all.records)};
}

Verdict taxonomy_checks() {
  std::map<FailureTaxonomy, int> n, ok;
  for (const auto& id : task_ids()) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const TaskPlan p = build_task(id, seed);
      for (auto tax : applicable_taxonomies(p)) {
        const Injection inj = inject(p, sample_failure_spec(p, tax, seed * 31 + 5));
        const FailureRecord& r = inj.record;
        const auto& orig = p.substages[r.substage - 1];
        bool good = false;
        if (tax == FailureTaxonomy::StepOmission) {
          std::vector<std::string> a, b;
          for (const auto& s : p.substages)
            if (s.index != r.substage) a.push_back(s.name);
          for (const auto& s : inj.substages) b.push_back(s.name);
          good = inj.substages.size() == p.substages.size() - 1 && a == b;
        } else {
          const auto& got = inj.substages[r.substage - 1];
          if (tax == FailureTaxonomy::GraspingError) {
            const auto g = std::get<GripperChange>(r.payload);
            good = got.gripper < orig.gripper && g.actual < g.nominal;
          } else if (tax == FailureTaxonomy::WrongObject) {
            const auto w = std::get<WrongObjectPair>(r.payload);
            const SceneObject* o = p.scene.find(w.replacement);
            good = o && o->graspable && w.replacement != orig.object_id &&
                   got.object_id == w.replacement;
          } else if (tax == FailureTaxonomy::TimingError) {
            good = std::get<TimingShift>(r.payload).dt != 0.0 && got.nominal_time != orig.nominal_time;
          } else if (tax == FailureTaxonomy::PositionDeviation) {
            const Position dp = std::get<PositionDelta>(r.payload).dp;
            good = distance(got.target_pose.position, orig.target_pose.position + dp) <= 1e-9;
          } else if (tax == FailureTaxonomy::OrientationDeviation) {
            const Orientation dq = std::get<OrientationDelta>(r.payload).dq;
            good = angular_distance(got.target_pose.orientation,
                                    quat_mul(dq, orig.target_pose.orientation)) <= 1e-9;
          }
        }
        ++n[tax];
        if (good) ++ok[tax];
      }
    }
  }
  bool pass = true;
  std::string d;
  for (auto t : kAllTaxonomies) {
    pass = pass && n[t] >= 100 && ok[t] == n[t];
    d += std::string(to_string(t)) + " " + std::to_string(ok[t]) + "/" + std::to_string(n[t]) + "; ";
  }
  return {pass, d.substr(0, d.size() - 2)};
}

std::vector<QAItem> failure_corpus(int per_task) {
  std::vector<QAItem> out;
  for (const auto& id : task_ids()) {
    for (int s = 0; s < per_task; ++s) {
      const TaskPlan p = build_task(id, s);
      const Injection inj = inject(p, sample_failure_spec(p, std::nullopt, s + 1));
      Trajectory t = run_episode(p, inj.substages, kDefaultFrameRate, s);
      if (t.outcome == Outcome::Success) continue;
      t.failure_record = inj.record.id;
      for (auto& it : synthesize_qa(t, inj.record, s)) out.push_back(std::move(it));
    }
  }
  return out;
}

Verdict qa_round_trip() {
  const auto items = failure_corpus(50);
  std::vector<QAItem> mc;
  for (const auto& it : items)
    if (it.mc) mc.push_back(it);
  std::map<std::string, std::string> oracle, random;
  std::mt19937_64 g(2024);
  for (const auto& it : mc) {
    oracle[it.id] = it.reference_answer;
    std::uniform_int_distribution<int> pick(0, int(it.mc->options.size()) - 1);
    random[it.id] = option_label(pick(g));
  }
  const auto o = evaluate(mc, oracle, nullptr);
  const auto r = evaluate(mc, random, nullptr);
  const double od = o.question_type_means.at("failure_detection");
  const double oi = o.question_type_means.at("failure_identification");
  const double ol = o.question_type_means.at("failure_locating");
  const double rd = r.question_type_means.at("failure_detection");
  const double ri = r.question_type_means.at("failure_identification");
  const double rl = r.question_type_means.at("failure_locating");
  const bool pass = od == 100.0 && oi == 100.0 && ol == 100.0 && mc.size() >= 2000 &&
                    std::abs(rd - 50.0) <= 3.0 && std::abs(ri - 100.0 / 6) <= 3.0 &&
                    std::abs(rl - 20.0) <= 3.0;
  return {pass, fmt("oracle %.1f/%.1f/%.1f%%, ", od, oi, ol) +
                    fmt("random %.1f/%.1f/%.1f%% over %.0f items", rd, ri, rl, double(mc.size()))};
}

Verdict scoring_protocol() {
  const double a = make_judge_score(5, 5, 5).normalized;
  const double b = make_judge_score(0, 0, 0).normalized;
  const double c = make_judge_score(3, 4, 5).normalized;
  const auto items = failure_corpus(3);
  std::map<std::string, std::string> ans;
  std::size_t i = 0;
  for (const auto& it : items) {
    ans[it.id] = (i++ % 2) ? it.reference_answer : "Move the end-effector to the left.";
  }
  MockJudge judge;
  const std::string r1 = to_json(evaluate(items, ans, &judge, 1)).dump();
  const std::string r2 = to_json(evaluate(items, ans, &judge, 8)).dump();
  return {a == 100.0 && b == 0.0 && c == 80.0 && r1 == r2,
          fmt("(5,5,5)->%g (0,0,0)->%g (3,4,5)->%g, ", a, b, c) +
              (r1 == r2 ? "reports identical" : "reports differ")};
}

Verdict correction_uplift() {
  const std::vector<std::string> tasks{"PlaceCube", "PushCube", "PullCubeTool", "StackCube"};
  const PolicyFactory pol = [] { return std::make_unique<ScriptedNoisyPolicy>(); };
  auto rates = [&](const CriticFactory& c, CorrectionLevel level) {
    return batch_rates(tasks, 100, pol, c, 31337, kDefaultPauseFraction, level, 8);
  };
  const auto low = rates([](std::uint64_t) { return std::make_unique<OracleCritic>(CorrectionLevel::Low); },
                         CorrectionLevel::Low);
  const auto high = rates(
      [](std::uint64_t) { return std::make_unique<OracleCritic>(CorrectionLevel::High); },
      CorrectionLevel::High);
  const auto rnd = rates([](std::uint64_t s) { return std::make_unique<RandomCritic>(s); },
                         CorrectionLevel::Low);
  const auto null = rates([](std::uint64_t) { return std::make_unique<NullCritic>(); },
                          CorrectionLevel::Low);
  bool bounds = true;
  for (const auto* t : {&low, &high, &rnd, &null}) {
    for (const auto& s : t->sessions) {
      int instructions = 0;
      for (const auto& a : s.attempts)
        if (!a.instruction.empty() || a.critic_failed) ++instructions;
      bounds = bounds && s.attempts_used() <= kMaxAttempts && s.attempts_used() >= 1 &&
               instructions <= kMaxAttempts - 1 &&
               appended_instructions(s.attempts.back().prompt).size() <= kMaxAttempts - 1;
    }
  }
  const double L = low.average_final, H = high.average_final, R = rnd.average_final,
               N = null.average_final;
  const bool pass = L - N >= 0.30 && L >= H && H >= R && R >= N && bounds;
  return {pass, fmt("5-attempt oracle-low %.3f, oracle-high %.3f, random %.3f, null %.3f", L, H, R, N) +
                    (bounds ? ", attempt bounds hold" : ", attempt bounds violated")};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("manifail-acceptance-" + name);
  fs::remove_all(p);
  return p;
}

Verdict pipeline_determinism(GenerateSummary& summary, fs::path& dataset) {
  RunConfig cfg;
  cfg.seed = 2025;
  cfg.concurrency = std::max(1u, std::thread::hardware_concurrency());
  cfg.out = scratch("a");
  auto t0 = Clock::now();
  summary = cmd_generate(cfg);
  const double first = seconds_since(t0);
  RunConfig again = cfg;
  again.out = scratch("b");
  again.concurrency = 1;
  t0 = Clock::now();
  cmd_generate(again);
  const double second = seconds_since(t0);
  bool same = read_file(cfg.out / kManifestFile) == read_file(again.out / kManifestFile);
  for (const char* f : {kQaFile, kRecordsFile}) {
    same = same && read_file(cfg.out / f) == read_file(again.out / f);
  }
  dataset = cfg.out;
  fs::remove_all(again.out);
  const int expect_qa = 16 * 20 * 8 + 16 * 3 * 3;
  return {same && first < 300 && second < 300 && summary.qa_items == expect_qa,
          fmt("%.0f QA items, runs %.1f s and %.1f s, ", summary.qa_items, first, second) +
              (same ? "outputs identical" : "outputs differ")};
}

Verdict geometry_numerics() {
  std::mt19937_64 g(8);
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> u(0, kPi), s01(0, 1);
  auto rot = [&] { return std::pair<Position, double>{{n(g), n(g), n(g)}, u(g)}; };
  auto rodrigues = [](Position a, double th) {
    const double l = a.norm();
    const double x = a.x / l, y = a.y / l, z = a.z / l, c = std::cos(th), s = std::sin(th), t = 1 - c;
    return std::array<double, 9>{t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
                                 t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
                                 t * x * z - s * y, t * y * z + s * x, t * z * z + c};
  };
  auto mul = [](const std::array<double, 9>& a, const std::array<double, 9>& b) {
    std::array<double, 9> r{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) r[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
    return r;
  };
  double unit = 0, ends = 0, round = 0, matrix = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto [ax, aa] = rot();
    const auto [bx, ba] = rot();
    const Orientation a = Orientation::from_axis_angle(ax, aa);
    const Orientation b = Orientation::from_axis_angle(bx, ba);
    const Orientation ab = quat_mul(a, b);
    unit = std::max({unit, std::abs(ab.norm() - 1), std::abs(slerp(a, b, s01(g)).norm() - 1)});
    ends = std::max({ends, angular_distance(slerp(a, b, 0), a), angular_distance(slerp(a, b, 1), b)});
    round = std::max(round, angular_distance(
                                apply_orientation_perturbation(apply_orientation_perturbation(a, b), b.inverse()), a));
    const auto m = ab.matrix(), e = mul(rodrigues(ax, aa), rodrigues(bx, ba));
    for (int k = 0; k < 9; ++k) matrix = std::max(matrix, std::abs(m[k] - e[k]));
  }
  return {unit <= 1e-9 && ends <= 1e-9 && round <= 1e-9 && matrix <= 1e-8,
          fmt("unitness %.1e, slerp ends %.1e, round trip %.1e, matrix %.1e", unit, ends, round, matrix)};
}

Verdict stats_conservation(const GenerateSummary& summary, const fs::path& dataset) {
  const DatasetStats s = compute_stats(dataset);
  int hist = 0, qa = 0;
  for (int c : s.duration_histogram) hist += c;
  for (const auto& [k, v] : s.qa_by_type) qa += v;
  const int expect = 8 * summary.failures + 3 * summary.successes;
  return {hist == s.trajectories && s.trajectories == summary.trajectories && qa == expect &&
              s.qa_items == expect,
          fmt("histogram %.0f of %.0f trajectories, QA %.0f of %.0f expected", hist, s.trajectories, qa,
              expect)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const char* name, const std::function<Verdict()>& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    std::printf("[%s] %d %s: %s\n", v.pass ? "PASS" : "FAIL", n, name, v.detail.c_str());
    std::fflush(stdout);
    if (!v.pass) ++failures;
  };
  GenerateSummary summary;
  fs::path dataset;
  report(1, "expert soundness", expert_soundness);
  report(2, "injection efficacy", injection_efficacy);
  report(3, "taxonomy formal checks", taxonomy_checks);
  report(4, "oracle QA round trip", qa_round_trip);
  report(5, "scoring protocol exactness", scoring_protocol);
  report(6, "correction-loop uplift", correction_uplift);
  report(7, "pipeline determinism", [&] { return pipeline_determinism(summary, dataset); });
  report(8, "geometry numerics", geometry_numerics);
  report(9, "stats conservation", [&] { return stats_conservation(summary, dataset); });
  if (!dataset.empty()) fs::remove_all(dataset);
  return failures == 0 ? 0 : 1;
}
