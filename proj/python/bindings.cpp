// Thin pybind11 layer. Structured results cross the boundary as JSON text and
// are decoded on the Python side.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "manifail/correctionloop.hpp"
#include "manifail/errors.hpp"
#include "manifail/evalharness.hpp"
#include "manifail/pipeline.hpp"
#include "manifail/qasynth.hpp"
#include "manifail/serialize.hpp"

namespace py = pybind11;
using namespace manifail;

namespace {

std::optional<FailureTaxonomy> taxonomy_arg(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return taxonomy_from_string(s);
}

std::string generate(std::uint64_t seed, const std::vector<std::string>& tasks, int failures,
                     int successes, const std::string& taxonomy, const std::string& out,
                     double frame_rate, int concurrency) {
  RunConfig c;
  c.seed = seed;
  c.tasks = tasks;
  c.failures_per_task = failures;
  c.successes_per_task = successes;
  c.taxonomy = taxonomy_arg(taxonomy);
  c.out = out;
  c.frame_rate = frame_rate;
  c.concurrency = concurrency;
  GenerateSummary s;
  {
    py::gil_scoped_release release;
    s = cmd_generate(c);
  }
  return nlohmann::json{{"trajectories", s.trajectories}, {"failures", s.failures},
                        {"successes", s.successes},       {"qa_items", s.qa_items},
                        {"discarded", s.discarded},       {"manifest", s.manifest.string()}}
      .dump();
}

std::string evaluate_corpus(const std::string& corpus, const std::string& answers, bool mock_judge,
                            std::uint64_t seed, const std::string& out, int concurrency) {
  verify_corpus(corpus);
  const auto items = read_corpus(corpus);
  std::map<std::string, std::string> given;
  if (answers == "reference") {
    given = reference_answers(items);
  } else if (answers == "random") {
    given = random_answers(items, seed);
  } else {
    given = read_answers(answers, items).answers;
  }
  MockJudge judge;
  py::gil_scoped_release release;
  return to_json(cmd_evaluate(corpus, given, mock_judge ? &judge : nullptr, out, concurrency)).dump();
}

std::string loop(std::uint64_t seed, const std::vector<std::string>& tasks, int episodes,
                 const std::vector<std::string>& critics, const std::string& policy,
                 double compliance, double pause_fraction, const std::string& out, int concurrency) {
  LoopConfig c;
  c.seed = seed;
  c.tasks = tasks;
  c.episodes = episodes;
  for (const auto& n : critics) c.critics.push_back({n, ""});
  c.policy = policy;
  c.compliance = compliance;
  c.pause_fraction = pause_fraction;
  c.out = out;
  c.concurrency = concurrency;
  py::gil_scoped_release release;
  return cmd_loop(c).dump();
}

std::string episode(const std::string& task, std::uint64_t seed, const std::string& taxonomy,
                    double frame_rate) {
  const TaskPlan p = build_task(task, seed);
  if (taxonomy.empty()) return trajectory_to_jsonl(run_episode(p, std::nullopt, frame_rate, seed));
  const Injection inj = inject(p, sample_failure_spec(p, taxonomy_arg(taxonomy), seed));
  Trajectory t = run_episode(p, inj.substages, frame_rate, seed);
  t.failure_record = inj.record.id;
  return trajectory_to_jsonl(t);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Failure-analysis dataset toolkit";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IntegrityError>(m, "IntegrityError", PyExc_RuntimeError);
  py::register_exception<NotApplicable>(m, "NotApplicable", PyExc_ValueError);
  py::register_exception<CatalogError>(m, "CatalogError", PyExc_KeyError);

  m.def("task_ids", &task_ids);
  m.def("category_of", [](const std::string& t) { return std::string(to_string(category_of(t))); });
  m.def("build_task", [](const std::string& t, std::uint64_t seed) { return to_json(build_task(t, seed)).dump(); });
  m.def("episode", &episode, py::arg("task"), py::arg("seed"), py::arg("taxonomy") = "",
        py::arg("frame_rate") = kDefaultFrameRate);
  m.def("generate", &generate, py::arg("seed"), py::arg("tasks"), py::arg("failures_per_task"),
        py::arg("successes_per_task"), py::arg("taxonomy"), py::arg("out"), py::arg("frame_rate"),
        py::arg("concurrency"));
  m.def("stats", [](const std::string& dir, const std::string& out) {
    return to_json(cmd_stats(dir, out.empty() ? fs::path(dir) : fs::path(out))).dump();
  });
  m.def("evaluate", &evaluate_corpus, py::arg("corpus"), py::arg("answers"), py::arg("mock_judge"),
        py::arg("seed"), py::arg("out"), py::arg("concurrency"));
  m.def("loop", &loop, py::arg("seed"), py::arg("tasks"), py::arg("episodes"), py::arg("critics"),
        py::arg("policy"), py::arg("compliance"), py::arg("pause_fraction"), py::arg("out"),
        py::arg("concurrency"));
  m.def("render", [](const std::string& traj, const std::string& out) {
    return cmd_render(traj, out).string();
  });
  m.def("judge_normalized", [](int c, int r, int k) { return make_judge_score(c, r, k).normalized; });
  m.def("score_mc", [](const std::string& answer, const std::vector<std::string>& options, int correct) {
    return score_mc(answer, MCOptionSet{options, correct}).score;
  });
  m.def("verify_manifest", [](const std::string& dir) { return verify_manifest(dir).dump(); });
}
