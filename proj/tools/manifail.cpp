// Command-line front door. Credentials come from the environment only.
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "manifail/errors.hpp"
#include "manifail/pipeline.hpp"

using namespace manifail;

namespace {

enum Exit { kOk = 0, kConfig = 1, kIntegrity = 2, kPartial = 3 };

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Failure-analysis dataset generation, evaluation and correction loops"};
  app.require_subcommand(1);

  // Shared option storage.
  std::uint64_t seed = 0;
  std::string tasks, taxonomy, out = "out", annotator, judge_ep, critic_ep;
  int failures = 20, successes = 3, concurrency = 1;
  double frame_rate = kDefaultFrameRate, pause = kDefaultPauseFraction;
  bool mock_judge = false;

  auto* gen = app.add_subcommand("generate", "Generate trajectories, failure records and QA");
  gen->add_option("--seed", seed, "Base seed")->required();
  gen->add_option("--tasks", tasks, "Comma-separated task ids (default: all)");
  gen->add_option("--failures-per-task", failures)->check(CLI::NonNegativeNumber);
  gen->add_option("--successes-per-task", successes)->check(CLI::NonNegativeNumber);
  gen->add_option("--taxonomy", taxonomy, "Only inject this failure type");
  gen->add_option("--out", out);
  gen->add_option("--annotator-endpoint", annotator,
                  "HTTP annotator; key from MANIFAIL_ANNOTATOR_API_KEY");
  gen->add_option("--concurrency", concurrency)->check(CLI::PositiveNumber);
  gen->add_option("--frame-rate", frame_rate)->check(CLI::PositiveNumber);

  std::string dataset;
  auto* stats = app.add_subcommand("stats", "Dataset statistics and plots");
  stats->add_option("dataset", dataset, "Dataset directory")->required();
  stats->add_option("--out", out, "Output directory (default: the dataset)");

  std::string corpus, answers = "reference";
  auto* eval = app.add_subcommand("evaluate", "Score an answer file against a QA corpus");
  eval->add_option("corpus", corpus, "qa.jsonl")->required();
  eval->add_option("--answers", answers, "Answer file, or 'reference' / 'random'");
  eval->add_option("--seed", seed, "Seed for --answers random");
  eval->add_option("--judge-endpoint", judge_ep, "HTTP judge; key from MANIFAIL_JUDGE_API_KEY");
  eval->add_flag("--mock-judge", mock_judge, "Offline token-overlap judge");
  eval->add_option("--out", out);
  eval->add_option("--concurrency", concurrency)->check(CLI::PositiveNumber);

  int episodes = 100;
  std::string critics = "null,oracle-low", policy = "scripted";
  double compliance = 1.0;
  auto* loop = app.add_subcommand("loop", "Correction-loop success rates per critic");
  loop->add_option("--seed", seed);
  loop->add_option("--tasks", tasks);
  loop->add_option("--episodes", episodes, "Episodes per task")->check(CLI::PositiveNumber);
  loop->add_option("--critics", critics, "null, random, oracle-low, oracle-high, remote, remote-high");
  loop->add_option("--policy", policy, "scripted or expert");
  loop->add_option("--compliance", compliance)->check(CLI::Range(0.0, 1.0));
  loop->add_option("--pause-fraction", pause)->check(CLI::Range(0.0, 1.0));
  loop->add_option("--critic-endpoint", critic_ep, "HTTP critic; key from MANIFAIL_CRITIC_API_KEY");
  loop->add_option("--concurrency", concurrency)->check(CLI::PositiveNumber);
  loop->add_option("--frame-rate", frame_rate)->check(CLI::PositiveNumber);
  loop->add_option("--out", out);

  std::string trajectory;
  auto* render = app.add_subcommand("render", "Top-down SVG of one trajectory");
  render->add_option("trajectory", trajectory, "Trajectory .jsonl file")->required();
  render->add_option("--out", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) {
      RunConfig cfg;
      cfg.seed = seed;
      cfg.tasks = split_list(tasks);
      cfg.failures_per_task = failures;
      cfg.successes_per_task = successes;
      if (!taxonomy.empty()) cfg.taxonomy = taxonomy_from_string(taxonomy);
      cfg.frame_rate = frame_rate;
      cfg.out = out;
      cfg.annotator_endpoint = annotator;
      cfg.concurrency = concurrency;
      const GenerateSummary s = cmd_generate(cfg);
      std::cout << "trajectories " << s.trajectories << " (failures " << s.failures
                << ", successes " << s.successes << ")\nqa items " << s.qa_items
                << "\ndiscarded " << s.discarded << "\n";
      if (s.annotator_fallbacks > 0) {
        std::cout << "annotator fallbacks " << s.annotator_fallbacks << "\n";
      }
      std::cout << "manifest " << s.manifest.string() << "\n";
    } else if (*stats) {
      const fs::path dest = stats->count("--out") ? fs::path(out) : fs::path(dataset);
      std::cout << stats_text(cmd_stats(dataset, dest));
    } else if (*eval) {
      if (mock_judge && !judge_ep.empty()) {
        throw ConfigError("choose either --judge-endpoint or --mock-judge");
      }
      verify_corpus(corpus);
      const auto items = read_corpus(corpus);
      std::map<std::string, std::string> given;
      if (answers == "reference") {
        given = reference_answers(items);
      } else if (answers == "random") {
        given = random_answers(items, seed);
      } else {
        AnswerFile f = read_answers(answers, items);
        for (const auto& d : f.diagnostics) std::cerr << d << "\n";
        given = std::move(f.answers);
      }
      std::unique_ptr<Judge> judge;
      if (mock_judge) judge = std::make_unique<MockJudge>();
      if (!judge_ep.empty()) {
        judge = std::make_unique<RemoteJudge>(endpoint_from_env(judge_ep, kJudgeKeyEnv));
      }
      EvaluationReport rep;
      try {
        rep = cmd_evaluate(corpus, given, judge.get(), out, concurrency);
      } catch (const EmptyReport& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kPartial;
      }
      char buf[96];
      for (const auto& [k, v] : rep.question_type_means) {
        std::snprintf(buf, sizeof buf, "%-24s %7.2f\n", k.c_str(), v);
        std::cout << buf;
      }
      std::snprintf(buf, sizeof buf, "%-24s %7.2f\n", "overall", rep.overall);
      std::cout << buf << "scored " << rep.scored << ", unscored " << rep.unscored << ", unmatched "
                << rep.unmatched << "\nreport " << (fs::path(out) / "report.json").string() << "\n";
      if (rep.unscored > 0) return kPartial;
    } else if (*loop) {
      LoopConfig cfg;
      cfg.seed = seed;
      cfg.tasks = split_list(tasks);
      cfg.episodes = episodes;
      for (const auto& c : split_list(critics)) {
        cfg.critics.push_back({c, c.rfind("remote", 0) == 0 ? critic_ep : std::string{}});
      }
      cfg.policy = policy;
      cfg.compliance = compliance;
      cfg.pause_fraction = pause;
      cfg.frame_rate = frame_rate;
      cfg.concurrency = concurrency;
      cfg.out = out;
      const auto table = cmd_loop(cfg);
      char buf[96];
      for (const auto& row : table["rows"]) {
        std::snprintf(buf, sizeof buf, "%-14s %-11s %.4f\n", row["critic"].get<std::string>().c_str(),
                      row["row"].get<std::string>().c_str(), row["average"].get<double>());
        std::cout << buf;
      }
      std::cout << "table " << (fs::path(out) / "loop.json").string() << "\n";
    } else if (*render) {
      std::cout << cmd_render(trajectory, out).string() << "\n";
    }
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return kIntegrity;
  } catch (const EmptyReport& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPartial;
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  }
  return kOk;
}
