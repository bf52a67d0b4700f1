#include "manifail/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "manifail/errors.hpp"
#include "manifail/qasynth.hpp"
#include "manifail/random.hpp"
#include "manifail/serialize.hpp"

namespace manifail {

namespace {

using json = nlohmann::json;

// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first
// failure by index so errors are deterministic too.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int extra = std::min<int>(workers, static_cast<int>(std::max<std::size_t>(n, 1))) - 1;
  for (int t = 0; t < extra; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::vector<std::string> resolve_tasks(const std::vector<std::string>& requested) {
  if (requested.empty()) return task_ids();
  for (const auto& t : requested) {
    try {
      catalog_entry(t);
    } catch (const std::exception&) {
      throw ConfigError("unknown task: " + t);
    }
  }
  return requested;
}

int type_rank(QuestionType q) { return static_cast<int>(q); }

struct Job {
  std::string task;
  bool failure{true};
  int index{0};
};

struct JobResult {
  Trajectory trajectory;
  std::optional<FailureRecord> record;
  std::vector<QAItem> qa;
  int discarded{0};
  bool fallback{false};
};

}  // namespace

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + tmp.string());
    f << content;
    if (!f.flush()) throw ConfigError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IntegrityError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void validate(const RunConfig& cfg) {
  if (cfg.failures_per_task < 0 || cfg.successes_per_task < 0) {
    throw ConfigError("per-task counts must be non-negative");
  }
  if (!(cfg.frame_rate > 0.0)) throw ConfigError("frame rate must be positive");
  if (cfg.concurrency < 1) throw ConfigError("concurrency must be at least 1");
  if (cfg.out.empty()) throw ConfigError("output directory is required");
  resolve_tasks(cfg.tasks);
}

GenerateSummary cmd_generate(const RunConfig& cfg) {
  validate(cfg);
  const auto tasks = resolve_tasks(cfg.tasks);

  // Taxonomy coverage per task: the filter, or round-robin over what applies.
  std::map<std::string, std::vector<FailureTaxonomy>> coverage;
  for (const auto& t : tasks) {
    const auto applicable = applicable_taxonomies(build_task(t, cfg.seed));
    if (cfg.taxonomy) {
      if (std::find(applicable.begin(), applicable.end(), *cfg.taxonomy) == applicable.end()) {
        throw NotApplicable(std::string(to_string(*cfg.taxonomy)) + " does not apply to " + t);
      }
      coverage[t] = {*cfg.taxonomy};
    } else {
      coverage[t] = applicable;
    }
    if (cfg.failures_per_task > 0 && coverage[t].empty()) {
      throw NotApplicable("no failure taxonomy applies to " + t);
    }
  }

  std::unique_ptr<Annotator> annotator;
  if (!cfg.annotator_endpoint.empty()) {
    annotator = std::make_unique<RemoteAnnotator>(
        endpoint_from_env(cfg.annotator_endpoint, kAnnotatorKeyEnv));
  }

  std::vector<Job> jobs;
  for (const auto& t : tasks) {
    for (int j = 0; j < cfg.failures_per_task; ++j) jobs.push_back({t, true, j});
    for (int j = 0; j < cfg.successes_per_task; ++j) jobs.push_back({t, false, j});
  }
  const std::uint64_t qa_seed = derive_seed(cfg.seed, {hash_string("qa")});

  std::vector<JobResult> results(jobs.size());
  parallel_for(jobs.size(), cfg.concurrency, [&](std::size_t i) {
    const Job& job = jobs[i];
    JobResult& r = results[i];
    const auto& taxes = coverage.at(job.task);
    for (int attempt = 0;; ++attempt) {
      if (attempt >= kMaxRegenerations) {
        throw PlanInfeasible("gave up regenerating an episode of " + job.task);
      }
      const std::uint64_t s =
          derive_seed(cfg.seed, {hash_string(job.task), hash_string(job.failure ? "failure" : "success"),
                                 static_cast<std::uint64_t>(job.index),
                                 static_cast<std::uint64_t>(attempt)});
      try {
        const TaskPlan plan = build_task(job.task, s);
        if (job.failure) {
          // Rotation starts at a per-task offset so small runs still see every type.
          const std::size_t slot = (hash_string(job.task) + static_cast<std::size_t>(job.index)) % taxes.size();
          const FailureTaxonomy tax = taxes[slot];
          const FailureSpec spec = sample_failure_spec(plan, tax, derive_seed(s, {hash_string("spec")}));
          Injection inj = inject(plan, spec);
          Trajectory traj = run_episode(plan, inj.substages, cfg.frame_rate, s);
          // Coincidental successes are cleaned out like infeasible plans.
          if (traj.outcome == Outcome::Success) {
            ++r.discarded;
            continue;
          }
          traj.failure_record = inj.record.id;
          r.trajectory = std::move(traj);
          r.record = inj.record;
        } else {
          Trajectory traj = run_episode(plan, std::nullopt, cfg.frame_rate, s);
          if (traj.outcome != Outcome::Success) {
            ++r.discarded;
            continue;
          }
          r.trajectory = std::move(traj);
        }
      } catch (const PlanInfeasible&) {
        ++r.discarded;
        continue;
      }
      break;
    }
    r.qa = synthesize_qa(r.trajectory, r.record, qa_seed, annotator.get());
    if (annotator && r.record) {
      r.fallback = std::any_of(r.qa.begin(), r.qa.end(), [](const QAItem& q) {
        return q.provenance == AnswerProvenance::RuleFallback;
      });
    }
  });

  GenerateSummary sum;
  json files = json::array();
  json trajectories = json::array();
  std::vector<std::pair<std::string, std::string>> record_lines;
  std::vector<QAItem> qa;
  std::set<std::string> seen;

  auto add_file = [&](const std::string& rel, const std::string& content) {
    write_atomic(cfg.out / rel, content);
    files.push_back({{"path", rel}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
  };

  std::vector<std::size_t> order(results.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return trajectory_id(results[a].trajectory) < trajectory_id(results[b].trajectory);
  });
  for (std::size_t i : order) {
    JobResult& r = results[i];
    const std::string id = trajectory_id(r.trajectory);
    if (!seen.insert(id).second) throw IntegrityError("duplicate trajectory id " + id);
    const std::string rel = std::string(kTrajectoryDir) + "/" + id + ".jsonl";
    add_file(rel, trajectory_to_jsonl(r.trajectory));
    const Outcome o = r.trajectory.outcome;
    trajectories.push_back(
        {{"id", id},
         {"task", r.trajectory.plan.task_id},
         {"category", to_string(r.trajectory.plan.category)},
         {"variant", r.trajectory.plan.scene.variant},
         {"taxonomy", r.record ? json(to_string(r.record->taxonomy)) : json(nullptr)},
         {"outcome", o == Outcome::Success ? "success" : "failure"},
         {"duration", round9(r.trajectory.duration)},
         {"file", rel}});
    if (r.record) {
      record_lines.emplace_back(r.record->id, dump_line(to_json(*r.record)) + "\n");
      ++sum.failures;
    } else {
      ++sum.successes;
    }
    sum.discarded += r.discarded;
    sum.annotator_fallbacks += r.fallback ? 1 : 0;
    for (auto& q : r.qa) qa.push_back(std::move(q));
  }
  std::stable_sort(qa.begin(), qa.end(), [](const QAItem& a, const QAItem& b) {
    if (a.trajectory_id != b.trajectory_id) return a.trajectory_id < b.trajectory_id;
    return type_rank(a.question_type) < type_rank(b.question_type);
  });

  std::string records_text;
  for (const auto& [id, line] : record_lines) records_text += line;
  add_file(kRecordsFile, records_text);
  std::string qa_text;
  for (const auto& q : qa) qa_text += dump_line(to_json(q)) + "\n";
  add_file(kQaFile, qa_text);

  sum.trajectories = static_cast<int>(results.size());
  sum.qa_items = static_cast<int>(qa.size());

  json config{{"seed", cfg.seed},
              {"tasks", tasks},
              {"failures_per_task", cfg.failures_per_task},
              {"successes_per_task", cfg.successes_per_task},
              {"taxonomy", cfg.taxonomy ? json(to_string(*cfg.taxonomy)) : json(nullptr)},
              {"frame_rate", cfg.frame_rate},
              {"annotator_endpoint", cfg.annotator_endpoint}};
  json manifest{{"config", config},
                {"counts",
                 {{"trajectories", sum.trajectories},
                  {"failures", sum.failures},
                  {"successes", sum.successes},
                  {"qa_items", sum.qa_items},
                  {"discarded", sum.discarded},
                  {"annotator_fallbacks", sum.annotator_fallbacks}}},
                {"trajectories", trajectories},
                {"files", files}};
  sum.manifest = cfg.out / kManifestFile;
  write_atomic(sum.manifest, manifest.dump(2) + "\n");
  return sum;
}

json verify_manifest(const fs::path& dataset_dir) {
  const fs::path mpath = dataset_dir / kManifestFile;
  if (!fs::exists(mpath)) throw IntegrityError("missing manifest: " + mpath.string());
  json m;
  try {
    m = json::parse(read_file(mpath));
  } catch (const json::exception& e) {
    throw IntegrityError("corrupt manifest " + mpath.string() + ": " + e.what());
  }
  if (!m.is_object() || !m.contains("files") || !m["files"].is_array()) {
    throw IntegrityError("corrupt manifest " + mpath.string() + ": no file list");
  }
  std::vector<std::string> bad;
  for (const auto& f : m["files"]) {
    const std::string rel = f.value("path", std::string{});
    const fs::path p(rel);
    bool escapes = rel.empty() || p.is_absolute();
    for (const auto& part : p) escapes = escapes || part == "..";
    if (escapes) {
      bad.push_back(rel + " (path outside dataset)");
      continue;
    }
    const fs::path full = dataset_dir / p;
    if (!fs::exists(full)) {
      bad.push_back(rel + " (missing)");
      continue;
    }
    if (sha256_hex(read_file(full)) != f.value("sha256", std::string{})) {
      bad.push_back(rel + " (digest mismatch)");
    }
  }
  if (!bad.empty()) {
    std::string msg = "dataset does not match its manifest:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw IntegrityError(msg);
  }
  return m;
}

std::size_t duration_bucket(double seconds) {
  std::size_t i = 0;
  while (i < kDurationEdges.size() && seconds >= kDurationEdges[i]) ++i;
  return i;
}

std::string duration_bucket_label(std::size_t i) {
  char buf[32];
  if (i >= kDurationEdges.size()) {
    std::snprintf(buf, sizeof buf, "%g+", kDurationEdges.back());
  } else {
    std::snprintf(buf, sizeof buf, "%g-%g", i == 0 ? 0.0 : kDurationEdges[i - 1], kDurationEdges[i]);
  }
  return buf;
}

DatasetStats compute_stats(const fs::path& dataset_dir) {
  const json m = verify_manifest(dataset_dir);
  DatasetStats s;
  std::map<std::string, std::vector<double>> durations;
  for (const auto& e : m.value("trajectories", json::array())) {
    const Trajectory t = trajectory_from_jsonl(read_file(dataset_dir / e.at("file").get<std::string>()));
    ++s.trajectories;
    ++s.by_task[t.plan.task_id];
    ++s.by_category[std::string(to_string(t.plan.category))];
    ++s.by_outcome[t.outcome == Outcome::Success ? "success" : "failure"];
    if (e.contains("taxonomy") && e["taxonomy"].is_string()) {
      ++s.by_taxonomy[e["taxonomy"].get<std::string>()];
    }
    ++s.duration_histogram[duration_bucket(t.duration)];
    durations[t.plan.task_id].push_back(t.duration);
  }
  for (auto& [task, d] : durations) {
    double sum = 0.0;
    for (double x : d) sum += x;
    s.mean_duration_by_task[task] = sum / static_cast<double>(d.size());
  }
  const fs::path qa = dataset_dir / kQaFile;
  if (fs::exists(qa)) {
    for (const auto& item : read_corpus(qa)) {
      ++s.qa_by_type[std::string(to_string(item.question_type))];
      ++s.qa_items;
    }
  }
  return s;
}

json to_json(const DatasetStats& s) {
  json hist = json::array();
  for (std::size_t i = 0; i < s.duration_histogram.size(); ++i) {
    hist.push_back({{"bucket", duration_bucket_label(i)}, {"count", s.duration_histogram[i]}});
  }
  json means = json::object();
  for (const auto& [k, v] : s.mean_duration_by_task) means[k] = round9(v);
  return {{"trajectories", s.trajectories},
          {"by_task", s.by_task},
          {"by_category", s.by_category},
          {"by_taxonomy", s.by_taxonomy},
          {"by_outcome", s.by_outcome},
          {"duration_histogram", hist},
          {"mean_duration_by_task", means},
          {"qa_items", s.qa_items},
          {"qa_by_type", s.qa_by_type}};
}

std::string stats_text(const DatasetStats& s) {
  std::ostringstream o;
  char buf[128];
  o << "trajectories " << s.trajectories << "\n";
  auto section = [&](const char* title, const std::map<std::string, int>& m) {
    o << "\n" << title << "\n";
    for (const auto& [k, v] : m) {
      std::snprintf(buf, sizeof buf, "  %-28s %6d\n", k.c_str(), v);
      o << buf;
    }
  };
  section("by outcome", s.by_outcome);
  section("by category", s.by_category);
  section("by taxonomy", s.by_taxonomy);
  section("by task", s.by_task);
  o << "\nduration histogram (s)\n";
  for (std::size_t i = 0; i < s.duration_histogram.size(); ++i) {
    std::snprintf(buf, sizeof buf, "  %-28s %6d\n", duration_bucket_label(i).c_str(),
                  s.duration_histogram[i]);
    o << buf;
  }
  o << "\nmean duration by task (s)\n";
  for (const auto& [k, v] : s.mean_duration_by_task) {
    std::snprintf(buf, sizeof buf, "  %-28s %6.2f\n", k.c_str(), v);
    o << buf;
  }
  section("qa items by type", s.qa_by_type);
  o << "\nqa items " << s.qa_items << "\n";
  return o.str();
}

DatasetStats cmd_stats(const fs::path& dataset_dir, const fs::path& out) {
  const DatasetStats s = compute_stats(dataset_dir);
  write_atomic(out / "stats.json", to_json(s).dump(2) + "\n");
  write_atomic(out / "stats.txt", stats_text(s));
  write_atomic(out / "duration_histogram.svg", histogram_svg(s));
  write_atomic(out / "task_durations.svg", task_duration_svg(s));
  return s;
}

std::vector<QAItem> read_corpus(const fs::path& qa_file) {
  std::vector<QAItem> items;
  const auto lines = lines_of(read_file(qa_file));
  std::set<std::string> ids;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      QAItem it = qa_item_from_json(json::parse(lines[i]));
      if (!ids.insert(it.id).second) throw IntegrityError("duplicate id " + it.id);
      items.push_back(std::move(it));
    } catch (const std::exception& e) {
      throw IntegrityError(qa_file.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return items;
}

AnswerFile read_answers(const fs::path& path, const std::vector<QAItem>& items) {
  std::set<std::string> known;
  for (const auto& it : items) known.insert(it.id);
  AnswerFile out;
  static const std::regex id_re(R"re("id"\s*:\s*"((?:[^"\\]|\\.)*)")re");
  const auto lines = lines_of(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = path.string() + ":" + std::to_string(i + 1) + ": ";
    json j;
    std::string id;
    bool parsed = true;
    try {
      j = json::parse(lines[i]);
    } catch (const json::exception&) {
      parsed = false;
    }
    if (parsed && j.is_object() && j.contains("id") && j["id"].is_string()) {
      id = j["id"].get<std::string>();
    } else {
      std::smatch m;
      if (!std::regex_search(lines[i], m, id_re)) {
        throw IntegrityError(where + "unreadable line with no item id");
      }
      id = m[1].str();
      parsed = false;
    }
    if (!known.count(id)) {
      out.diagnostics.push_back(where + "unknown item id " + id);
      continue;
    }
    if (!parsed || !j.contains("answer") || !j["answer"].is_string()) {
      out.diagnostics.push_back(where + "no usable answer for " + id + ", scored as unanswered");
      continue;
    }
    if (out.answers.count(id)) {
      out.diagnostics.push_back(where + "duplicate answer for " + id + ", first one kept");
      continue;
    }
    out.answers[id] = j["answer"].get<std::string>();
  }
  return out;
}

std::map<std::string, std::string> reference_answers(const std::vector<QAItem>& items) {
  std::map<std::string, std::string> out;
  for (const auto& it : items) out[it.id] = it.reference_answer;
  return out;
}

std::map<std::string, std::string> random_answers(const std::vector<QAItem>& items,
                                                  std::uint64_t seed) {
  std::map<std::string, std::string> out;
  for (const auto& it : items) {
    if (it.mc) {
      Rng rng(derive_seed(seed, {hash_string(it.id)}));
      out[it.id] = option_label(static_cast<int>(rng.index(it.mc->options.size())));
    } else {
      out[it.id] = "No answer.";
    }
  }
  return out;
}

void verify_corpus(const fs::path& qa_file) {
  const fs::path dir = qa_file.has_parent_path() ? qa_file.parent_path() : fs::path(".");
  if (!fs::exists(dir / kManifestFile)) return;
  const json m = verify_manifest(dir);
  const std::string name = qa_file.filename().string();
  for (const auto& f : m["files"]) {
    if (f.value("path", std::string{}) == name) return;
  }
  throw IntegrityError(qa_file.string() + " is not listed in the manifest next to it");
}

EvaluationReport cmd_evaluate(const fs::path& qa_file, const std::map<std::string, std::string>& answers,
                              Judge* judge, const fs::path& out, int concurrency) {
  verify_corpus(qa_file);
  const auto items = read_corpus(qa_file);
  EvaluationReport rep = evaluate(items, answers, judge, concurrency);
  write_atomic(out / "report.json", to_json(rep).dump(2) + "\n");
  return rep;
}

json cmd_loop(const LoopConfig& cfg) {
  if (cfg.episodes < 1) throw ConfigError("episodes must be at least 1");
  if (cfg.critics.empty()) throw ConfigError("name at least one critic");
  if (cfg.policy != "scripted" && cfg.policy != "expert") {
    throw ConfigError("policy must be 'scripted' or 'expert'");
  }
  const auto tasks = resolve_tasks(cfg.tasks);
  PolicyFactory policy = [&]() -> std::unique_ptr<Policy> {
    if (cfg.policy == "expert") return std::make_unique<ExpertPolicy>();
    ScriptedNoisyPolicy::Options o;
    o.compliance = cfg.compliance;
    return std::make_unique<ScriptedNoisyPolicy>(o);
  };

  json rows = json::array();
  json status = json::object();
  std::string sessions_text;
  for (const auto& c : cfg.critics) {
    CorrectionLevel level = CorrectionLevel::Low;
    CriticFactory critic;
    if (c.name == "null") {
      critic = [](std::uint64_t) { return std::make_unique<NullCritic>(); };
    } else if (c.name == "random") {
      critic = [](std::uint64_t s) { return std::make_unique<RandomCritic>(s); };
    } else if (c.name == "oracle-low" || c.name == "oracle") {
      critic = [](std::uint64_t) { return std::make_unique<OracleCritic>(CorrectionLevel::Low); };
    } else if (c.name == "oracle-high") {
      level = CorrectionLevel::High;
      critic = [](std::uint64_t) { return std::make_unique<OracleCritic>(CorrectionLevel::High); };
    } else if (c.name == "remote" || c.name == "remote-high") {
      if (c.endpoint.empty()) throw ConfigError("critic 'remote' needs --critic-endpoint");
      if (c.name == "remote-high") level = CorrectionLevel::High;
      const Endpoint ep = endpoint_from_env(c.endpoint, kCriticKeyEnv);
      critic = [ep, level](std::uint64_t) { return std::make_unique<RemoteCritic>(ep, level); };
    } else {
      throw ConfigError("unknown critic: " + c.name);
    }
    RateTable t = batch_rates(tasks, cfg.episodes, policy, critic, cfg.seed, cfg.pause_fraction,
                              level, cfg.concurrency, cfg.frame_rate);
    int calls = 0, failed = 0;
    for (const auto& s : t.sessions) {
      for (const auto& a : s.attempts) {
        if (a.outcome == Outcome::Success || &a == &s.attempts.back()) continue;
        ++calls;
        failed += a.critic_failed ? 1 : 0;
      }
      json sj = to_json(s);
      sj["critic"] = c.name;
      sessions_text += dump_line(sj) + "\n";
    }
    status[c.name] = {{"critic_calls", calls},
                      {"critic_failures", failed},
                      {"status", calls > 0 && failed == calls ? "failed" : "ok"}};
    const json tj = to_json(t);
    for (json row : tj["rows"]) {
      row["critic"] = c.name;
      rows.push_back(row);
    }
  }
  json table{{"tasks", tasks},
             {"episodes_per_task", cfg.episodes},
             {"policy", cfg.policy},
             {"compliance", cfg.compliance},
             {"pause_fraction", cfg.pause_fraction},
             {"seed", cfg.seed},
             {"rows", rows},
             {"critics", status}};
  write_atomic(cfg.out / "loop.json", table.dump(2) + "\n");
  write_atomic(cfg.out / "sessions.jsonl", sessions_text);
  return table;
}

fs::path cmd_render(const fs::path& trajectory_file, const fs::path& out) {
  const Trajectory t = trajectory_from_jsonl(read_file(trajectory_file));
  const fs::path target = out / (trajectory_id(t) + ".svg");
  write_atomic(target, render_svg(t));
  return target;
}

}  // namespace manifail
