#pragma once

// Batch commands behind the CLI: dataset generation, statistics, evaluation,
// correction-loop tables and per-episode plots.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "manifail/correctionloop.hpp"
#include "manifail/evalharness.hpp"
#include "manifail/injector.hpp"
#include "manifail/qa_types.hpp"
#include "manifail/simulator.hpp"

namespace manifail {

namespace fs = std::filesystem;

inline constexpr int kMaxRegenerations = 50;
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kQaFile = "qa.jsonl";
inline constexpr const char* kRecordsFile = "records.jsonl";
inline constexpr const char* kTrajectoryDir = "trajectories";

std::string sha256_hex(const std::string& data);

// Writes to a temporary sibling and renames it into place.
void write_atomic(const fs::path& path, const std::string& content);
std::string read_file(const fs::path& path);

struct RunConfig {
  std::uint64_t seed{0};
  std::vector<std::string> tasks;  // empty: whole catalog
  int failures_per_task{20};
  int successes_per_task{3};
  std::optional<FailureTaxonomy> taxonomy;
  double frame_rate{kDefaultFrameRate};
  fs::path out{"out"};
  std::string annotator_endpoint;
  int concurrency{1};
};

// Checks counts, rate, concurrency and task names; throws ConfigError.
void validate(const RunConfig& cfg);

struct GenerateSummary {
  int trajectories{0};
  int failures{0};
  int successes{0};
  int qa_items{0};
  int discarded{0};
  int annotator_fallbacks{0};
  fs::path manifest;
};

GenerateSummary cmd_generate(const RunConfig& cfg);

// Re-hashes every file the manifest lists; throws IntegrityError naming each
// missing or modified file. Returns the parsed manifest.
nlohmann::json verify_manifest(const fs::path& dataset_dir);

// Duration buckets [0,10), [10,20), ..., [50,60), [60,inf) seconds.
inline constexpr std::array<double, 6> kDurationEdges{10, 20, 30, 40, 50, 60};
std::size_t duration_bucket(double seconds);
std::string duration_bucket_label(std::size_t i);

struct DatasetStats {
  int trajectories{0};
  std::map<std::string, int> by_task;
  std::map<std::string, int> by_category;
  std::map<std::string, int> by_taxonomy;
  std::map<std::string, int> by_outcome;
  std::vector<int> duration_histogram = std::vector<int>(kDurationEdges.size() + 1, 0);
  std::map<std::string, double> mean_duration_by_task;
  std::map<std::string, int> qa_by_type;
  int qa_items{0};
};

DatasetStats compute_stats(const fs::path& dataset_dir);
nlohmann::json to_json(const DatasetStats& s);
std::string stats_text(const DatasetStats& s);
std::string histogram_svg(const DatasetStats& s);
std::string task_duration_svg(const DatasetStats& s);

// Writes stats.json, stats.txt and the two plots into `out`.
DatasetStats cmd_stats(const fs::path& dataset_dir, const fs::path& out);

std::vector<QAItem> read_corpus(const fs::path& qa_file);

struct AnswerFile {
  std::map<std::string, std::string> answers;
  std::vector<std::string> diagnostics;  // one per malformed or unknown line
};

// Lines of {"id": ..., "answer": ...}. A line whose id can be read but whose
// answer cannot is kept as a diagnostic and the item stays unanswered; a line
// with no readable id rejects the file (IntegrityError).
AnswerFile read_answers(const fs::path& path, const std::vector<QAItem>& items);

// Reference answers (oracle ceiling) and uniform random option letters.
std::map<std::string, std::string> reference_answers(const std::vector<QAItem>& items);
std::map<std::string, std::string> random_answers(const std::vector<QAItem>& items,
                                                  std::uint64_t seed);

// Verifies the corpus against a manifest sitting next to it, if any.
void verify_corpus(const fs::path& qa_file);

EvaluationReport cmd_evaluate(const fs::path& qa_file, const std::map<std::string, std::string>& answers,
                              Judge* judge, const fs::path& out, int concurrency);

struct LoopCritic {
  std::string name;  // null | random | oracle-low | oracle-high | remote
  std::string endpoint;
};

struct LoopConfig {
  std::uint64_t seed{0};
  std::vector<std::string> tasks;
  int episodes{100};
  std::vector<LoopCritic> critics;
  std::string policy{"scripted"};  // scripted | expert
  double compliance{1.0};
  double pause_fraction{kDefaultPauseFraction};
  double frame_rate{kDefaultFrameRate};
  int concurrency{1};
  fs::path out{"out"};
};

// One table with two rows per critic; writes loop.json and sessions.jsonl.
nlohmann::json cmd_loop(const LoopConfig& cfg);

// Top-down (X up the page, +Y to the left) SVG of one trajectory.
std::string render_svg(const Trajectory& t);
fs::path cmd_render(const fs::path& trajectory_file, const fs::path& out);

}  // namespace manifail
