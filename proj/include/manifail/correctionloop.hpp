#pragma once

// Pause, critique, revise and re-run: a correction session over the simulator
// with pluggable policies and critics.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "manifail/grammar.hpp"
#include "manifail/injector.hpp"
#include "manifail/remote.hpp"
#include "manifail/simulator.hpp"

namespace manifail {

inline constexpr int kMaxAttempts = 5;
inline constexpr double kDefaultPauseFraction = 0.6;
inline constexpr std::string_view kPromptSeparator = " Correction: ";
inline constexpr std::string_view kProceedPhrase = "proceed as planned";

enum class CorrectionLevel { High, Low };
std::string_view to_string(CorrectionLevel l);
CorrectionLevel correction_level_from_string(std::string_view s);

// Instructions appended to the original prompt, in order.
std::vector<std::string> appended_instructions(const std::string& prompt);

class Policy {
 public:
  virtual ~Policy() = default;
  // Called once per session before the first attempt.
  virtual void reset(const TaskPlan& plan, std::uint64_t seed) = 0;
  // Substages to execute under `prompt`; nullopt runs the expert plan.
  virtual std::optional<std::vector<SubstageTarget>> substages(const TaskPlan& plan,
                                                               const std::string& prompt) = 0;
  // Ground truth of the fault the policy carries, if any.
  virtual std::optional<FailureRecord> fault() const { return std::nullopt; }
};

class ExpertPolicy : public Policy {
 public:
  void reset(const TaskPlan&, std::uint64_t) override {}
  std::optional<std::vector<SubstageTarget>> substages(const TaskPlan&,
                                                       const std::string&) override {
    return std::nullopt;
  }
};

// Carries one latent fault and reduces it according to the instructions found
// after the prompt separator. A move word opposing a residual component
// cancels it; a word along the original deviation restores it. Each
// instruction is obeyed with probability `compliance`.
class ScriptedNoisyPolicy : public Policy {
 public:
  struct Options {
    double compliance{1.0};
    std::optional<FailureTaxonomy> taxonomy;  // unset: uniform over applicable ones
    std::optional<FailureSpec> spec;          // fixed fault, overrides sampling
  };

  ScriptedNoisyPolicy() = default;
  explicit ScriptedNoisyPolicy(Options o) : opts_(std::move(o)) {}

  void reset(const TaskPlan& plan, std::uint64_t seed) override;
  std::optional<std::vector<SubstageTarget>> substages(const TaskPlan& plan,
                                                       const std::string& prompt) override;
  std::optional<FailureRecord> fault() const override { return record_; }

  // Residual fault after applying the instructions in `prompt`; nullopt when
  // fully corrected. Exposed for tests.
  std::optional<FailureSpec> residual(const std::string& prompt) const;
  // Instructions (or sentences) that changed nothing, from the last call.
  const std::vector<std::string>& ignored() const { return ignored_; }

 private:
  Options opts_;
  std::uint64_t seed_{0};
  std::optional<FailureSpec> spec_;
  std::optional<FailureRecord> record_;
  std::vector<std::string> ignored_;
};

struct CritiqueRequest {
  const TaskPlan* plan{nullptr};
  std::string task_prompt;  // original instruction
  std::string prompt;       // prompt of the paused attempt
  Trajectory segment;       // execution up to the pause
  CorrectionLevel level{CorrectionLevel::Low};
  std::optional<FailureRecord> truth;  // only the oracle looks at it
  int attempt{1};
};

class Critic {
 public:
  virtual ~Critic() = default;
  // Throwing or returning nullopt counts as a critic failure.
  virtual std::optional<std::string> critique(const CritiqueRequest& req) = 0;
};

class OracleCritic : public Critic {
 public:
  explicit OracleCritic(CorrectionLevel level = CorrectionLevel::Low) : level_(level) {}
  std::optional<std::string> critique(const CritiqueRequest& req) override;

 private:
  CorrectionLevel level_;
};

class NullCritic : public Critic {
 public:
  std::optional<std::string> critique(const CritiqueRequest&) override { return std::string{}; }
};

// One or two random move phrases, seeded per attempt.
class RandomCritic : public Critic {
 public:
  explicit RandomCritic(std::uint64_t seed) : seed_(seed) {}
  std::optional<std::string> critique(const CritiqueRequest& req) override;

 private:
  std::uint64_t seed_;
};

class RemoteCritic : public Critic {
 public:
  RemoteCritic(Endpoint ep, CorrectionLevel level) : ep_(std::move(ep)), level_(level) {}
  std::optional<std::string> critique(const CritiqueRequest& req) override;

 private:
  Endpoint ep_;
  CorrectionLevel level_;
};

// Oracle instruction for a record; magnitude-free. A record with nothing to
// undo (zero deviation) yields "proceed as planned".
std::string oracle_instruction(const TaskPlan& plan, const FailureRecord& record,
                               CorrectionLevel level);

struct Attempt {
  std::string prompt;
  double pause_time{0.0};
  std::string instruction;  // empty on the final or successful attempt
  bool critic_failed{false};
  Outcome outcome{Outcome::Failure};
  double duration{0.0};
  std::vector<std::string> ignored;  // instructions the policy could not use
};

struct CorrectionSession {
  std::string task_id;
  std::uint64_t seed{0};
  std::optional<FailureRecord> fault;
  std::vector<Attempt> attempts;
  bool success_after_first{false};
  bool success_final{false};

  int attempts_used() const { return static_cast<int>(attempts.size()); }
};

CorrectionSession run_session(const std::string& task_id, Policy& policy, Critic& critic,
                              double pause_fraction, std::uint64_t seed,
                              CorrectionLevel level = CorrectionLevel::Low,
                              double frame_rate = kDefaultFrameRate);

nlohmann::json to_json(const CorrectionSession& s);

struct RateRow {
  std::string task_id;
  int episodes{0};
  double after_first{0.0};
  double after_final{0.0};
};

struct RateTable {
  std::vector<RateRow> rows;
  double average_first{0.0};  // mean of per-task rates
  double average_final{0.0};
  std::vector<CorrectionSession> sessions;
};

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;
using CriticFactory = std::function<std::unique_ptr<Critic>(std::uint64_t session_seed)>;

// Episode e of task t uses seed derive_seed(seed, {hash(t), e}), shared across
// critics so comparisons are paired.
RateTable batch_rates(const std::vector<std::string>& task_ids, int episodes_per_task,
                      const PolicyFactory& policy, const CriticFactory& critic, std::uint64_t seed,
                      double pause_fraction = kDefaultPauseFraction,
                      CorrectionLevel level = CorrectionLevel::Low, int concurrency = 1,
                      double frame_rate = kDefaultFrameRate);

nlohmann::json to_json(const RateTable& t, bool include_sessions = false);

}  // namespace manifail
