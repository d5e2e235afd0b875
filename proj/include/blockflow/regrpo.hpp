#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blockflow/errors.hpp"
#include "blockflow/util.hpp"

namespace blockflow {

enum class AdvantageMode { MeanBaseline, StdNormalized };

struct ScheduleSpec {
  enum class Kind { Linear, Exponential, NonReplacement };
  Kind kind = Kind::Linear;
  double p0 = 1.0;
  double horizon = 10;  // Linear: iterations until p reaches 0
  double rate = 0.5;    // Exponential decay per iteration
};

struct RegrpoConfig {
  int group_size = 8;
  int subgroup1 = 4;
  int subgroup2 = 4;
  double clip = 0.2;
  double kl_beta = 0.04;
  int inner_updates = 1;  // objective-ascent steps per question
  AdvantageMode advantage_mode = AdvantageMode::StdNormalized;
  double advantage_eps = 1e-8;
  ScheduleSpec schedule;
  int reflection_max_words = 150;
  // Rollouts below this total reward count as failed and trigger a
  // reflection.
  double fail_threshold = 0.8;

  void validate() const;
};

// One rollout: macro-level token ids, the tool mask from the transcript,
// the scalar reward and the reflection the rollout was conditioned on
// (empty for subgroup 1).
struct TrajectoryRecord {
  int question = 0;
  std::vector<int> tokens;
  std::vector<uint8_t> mask;  // 1 = model token, 0 = tool token
  double reward = 0;
  int subgroup = 1;
  std::string reflection;
  int tool_calls = 0;
};

// Per-token log-probabilities of the same trajectory under the current,
// rollout-time and reference policies.
struct PolicyEval {
  std::vector<double> logp_new;
  std::vector<double> logp_old;
  std::vector<double> logp_ref;
};

// Group-relative advantages, broadcast per trajectory. MeanBaseline:
// r_i - mean(r). StdNormalized: (r_i - mean) / (std + eps), population std.
// Fewer than two rewards is a ConfigError.
std::vector<double> group_advantages(std::span<const double> rewards, AdvantageMode mode,
                                     double eps = 1e-8);

struct ObjectiveResult {
  double value = 0;
  std::vector<double> per_token;  // 0 at masked-out positions
};

// Masked clipped surrogate with KL penalty:
//   ratio_t   = exp(logp_new - logp_old)
//   term_t    = min(ratio_t * A, clip(ratio_t, 1-eps, 1+eps) * A) - beta * kl_t
//   kl_t      = exp(logp_ref - logp_new) - (logp_ref - logp_new) - 1
//   objective = sum over mask=1 of term_t / (number of mask=1 tokens)
// Tool tokens never contribute. An all-zero mask is a DegenerateTrajectory.
ObjectiveResult masked_objective(const TrajectoryRecord& traj, const PolicyEval& eval,
                                 double advantage, const RegrpoConfig& cfg);

// Reflection-injection probability at a 1-based iteration. Non-replacement
// returns p0; exhaustion is handled by the buffer.
double schedule_p(int iteration, const ScheduleSpec& schedule);

class ReflectionBuffer {
 public:
  void clear();
  void add(std::string text);
  bool empty() const { return entries_.empty(); }
  size_t size() const { return entries_.size(); }
  // Empty string when the buffer is empty, the draw fails, or (with
  // consume=true) every entry has been used. p <= 0 never draws.
  std::string select(double p, Rng& rng, bool consume = false);

 private:
  std::vector<std::string> entries_;
  std::vector<bool> used_;
};

struct ReflectionFilterResult {
  enum class Status { Accepted, Rejected, NoReflection };
  Status status = Status::Rejected;
  std::string text;
};

// Rejects reflections that leak the reference answer: any shared normalized
// word 4-gram, any contiguous run of answer tokens covering >= 60% of the
// answer, or more than max_words words. The literal text "None" means no
// reflection.
ReflectionFilterResult filter_reflection(std::string_view text, std::string_view reference_answer,
                                         int max_words = 150);

// Policy surface the trainer drives. Rollouts draw from the rollout-time
// snapshot; evaluate() reports all three per-token log-prob vectors.
class PolicyAdapter {
 public:
  virtual ~PolicyAdapter() = default;
  virtual TrajectoryRecord rollout(int question, std::string_view reflection, Rng& rng) = 0;
  virtual PolicyEval evaluate(const TrajectoryRecord& traj) const = 0;
  virtual void snapshot_old() = 0;
  virtual void snapshot_ref() = 0;
  virtual std::string reflect(const TrajectoryRecord& failed) = 0;
  // One ascent step on the mean masked objective over the group.
  virtual void update(std::span<const TrajectoryRecord> group, std::span<const double> advantages,
                      const RegrpoConfig& cfg) = 0;
  // Reference answer used by the leakage filter for this question.
  virtual std::string reference_answer(int question) const = 0;
};

struct IterationReport {
  int iteration = 0;
  double mean_reward = 0;
  double mean_objective = 0;
  int reflections_generated = 0;
  int reflections_used = 0;
  int tool_calls = 0;
};

// One outer iteration of the two-subgroup scheme: subgroup 1 rolls out with
// empty reflections and reflects on failures; subgroup 2 rolls out with
// reflections sampled at probability p; advantages are computed jointly
// over all G rewards; inner_updates ascent steps follow per question.
// Reflection generation is skipped when p <= 0 or reflection is disabled,
// which makes the p0 = 0 run coincide with plain GRPO exactly.
IterationReport regrpo_iteration(int iteration, int num_questions, PolicyAdapter& policy,
                                 const RegrpoConfig& cfg, uint64_t master_seed,
                                 bool enable_reflection);

}  // namespace blockflow
