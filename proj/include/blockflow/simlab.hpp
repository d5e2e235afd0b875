#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "blockflow/catalog.hpp"
#include "blockflow/model.hpp"
#include "blockflow/regrpo.hpp"

namespace blockflow {

// Synthetic single-question environment over a fixed macro-action alphabet.
// An episode is `turns()` sequential decisions; tool actions append one
// tool-origin result token. Environments are immutable after construction
// and safe to share across seeds and threads.
class SyntheticEnv {
 public:
  virtual ~SyntheticEnv() = default;
  virtual int turns() const = 0;
  virtual int num_actions() const = 0;
  virtual bool action_is_tool(int action) const = 0;
  // Reward of a completed action sequence (length == turns()).
  virtual double score(std::span<const int> actions) const = 0;
  // Scripted reflection on a failed sequence; "None" when it has nothing
  // to say. Outputs always satisfy the leakage filter.
  virtual std::string reflect(std::span<const int> actions) const = 0;
  // Per-action sampling bias induced by a reflection text; empty means no
  // bias. Unknown text maps to no bias.
  virtual std::vector<double> reflection_bias(std::string_view reflection) const = 0;
  virtual std::string reference_answer() const = 0;
};

struct EditQuestOptions {
  // Fraction of target blocks pre-placed in the starting model.
  double base_fraction = 0.5;
  int decoys = 3;
  int extra_turns = 1;
  double hint_bias = 3.0;
};

// Edit environment whose hidden target is a validator-clean model. Actions
// are edit-script statements (block adds, connection appends), a
// search_blocks call and a no-op wait; reward is the Create-task total of
// the assembled model against the target. The scripted reflector turns the
// first validator diagnostic (or the first missing element) into a hint
// that biases the matching action.
std::unique_ptr<SyntheticEnv> make_edit_env(const SystemModel& target, const Catalog& catalog,
                                            EditQuestOptions options = {});

// Counting QA over a model: "how many blocks of the given type". Actions
// are the candidate counts 0..max_count; reward is exact-match. The
// reflector reports the direction of the error.
std::unique_ptr<SyntheticEnv> make_counting_env(const SystemModel& model,
                                                const std::string& type_name, int max_count = 7);

// Tabular softmax policy with rollout-time and reference snapshots.
class TabularPolicy {
 public:
  TabularPolicy(int states, int actions, double init = 0.0);

  int states() const { return states_; }
  int actions() const { return actions_; }

  double& logit(int s, int a) { return table_[index(s, a)]; }
  double logit(int s, int a) const { return table_[index(s, a)]; }
  std::vector<double>& table() { return table_; }
  const std::vector<double>& table() const { return table_; }
  const std::vector<double>& table_old() const { return old_; }
  const std::vector<double>& table_ref() const { return ref_; }

  void snapshot_old() { old_ = table_; }
  void snapshot_ref() { ref_ = table_; }

  enum class Which { Current, Old, Ref };
  // Exact log-softmax over the first `n` actions of a row, with optional
  // per-action bias. Throws EvalError on an unknown state.
  std::vector<double> log_softmax(Which which, int state, int n,
                                  std::span<const double> bias = {}) const;

 private:
  size_t index(int s, int a) const { return static_cast<size_t>(s) * actions_ + a; }
  int states_;
  int actions_;
  std::vector<double> table_;
  std::vector<double> old_;
  std::vector<double> ref_;
};

// Binds a question set (one env per question) to a tabular policy and
// implements the trainer's policy surface with analytic gradients.
class TabularAdapter : public PolicyAdapter {
 public:
  TabularAdapter(std::vector<const SyntheticEnv*> envs, double learning_rate);

  TabularPolicy& policy() { return policy_; }
  const TabularPolicy& policy() const { return policy_; }
  int num_questions() const { return static_cast<int>(envs_.size()); }

  TrajectoryRecord rollout(int question, std::string_view reflection, Rng& rng) override;
  PolicyEval evaluate(const TrajectoryRecord& traj) const override;
  void snapshot_old() override { policy_.snapshot_old(); }
  void snapshot_ref() override { policy_.snapshot_ref(); }
  std::string reflect(const TrajectoryRecord& failed) override;
  void update(std::span<const TrajectoryRecord> group, std::span<const double> advantages,
              const RegrpoConfig& cfg) override;
  std::string reference_answer(int question) const override;

  // Exact gradient of the group-mean masked objective with respect to the
  // current logit table, via softmax calculus. Exposed for the
  // finite-difference check.
  std::vector<double> analytic_gradient(std::span<const TrajectoryRecord> group,
                                        std::span<const double> advantages,
                                        const RegrpoConfig& cfg) const;
  // Group-mean masked objective under the current table (the quantity the
  // gradient differentiates).
  double objective(std::span<const TrajectoryRecord> group, std::span<const double> advantages,
                   const RegrpoConfig& cfg) const;

  // Model actions of a trajectory, tool tokens stripped.
  std::vector<int> decode_actions(const TrajectoryRecord& traj) const;

 private:
  int state_of(int question, int turn) const { return offsets_[question] + turn; }

  std::vector<const SyntheticEnv*> envs_;
  std::vector<int> offsets_;
  double learning_rate_;
  TabularPolicy policy_;
};

struct SeedCurve {
  uint64_t seed = 0;
  std::vector<IterationReport> iterations;
  // First 1-based iteration with mean reward >= threshold; iterations+1
  // when never reached.
  int iters_to_threshold = 0;
};

struct ExperimentReport {
  std::string arm;
  double threshold = 0;
  std::vector<SeedCurve> curves;

  double median_iters_to_threshold() const;
};

struct ComparisonConfig {
  RegrpoConfig regrpo;
  int iterations = 120;
  double threshold = 0.9;
  double learning_rate = 6.0;
  bool parallel_seeds = true;
};

// Runs GRPO (reflection disabled) and the reflective arm over shared
// per-seed rollout streams; identical seeds yield byte-identical reports,
// and with p0 = 0 the two arms coincide exactly.
std::pair<ExperimentReport, ExperimentReport> run_comparison(
    std::span<const SyntheticEnv* const> envs, const ComparisonConfig& cfg,
    std::span<const uint64_t> seeds);

// Line-delimited records, one per (seed, iteration).
std::string experiment_to_jsonl(const ExperimentReport& report);
// Plot-ready CSV: iteration, then one reward column per seed.
std::string experiment_to_csv(const ExperimentReport& report);

}  // namespace blockflow
