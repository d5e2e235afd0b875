#include "blockflow/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "blockflow/compare.hpp"
#include "blockflow/model_text.hpp"
#include "blockflow/protocol.hpp"
#include "blockflow/reward.hpp"
#include "blockflow/validate.hpp"

namespace blockflow {

namespace {

constexpr int kToolToken = -1;

// At most the first two word tokens of a name, so hints never share a
// 4-gram with the serialized reference model.
std::string short_name(const std::string& name) {
  const auto tokens = word_tokens(name);
  std::string out;
  for (size_t i = 0; i < tokens.size() && i < 2; ++i) {
    if (i) out += " ";
    out += tokens[i];
  }
  return out.empty() ? name : out;
}

class EditQuestEnv final : public SyntheticEnv {
 public:
  struct ActionDef {
    enum class Kind { Edit, Search, Wait };
    Kind kind = Kind::Wait;
    std::string stmt;
    std::string hint;       // empty for decoys/search/wait
    bool correct = false;
    bool adds_solver = false;
  };

  EditQuestEnv(const SystemModel& target, const Catalog& catalog, EditQuestOptions options)
      : catalog_(&catalog), options_(options) {
    target_ = canonicalize(target);
    if (target_.blocks.empty()) throw EnvError("edit environment needs a non-empty target");
    {
      const auto diags = validate(target_, catalog);
      for (const auto& d : diags)
        if (d.severity == Severity::Error)
          throw EnvError("edit environment target must be validator-clean: " + d.code + " " +
                         d.message);
    }
    reference_answer_ = emit_model_text(target_);

    const size_t keep =
        std::min(target_.blocks.size(),
                 static_cast<size_t>(
                     std::ceil(options.base_fraction * static_cast<double>(target_.blocks.size()))));
    for (size_t i = 0; i < keep; ++i)
      base_.add_block(target_.blocks[i].first, target_.blocks[i].second);

    int step = 0;
    for (size_t i = keep; i < target_.blocks.size(); ++i) {
      const auto& [name, inst] = target_.blocks[i];
      ActionDef def;
      def.kind = ActionDef::Kind::Edit;
      def.correct = true;
      def.adds_solver = inst.type_name == "Solver Configuration";
      def.stmt = "sys_dict[\"Blocks\"][\"" + name + "\"] = " + emit_block_json(inst);
      def.hint = def.adds_solver
                     ? "hint " + std::to_string(++step) +
                           " (E006): add a block of kind 'solver configuration'"
                     : "hint " + std::to_string(++step) + ": add a block of kind '" +
                           short_name(inst.type_name) + "'";
      actions_.push_back(std::move(def));
    }
    for (const auto& conn : target_.connections) {
      if (!conn.is_single()) continue;
      ActionDef def;
      def.kind = ActionDef::Kind::Edit;
      def.correct = true;
      def.stmt = "sys_dict[\"Connections\"].append({\"Src\": \"" +
                 render_endpoint(conn.src) + "\", \"Dst\": \"" + render_endpoint(conn.dst) +
                 "\"})";
      def.hint = "hint " + std::to_string(++step) + ": wire from '" +
                 short_name(conn.src.block) + "' toward '" + short_name(conn.dst.block) + "'";
      actions_.push_back(std::move(def));
    }
    num_correct_ = static_cast<int>(actions_.size());
    if (num_correct_ == 0) throw EnvError("edit environment has no edits to learn");

    // Decoys: catalog types absent from the target.
    std::set<std::string> used_types;
    for (const auto& [name, inst] : target_.blocks) used_types.insert(inst.type_name);
    int added = 0;
    for (const auto& def : catalog.defs()) {
      if (added >= options.decoys) break;
      if (used_types.count(def.type_name)) continue;
      ActionDef decoy;
      decoy.kind = ActionDef::Kind::Edit;
      decoy.stmt = "sys_dict[\"Blocks\"][\"Extra " + std::to_string(added + 1) +
                   "\"] = {\"Type\": \"" + def.type_name + "\"}";
      actions_.push_back(std::move(decoy));
      ++added;
    }
    {
      ActionDef search;
      search.kind = ActionDef::Kind::Search;
      actions_.push_back(std::move(search));
      ActionDef wait;
      wait.kind = ActionDef::Kind::Wait;
      actions_.push_back(std::move(wait));
    }

    turns_ = num_correct_ + options.extra_turns;
    for (int a = 0; a < static_cast<int>(actions_.size()); ++a) {
      if (actions_[a].hint.empty()) continue;
      const auto filtered = filter_reflection(actions_[a].hint, reference_answer_);
      if (filtered.status != ReflectionFilterResult::Status::Accepted)
        throw EnvError("environment hint fails the leakage filter: " + actions_[a].hint);
      hint_to_action_.emplace(actions_[a].hint, a);
    }
  }

  int turns() const override { return turns_; }
  int num_actions() const override { return static_cast<int>(actions_.size()); }
  bool action_is_tool(int action) const override {
    return actions_[static_cast<size_t>(action)].kind == ActionDef::Kind::Search;
  }

  SystemModel rebuild(std::span<const int> actions) const {
    SystemModel model = base_;
    for (int a : actions) {
      const auto& def = actions_[static_cast<size_t>(a)];
      if (def.kind != ActionDef::Kind::Edit) continue;
      auto [next, seg] = apply_edit_script(model, def.stmt);
      model = std::move(next);
    }
    return model;
  }

  double score(std::span<const int> actions) const override {
    const SystemModel model = rebuild(actions);
    RewardComponents components;
    components.structure = best_mapping(model, target_).total;
    components.executable = is_executable(model, *catalog_);
    components.format = 1.0;
    components.tool_use = 1.0;
    return total_reward(components, RewardConfig::defaults(TaskKind::Create));
  }

  std::string reflect(std::span<const int> actions) const override {
    const SystemModel model = rebuild(actions);
    std::set<int> applied(actions.begin(), actions.end());
    auto unapplied_correct = [&](bool solver_only) -> int {
      for (int a = 0; a < num_correct_; ++a) {
        if (applied.count(a)) continue;
        if (solver_only && !actions_[static_cast<size_t>(a)].adds_solver) continue;
        return a;
      }
      return -1;
    };
    const auto diags = validate(model, *catalog_);
    if (!diags.empty() && diags.front().code == "E006") {
      const int a = unapplied_correct(/*solver_only=*/true);
      if (a >= 0) return actions_[static_cast<size_t>(a)].hint;
    }
    const int a = unapplied_correct(/*solver_only=*/false);
    if (a >= 0) return actions_[static_cast<size_t>(a)].hint;
    return "None";
  }

  std::vector<double> reflection_bias(std::string_view reflection) const override {
    auto it = hint_to_action_.find(std::string(reflection));
    if (it == hint_to_action_.end()) return {};
    std::vector<double> bias(actions_.size(), 0.0);
    bias[static_cast<size_t>(it->second)] = options_.hint_bias;
    return bias;
  }

  std::string reference_answer() const override { return reference_answer_; }

 private:
  const Catalog* catalog_;
  EditQuestOptions options_;
  SystemModel target_;
  SystemModel base_;
  std::vector<ActionDef> actions_;
  std::map<std::string, int> hint_to_action_;
  int num_correct_ = 0;
  int turns_ = 0;
  std::string reference_answer_;
};

class CountingEnv final : public SyntheticEnv {
 public:
  CountingEnv(const SystemModel& model, const std::string& type_name, int max_count)
      : max_count_(max_count) {
    const SystemModel canon = canonicalize(model);
    for (const auto& [name, inst] : canon.blocks)
      if (inst.type_name == type_name) ++answer_;
    if (answer_ > max_count_) throw EnvError("count exceeds the action range");
    for (int c = 0; c <= max_count_; ++c) {
      if (c == answer_) continue;  // never hint with the true count
      const std::string text = c > answer_
                                   ? "the previous count " + std::to_string(c) + " was too high"
                                   : "the previous count " + std::to_string(c) + " was too low";
      std::vector<double> bias(static_cast<size_t>(max_count_) + 1, 0.0);
      for (int b = 0; b <= max_count_; ++b) {
        if ((c > answer_ && b < c) || (c < answer_ && b > c)) bias[static_cast<size_t>(b)] = 2.5;
      }
      hints_[c] = {text, std::move(bias)};
      const auto filtered = filter_reflection(text, reference_answer());
      if (filtered.status != ReflectionFilterResult::Status::Accepted)
        throw EnvError("environment hint fails the leakage filter: " + text);
    }
  }

  int turns() const override { return 1; }
  int num_actions() const override { return max_count_ + 1; }
  bool action_is_tool(int) const override { return false; }

  double score(std::span<const int> actions) const override {
    return !actions.empty() && actions[0] == answer_ ? 1.0 : 0.0;
  }

  std::string reflect(std::span<const int> actions) const override {
    if (actions.empty() || actions[0] == answer_) return "None";
    auto it = hints_.find(actions[0]);
    return it == hints_.end() ? std::string("None") : it->second.first;
  }

  std::vector<double> reflection_bias(std::string_view reflection) const override {
    for (const auto& [c, entry] : hints_)
      if (entry.first == reflection) return entry.second;
    return {};
  }

  std::string reference_answer() const override { return std::to_string(answer_); }

 private:
  int max_count_;
  int answer_ = 0;
  std::map<int, std::pair<std::string, std::vector<double>>> hints_;
};

}  // namespace

std::unique_ptr<SyntheticEnv> make_edit_env(const SystemModel& target, const Catalog& catalog,
                                            EditQuestOptions options) {
  return std::make_unique<EditQuestEnv>(target, catalog, options);
}

std::unique_ptr<SyntheticEnv> make_counting_env(const SystemModel& model,
                                                const std::string& type_name, int max_count) {
  return std::make_unique<CountingEnv>(model, type_name, max_count);
}

TabularPolicy::TabularPolicy(int states, int actions, double init)
    : states_(states), actions_(actions) {
  table_.assign(static_cast<size_t>(states) * actions, init);
  old_ = table_;
  ref_ = table_;
}

std::vector<double> TabularPolicy::log_softmax(Which which, int state, int n,
                                               std::span<const double> bias) const {
  if (state < 0 || state >= states_) throw EvalError("unknown state " + std::to_string(state));
  if (n < 1 || n > actions_) throw EvalError("bad action count " + std::to_string(n));
  const std::vector<double>& table =
      which == Which::Current ? table_ : (which == Which::Old ? old_ : ref_);
  std::vector<double> z(static_cast<size_t>(n));
  for (int a = 0; a < n; ++a) {
    z[static_cast<size_t>(a)] = table[index(state, a)];
    if (!bias.empty()) z[static_cast<size_t>(a)] += bias[static_cast<size_t>(a)];
  }
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0;
  for (double v : z) sum += std::exp(v - m);
  const double lse = m + std::log(sum);
  for (double& v : z) v -= lse;
  return z;
}

TabularAdapter::TabularAdapter(std::vector<const SyntheticEnv*> envs, double learning_rate)
    : envs_(std::move(envs)),
      learning_rate_(learning_rate),
      policy_(1, 1) {
  if (envs_.empty()) throw ConfigError("adapter needs at least one environment");
  int states = 0;
  int actions = 1;
  offsets_.reserve(envs_.size());
  for (const auto* env : envs_) {
    offsets_.push_back(states);
    states += env->turns();
    actions = std::max(actions, env->num_actions());
  }
  policy_ = TabularPolicy(states, actions);
}

TrajectoryRecord TabularAdapter::rollout(int question, std::string_view reflection, Rng& rng) {
  if (question < 0 || question >= num_questions()) throw EvalError("unknown question");
  const SyntheticEnv& env = *envs_[static_cast<size_t>(question)];
  const auto bias = env.reflection_bias(reflection);
  TrajectoryRecord traj;
  traj.question = question;
  traj.reflection = std::string(reflection);
  std::vector<int> actions;
  actions.reserve(static_cast<size_t>(env.turns()));
  for (int t = 0; t < env.turns(); ++t) {
    const auto logp =
        policy_.log_softmax(TabularPolicy::Which::Old, state_of(question, t), env.num_actions(),
                            bias);
    const double u = rng.uniform();
    double acc = 0;
    int action = env.num_actions() - 1;
    for (int a = 0; a < env.num_actions(); ++a) {
      acc += std::exp(logp[static_cast<size_t>(a)]);
      if (u < acc) {
        action = a;
        break;
      }
    }
    actions.push_back(action);
    traj.tokens.push_back(action);
    traj.mask.push_back(1);
    if (env.action_is_tool(action)) {
      traj.tokens.push_back(kToolToken);
      traj.mask.push_back(0);
      ++traj.tool_calls;
    }
  }
  traj.reward = env.score(actions);
  return traj;
}

std::vector<int> TabularAdapter::decode_actions(const TrajectoryRecord& traj) const {
  std::vector<int> actions;
  for (size_t i = 0; i < traj.tokens.size(); ++i)
    if (traj.mask[i]) actions.push_back(traj.tokens[i]);
  return actions;
}

PolicyEval TabularAdapter::evaluate(const TrajectoryRecord& traj) const {
  if (traj.question < 0 || traj.question >= num_questions()) throw EvalError("unknown question");
  const SyntheticEnv& env = *envs_[static_cast<size_t>(traj.question)];
  const auto bias = env.reflection_bias(traj.reflection);
  PolicyEval eval;
  const size_t n = traj.tokens.size();
  eval.logp_new.assign(n, 0.0);
  eval.logp_old.assign(n, 0.0);
  eval.logp_ref.assign(n, 0.0);
  int turn = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!traj.mask[i]) continue;
    if (turn >= env.turns()) throw EvalError("trajectory longer than the environment horizon");
    const int state = state_of(traj.question, turn);
    const int action = traj.tokens[i];
    if (action < 0 || action >= env.num_actions()) throw EvalError("unknown action");
    const auto cur =
        policy_.log_softmax(TabularPolicy::Which::Current, state, env.num_actions(), bias);
    const auto old =
        policy_.log_softmax(TabularPolicy::Which::Old, state, env.num_actions(), bias);
    const auto ref =
        policy_.log_softmax(TabularPolicy::Which::Ref, state, env.num_actions(), bias);
    eval.logp_new[i] = cur[static_cast<size_t>(action)];
    eval.logp_old[i] = old[static_cast<size_t>(action)];
    eval.logp_ref[i] = ref[static_cast<size_t>(action)];
    ++turn;
  }
  return eval;
}

std::string TabularAdapter::reflect(const TrajectoryRecord& failed) {
  const SyntheticEnv& env = *envs_[static_cast<size_t>(failed.question)];
  return env.reflect(decode_actions(failed));
}

std::string TabularAdapter::reference_answer(int question) const {
  return envs_[static_cast<size_t>(question)]->reference_answer();
}

double TabularAdapter::objective(std::span<const TrajectoryRecord> group,
                                 std::span<const double> advantages,
                                 const RegrpoConfig& cfg) const {
  double sum = 0;
  for (size_t i = 0; i < group.size(); ++i)
    sum += masked_objective(group[i], evaluate(group[i]), advantages[i], cfg).value;
  return group.empty() ? 0.0 : sum / static_cast<double>(group.size());
}

std::vector<double> TabularAdapter::analytic_gradient(std::span<const TrajectoryRecord> group,
                                                      std::span<const double> advantages,
                                                      const RegrpoConfig& cfg) const {
  std::vector<double> grad(policy_.table().size(), 0.0);
  const double group_size = static_cast<double>(group.size());
  for (size_t i = 0; i < group.size(); ++i) {
    const TrajectoryRecord& traj = group[i];
    const SyntheticEnv& env = *envs_[static_cast<size_t>(traj.question)];
    const auto bias = env.reflection_bias(traj.reflection);
    const double advantage = advantages[i];
    size_t masked = 0;
    for (uint8_t m : traj.mask) masked += m;
    if (masked == 0) continue;
    const double scale = 1.0 / (static_cast<double>(masked) * group_size);

    int turn = 0;
    for (size_t t = 0; t < traj.tokens.size(); ++t) {
      if (!traj.mask[t]) continue;
      const int state = state_of(traj.question, turn);
      const int action = traj.tokens[t];
      ++turn;
      const int n = env.num_actions();
      const auto cur = policy_.log_softmax(TabularPolicy::Which::Current, state, n, bias);
      const auto old = policy_.log_softmax(TabularPolicy::Which::Old, state, n, bias);
      const auto ref = policy_.log_softmax(TabularPolicy::Which::Ref, state, n, bias);
      const double lp_new = cur[static_cast<size_t>(action)];
      const double ratio = std::exp(lp_new - old[static_cast<size_t>(action)]);
      const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
      // min() routes the gradient through the unclipped branch only; the
      // clipped branch is constant in theta.
      const bool unclipped_active = ratio * advantage <= clipped * advantage;
      double coeff = unclipped_active ? ratio * advantage : 0.0;
      const double delta = ref[static_cast<size_t>(action)] - lp_new;
      coeff -= cfg.kl_beta * (1.0 - std::exp(delta));  // d(kl)/d(lp_new) = 1 - e^delta
      coeff *= scale;
      // d lp(a|s) / d logits[s][b] = [b == a] - p(b|s)
      for (int b = 0; b < n; ++b) {
        const double p = std::exp(cur[static_cast<size_t>(b)]);
        const double indicator = b == action ? 1.0 : 0.0;
        grad[static_cast<size_t>(state) * policy_.actions() + b] += coeff * (indicator - p);
      }
    }
  }
  return grad;
}

void TabularAdapter::update(std::span<const TrajectoryRecord> group,
                            std::span<const double> advantages, const RegrpoConfig& cfg) {
  const auto grad = analytic_gradient(group, advantages, cfg);
  auto& table = policy_.table();
  for (size_t i = 0; i < table.size(); ++i) table[i] += learning_rate_ * grad[i];
}

double ExperimentReport::median_iters_to_threshold() const {
  if (curves.empty()) return 0;
  std::vector<int> xs;
  xs.reserve(curves.size());
  for (const auto& c : curves) xs.push_back(c.iters_to_threshold);
  std::sort(xs.begin(), xs.end());
  const size_t n = xs.size();
  if (n % 2 == 1) return xs[n / 2];
  return (static_cast<double>(xs[n / 2 - 1]) + static_cast<double>(xs[n / 2])) / 2.0;
}

namespace {

ExperimentReport run_arm(std::span<const SyntheticEnv* const> envs, const ComparisonConfig& cfg,
                         std::span<const uint64_t> seeds, bool reflection, std::string name) {
  ExperimentReport report;
  report.arm = std::move(name);
  report.threshold = cfg.threshold;
  report.curves.resize(seeds.size());
  const int n = static_cast<int>(seeds.size());
#pragma omp parallel for schedule(dynamic) if (cfg.parallel_seeds)
  for (int s = 0; s < n; ++s) {
    TabularAdapter adapter(std::vector<const SyntheticEnv*>(envs.begin(), envs.end()),
                           cfg.learning_rate);
    SeedCurve curve;
    curve.seed = seeds[static_cast<size_t>(s)];
    curve.iters_to_threshold = cfg.iterations + 1;
    for (int it = 1; it <= cfg.iterations; ++it) {
      const IterationReport rep = regrpo_iteration(it, adapter.num_questions(), adapter,
                                                   cfg.regrpo, curve.seed, reflection);
      if (curve.iters_to_threshold > cfg.iterations && rep.mean_reward >= cfg.threshold)
        curve.iters_to_threshold = it;
      curve.iterations.push_back(rep);
    }
    report.curves[static_cast<size_t>(s)] = std::move(curve);
  }
  return report;
}

}  // namespace

std::pair<ExperimentReport, ExperimentReport> run_comparison(
    std::span<const SyntheticEnv* const> envs, const ComparisonConfig& cfg,
    std::span<const uint64_t> seeds) {
  if (seeds.size() < 2) throw ConfigError("comparison needs at least two seeds");
  ExperimentReport grpo = run_arm(envs, cfg, seeds, /*reflection=*/false, "grpo");
  ExperimentReport regrpo = run_arm(envs, cfg, seeds, /*reflection=*/true, "regrpo");
  return {std::move(grpo), std::move(regrpo)};
}

std::string experiment_to_jsonl(const ExperimentReport& report) {
  std::string out;
  for (const auto& curve : report.curves) {
    for (const auto& it : curve.iterations) {
      out += "{\"arm\": \"" + report.arm + "\", \"seed\": " + std::to_string(curve.seed) +
             ", \"iteration\": " + std::to_string(it.iteration) +
             ", \"mean_reward\": " + format_double(it.mean_reward) +
             ", \"objective\": " + format_double(it.mean_objective) +
             ", \"reflections_generated\": " + std::to_string(it.reflections_generated) +
             ", \"reflections_used\": " + std::to_string(it.reflections_used) +
             ", \"tool_calls\": " + std::to_string(it.tool_calls) + "}\n";
    }
  }
  return out;
}

std::string experiment_to_csv(const ExperimentReport& report) {
  std::string out = "iteration";
  for (const auto& curve : report.curves) out += ",reward_seed_" + std::to_string(curve.seed);
  out += "\n";
  if (report.curves.empty()) return out;
  const size_t iters = report.curves.front().iterations.size();
  for (size_t i = 0; i < iters; ++i) {
    out += std::to_string(i + 1);
    for (const auto& curve : report.curves)
      out += "," + format_double(curve.iterations[i].mean_reward);
    out += "\n";
  }
  return out;
}

}  // namespace blockflow
