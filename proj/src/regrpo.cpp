#include "blockflow/regrpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace blockflow {

void RegrpoConfig::validate() const {
  if (subgroup1 < 1 || subgroup2 < 1) throw ConfigError("subgroup sizes must be >= 1");
  if (subgroup1 + subgroup2 != group_size)
    throw ConfigError("subgroup sizes must sum to the group size");
  if (!(clip > 0 && clip < 1)) throw ConfigError("clip must lie in (0, 1)");
  if (kl_beta < 0) throw ConfigError("KL coefficient must be >= 0");
  if (inner_updates < 1) throw ConfigError("inner updates must be >= 1");
  if (fail_threshold < 0 || fail_threshold > 1)
    throw ConfigError("fail threshold must lie in [0, 1]");
  if (schedule.p0 < 0 || schedule.p0 > 1) throw ConfigError("p0 must lie in [0, 1]");
  if (reflection_max_words < 1) throw ConfigError("reflection word limit must be >= 1");
}

std::vector<double> group_advantages(std::span<const double> rewards, AdvantageMode mode,
                                     double eps) {
  const size_t n = rewards.size();
  if (n < 2) throw ConfigError("group advantages need at least two rewards");
  double mean = 0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(n);
  std::vector<double> adv(n);
  if (mode == AdvantageMode::MeanBaseline) {
    for (size_t i = 0; i < n; ++i) adv[i] = rewards[i] - mean;
    return adv;
  }
  double var = 0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(n);  // population variance
  const double denom = std::sqrt(var) + eps;
  for (size_t i = 0; i < n; ++i) adv[i] = (rewards[i] - mean) / denom;
  return adv;
}

ObjectiveResult masked_objective(const TrajectoryRecord& traj, const PolicyEval& eval,
                                 double advantage, const RegrpoConfig& cfg) {
  const size_t n = traj.tokens.size();
  if (traj.mask.size() != n || eval.logp_new.size() != n || eval.logp_old.size() != n ||
      eval.logp_ref.size() != n)
    throw ConfigError("trajectory and evaluation lengths disagree");
  size_t masked = 0;
  for (uint8_t m : traj.mask) masked += m;
  if (masked == 0) throw DegenerateTrajectory("trajectory has no model tokens");

  ObjectiveResult result;
  result.per_token.assign(n, 0.0);
  double sum = 0;
  for (size_t t = 0; t < n; ++t) {
    if (!traj.mask[t]) continue;
    const double ratio = std::exp(eval.logp_new[t] - eval.logp_old[t]);
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
    const double surrogate = std::min(ratio * advantage, clipped * advantage);
    const double delta = eval.logp_ref[t] - eval.logp_new[t];
    const double kl = std::exp(delta) - delta - 1.0;  // >= 0, 0 iff delta == 0
    const double term = surrogate - cfg.kl_beta * kl;
    result.per_token[t] = term;
    sum += term;
  }
  result.value = sum / static_cast<double>(masked);
  return result;
}

double schedule_p(int iteration, const ScheduleSpec& schedule) {
  if (iteration < 1) throw ConfigError("iterations are 1-based");
  switch (schedule.kind) {
    case ScheduleSpec::Kind::Linear: {
      if (schedule.horizon <= 0) return 0.0;
      const double p =
          schedule.p0 * (1.0 - (static_cast<double>(iteration) - 1.0) / schedule.horizon);
      return std::max(0.0, p);
    }
    case ScheduleSpec::Kind::Exponential:
      return schedule.p0 * std::pow(schedule.rate, iteration - 1);
    case ScheduleSpec::Kind::NonReplacement:
      return schedule.p0;
  }
  return 0.0;
}

void ReflectionBuffer::clear() {
  entries_.clear();
  used_.clear();
}

void ReflectionBuffer::add(std::string text) {
  entries_.push_back(std::move(text));
  used_.push_back(false);
}

std::string ReflectionBuffer::select(double p, Rng& rng, bool consume) {
  if (entries_.empty() || p <= 0) return {};
  std::vector<size_t> pool;
  if (consume) {
    for (size_t i = 0; i < entries_.size(); ++i)
      if (!used_[i]) pool.push_back(i);
    if (pool.empty()) return {};
  } else {
    pool.resize(entries_.size());
    std::iota(pool.begin(), pool.end(), size_t{0});
  }
  if (rng.uniform() >= p) return {};
  const size_t pick = pool[rng.uniform_int(pool.size())];
  if (consume) used_[pick] = true;
  return entries_[pick];
}

ReflectionFilterResult filter_reflection(std::string_view text, std::string_view reference_answer,
                                         int max_words) {
  ReflectionFilterResult result;
  const std::string trimmed = trim(text);
  if (trimmed == "None") {
    result.status = ReflectionFilterResult::Status::NoReflection;
    return result;
  }
  const auto words = word_tokens(text);
  if (words.size() > static_cast<size_t>(max_words)) {
    result.status = ReflectionFilterResult::Status::Rejected;
    return result;
  }
  const auto answer = word_tokens(reference_answer);
  if (!answer.empty()) {
    // Any contiguous run of answer tokens covering >= 60% of the answer, or
    // any shared 4-gram. A run of length >= needle contains a run of exactly
    // needle, so one window size per rule suffices.
    const size_t sixty = std::min(
        answer.size(),
        std::max<size_t>(1, static_cast<size_t>(
                                std::ceil(0.6 * static_cast<double>(answer.size())))));
    std::vector<size_t> needles{sixty};
    if (answer.size() >= 4) needles.push_back(4);
    for (size_t needle : needles) {
      for (size_t start = 0; start + needle <= answer.size(); ++start) {
        auto it = std::search(words.begin(), words.end(), answer.begin() + start,
                              answer.begin() + start + needle);
        if (it != words.end()) {
          result.status = ReflectionFilterResult::Status::Rejected;
          return result;
        }
      }
    }
  }
  result.status = ReflectionFilterResult::Status::Accepted;
  result.text = trimmed;
  return result;
}

IterationReport regrpo_iteration(int iteration, int num_questions, PolicyAdapter& policy,
                                 const RegrpoConfig& cfg, uint64_t master_seed,
                                 bool enable_reflection) {
  cfg.validate();
  policy.snapshot_ref();
  policy.snapshot_old();
  const double p = schedule_p(iteration, cfg.schedule);
  const bool reflect_active = enable_reflection && p > 0;
  const bool consume = cfg.schedule.kind == ScheduleSpec::Kind::NonReplacement;

  IterationReport report;
  report.iteration = iteration;
  double reward_sum = 0;
  double objective_sum = 0;
  int reward_count = 0;

  for (int q = 0; q < num_questions; ++q) {
    ReflectionBuffer buffer;
    std::vector<TrajectoryRecord> group;
    group.reserve(static_cast<size_t>(cfg.group_size));

    for (int i = 0; i < cfg.subgroup1; ++i) {
      Rng rng = Rng::derive(master_seed, static_cast<uint64_t>(iteration),
                            static_cast<uint64_t>(q), static_cast<uint64_t>(i), 0x1);
      TrajectoryRecord traj = policy.rollout(q, "", rng);
      traj.question = q;
      traj.subgroup = 1;
      traj.reflection.clear();
      if (reflect_active && traj.reward < cfg.fail_threshold) {
        const std::string raw = policy.reflect(traj);
        const auto filtered =
            filter_reflection(raw, policy.reference_answer(q), cfg.reflection_max_words);
        if (filtered.status == ReflectionFilterResult::Status::Accepted) {
          buffer.add(filtered.text);
          ++report.reflections_generated;
        }
      }
      group.push_back(std::move(traj));
    }

    for (int i = 0; i < cfg.subgroup2; ++i) {
      const auto slot = static_cast<uint64_t>(cfg.subgroup1 + i);
      Rng gate = Rng::derive(master_seed, static_cast<uint64_t>(iteration),
                             static_cast<uint64_t>(q), slot, 0x2);
      const std::string reflection = reflect_active ? buffer.select(p, gate, consume) : "";
      if (!reflection.empty()) ++report.reflections_used;
      Rng rng = Rng::derive(master_seed, static_cast<uint64_t>(iteration),
                            static_cast<uint64_t>(q), slot, 0x1);
      TrajectoryRecord traj = policy.rollout(q, reflection, rng);
      traj.question = q;
      traj.subgroup = 2;
      traj.reflection = reflection;
      group.push_back(std::move(traj));
    }

    std::vector<double> rewards;
    rewards.reserve(group.size());
    for (const auto& traj : group) {
      rewards.push_back(traj.reward);
      reward_sum += traj.reward;
      report.tool_calls += traj.tool_calls;
      ++reward_count;
    }
    const auto advantages = group_advantages(rewards, cfg.advantage_mode, cfg.advantage_eps);

    for (int k = 0; k < cfg.inner_updates; ++k)
      policy.update(group, advantages, cfg);

    // Post-update objective, for the report curve.
    double q_objective = 0;
    for (size_t i = 0; i < group.size(); ++i) {
      const PolicyEval eval = policy.evaluate(group[i]);
      q_objective += masked_objective(group[i], eval, advantages[i], cfg).value;
    }
    objective_sum += q_objective / static_cast<double>(group.size());
  }

  report.mean_reward = reward_count == 0 ? 0.0 : reward_sum / reward_count;
  report.mean_objective = num_questions == 0 ? 0.0 : objective_sum / num_questions;
  return report;
}

}  // namespace blockflow
