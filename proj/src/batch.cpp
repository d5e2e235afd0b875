#include "blockflow/batch.hpp"

namespace blockflow {

std::vector<double> batch_masked_objectives(std::span<const TrajectoryRecord> trajectories,
                                            std::span<const PolicyEval> evals,
                                            std::span<const double> advantages,
                                            const RegrpoConfig& cfg, Exec exec) {
  if (trajectories.size() != evals.size() || trajectories.size() != advantages.size())
    throw ConfigError("batch inputs must have equal lengths");
  const int n = static_cast<int>(trajectories.size());
  std::vector<double> out(trajectories.size());
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
  for (int i = 0; i < n; ++i) {
    const auto idx = static_cast<size_t>(i);
    out[idx] = masked_objective(trajectories[idx], evals[idx], advantages[idx], cfg).value;
  }
  return out;
}

std::vector<std::vector<double>> batch_group_advantages(
    std::span<const std::vector<double>> reward_groups, AdvantageMode mode, double eps,
    Exec exec) {
  const int n = static_cast<int>(reward_groups.size());
  std::vector<std::vector<double>> out(reward_groups.size());
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
  for (int i = 0; i < n; ++i) {
    const auto idx = static_cast<size_t>(i);
    out[idx] = group_advantages(reward_groups[idx], mode, eps);
  }
  return out;
}

std::vector<SimilarityReport> batch_similarity(std::span<const ModelPair> pairs,
                                               CompareWeights weights, bool oracle, Exec exec) {
  const int n = static_cast<int>(pairs.size());
  std::vector<SimilarityReport> out(pairs.size());
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
  for (int i = 0; i < n; ++i) {
    const auto idx = static_cast<size_t>(i);
    out[idx] = oracle ? optimal_mapping_bruteforce(*pairs[idx].cand, *pairs[idx].ref, weights)
                      : greedy_mapping(*pairs[idx].cand, *pairs[idx].ref, weights);
  }
  return out;
}

}  // namespace blockflow
