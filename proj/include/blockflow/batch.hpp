#pragma once

#include <span>
#include <utility>
#include <vector>

#include "blockflow/compare.hpp"
#include "blockflow/regrpo.hpp"

namespace blockflow {

// The batch kernels exist in two forms: a serial reference and an
// OpenMP-parallel version. Items are independent, so both produce
// bit-identical results; the tests hold them to that.
enum class Exec { Serial, Parallel };

std::vector<double> batch_masked_objectives(std::span<const TrajectoryRecord> trajectories,
                                            std::span<const PolicyEval> evals,
                                            std::span<const double> advantages,
                                            const RegrpoConfig& cfg, Exec exec = Exec::Parallel);

std::vector<std::vector<double>> batch_group_advantages(
    std::span<const std::vector<double>> reward_groups, AdvantageMode mode, double eps = 1e-8,
    Exec exec = Exec::Parallel);

struct ModelPair {
  const SystemModel* cand;
  const SystemModel* ref;
};

std::vector<SimilarityReport> batch_similarity(std::span<const ModelPair> pairs,
                                               CompareWeights weights = {},
                                               bool oracle = false, Exec exec = Exec::Parallel);

}  // namespace blockflow
