#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "blockflow/model.hpp"

namespace blockflow {

// Partial injective candidate-block -> reference-block map; mapped pairs
// always share a type.
struct BlockMapping {
  std::vector<std::pair<std::string, std::string>> pairs;
};

struct CompareWeights {
  double block = 0.4;
  double connection = 0.4;
  double param = 0.2;
};

struct SimilarityReport {
  double block_f1 = 0;
  double connection_f1 = 0;
  double param_match = 0;
  double total = 0;
  BlockMapping mapping;
};

// Exhaustive maximization of the weighted score over all type-compatible
// injective mappings. Connections between two conserving ports are matched
// as unordered pairs; everything else is directed. Throws SizeExceeded when
// either model has more than `max_blocks` blocks.
SimilarityReport optimal_mapping_bruteforce(const SystemModel& cand, const SystemModel& ref,
                                            CompareWeights weights = {}, size_t max_blocks = 8);

// Scalable surrogate: blocks matched per type by neighborhood-signature
// overlap, then refined by bounded local search. Same scoring as the
// brute force.
SimilarityReport greedy_mapping(const SystemModel& cand, const SystemModel& ref,
                                CompareWeights weights = {});

// Brute force up to 8 blocks, greedy above.
SimilarityReport best_mapping(const SystemModel& cand, const SystemModel& ref,
                              CompareWeights weights = {});

// Fraction of reference blocks covered by the chosen mapping.
double completeness(const SystemModel& cand, const SystemModel& ref);

using Summarizer = std::function<std::string(const SystemModel&)>;

// Collapses every connected component of non-kept blocks into a single
// "Subsystem" block holding the component and a summary. Boundary
// connections are re-targeted through fresh subsystem ports in discovery
// order; flatten() restores the original up to canonicalization.
SystemModel encapsulate(const SystemModel& model, const std::set<std::string>& keep,
                        const Summarizer& summarizer = {});

// Recursively inlines subsystem blocks, rebinding boundary connections.
// Dangling boundary ports or a missing inner model are FlattenErrors.
SystemModel flatten(const SystemModel& model);

}  // namespace blockflow
