#pragma once

#include <string>
#include <string_view>

#include "blockflow/catalog.hpp"
#include "blockflow/model.hpp"
#include "blockflow/protocol.hpp"

namespace blockflow {

enum class TaskKind { QA, Create, Modify, Reconstruct };

TaskKind task_kind_from_name(std::string_view name);
std::string_view task_kind_name(TaskKind kind);

struct RewardComponents {
  double answer = 0;     // [0,1]
  double format = 0;     // [0,1]
  double structure = 0;  // [0,1]; doubles as fidelity for Reconstruct
  bool executable = false;
  double tool_use = 0;   // [0,1]
};

struct RewardWeights {
  double answer = 0;
  double format = 0;
  double structure = 0;
  double executable = 0;
  double tool_use = 0;

  double sum() const { return answer + format + structure + executable + tool_use; }
};

struct RewardConfig {
  TaskKind kind = TaskKind::QA;
  RewardWeights weights;

  // QA: answer .8 / format .2. Create/Modify: structure .5 / executable .3 /
  // format .1 / tool .1. Reconstruct: structure .7 / executable .3.
  static RewardConfig defaults(TaskKind kind);
};

// 1 for an exact normalized-string match or a numeric match within relative
// tolerance 1e-6, else 0.
double answer_reward(std::string_view answer, std::string_view reference);

// 1 iff every model turn parses under the tag grammar and the episode ends
// with a single <answer> turn.
double format_reward(const Transcript& transcript);

// Weighted mean of the active components; bounds are exactly 0 and 1.
// All-zero weights are a ConfigError.
double total_reward(const RewardComponents& components, const RewardConfig& config);

struct ReconstructScore {
  double fidelity = 0;
  bool functional = false;
};

ReconstructScore reconstruct_score(const SystemModel& original, const SystemModel& rebuilt,
                                   const Catalog& catalog);

}  // namespace blockflow
