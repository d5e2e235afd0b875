#pragma once

#include <string>
#include <string_view>

#include "blockflow/compare.hpp"
#include "blockflow/regrpo.hpp"
#include "blockflow/reward.hpp"
#include "blockflow/simlab.hpp"

namespace blockflow {

// One JSON config file with sections compare.*, reward.*, regrpo.*,
// schedule.* and simlab.*. Unknown keys are ConfigErrors naming the key;
// every field has a documented default.
struct GlobalConfig {
  CompareWeights compare;
  RewardConfig reward_qa = RewardConfig::defaults(TaskKind::QA);
  RewardConfig reward_create = RewardConfig::defaults(TaskKind::Create);
  RewardConfig reward_modify = RewardConfig::defaults(TaskKind::Modify);
  RewardConfig reward_reconstruct = RewardConfig::defaults(TaskKind::Reconstruct);
  RegrpoConfig regrpo;
  ComparisonConfig comparison;

  const RewardConfig& reward_for(TaskKind kind) const;
};

GlobalConfig parse_config_text(std::string_view text);
GlobalConfig load_config(const std::string& path);

}  // namespace blockflow
