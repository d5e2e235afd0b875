#include "blockflow/reward.hpp"

#include <cmath>

#include "blockflow/compare.hpp"
#include "blockflow/util.hpp"
#include "blockflow/validate.hpp"

namespace blockflow {

TaskKind task_kind_from_name(std::string_view name) {
  const std::string lower = to_lower(name);
  if (lower == "qa") return TaskKind::QA;
  if (lower == "create") return TaskKind::Create;
  if (lower == "modify") return TaskKind::Modify;
  if (lower == "reconstruct") return TaskKind::Reconstruct;
  throw ConfigError("unknown task kind '" + std::string(name) + "'");
}

std::string_view task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::QA: return "QA";
    case TaskKind::Create: return "Create";
    case TaskKind::Modify: return "Modify";
    case TaskKind::Reconstruct: return "Reconstruct";
  }
  return "";
}

RewardConfig RewardConfig::defaults(TaskKind kind) {
  RewardConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case TaskKind::QA:
      cfg.weights.answer = 0.8;
      cfg.weights.format = 0.2;
      break;
    case TaskKind::Create:
    case TaskKind::Modify:
      cfg.weights.structure = 0.5;
      cfg.weights.executable = 0.3;
      cfg.weights.format = 0.1;
      cfg.weights.tool_use = 0.1;
      break;
    case TaskKind::Reconstruct:
      cfg.weights.structure = 0.7;
      cfg.weights.executable = 0.3;
      break;
  }
  return cfg;
}

double answer_reward(std::string_view answer, std::string_view reference) {
  const std::string a = collapse_whitespace(answer);
  const std::string b = collapse_whitespace(reference);
  if (a == b) return 1.0;
  const auto na = parse_double(a);
  const auto nb = parse_double(b);
  if (na && nb) {
    const double scale = std::max(std::fabs(*nb), 1e-12);
    if (std::fabs(*na - *nb) <= 1e-6 * scale) return 1.0;
  }
  return 0.0;
}

double format_reward(const Transcript& transcript) {
  bool any_model_turn = false;
  const Segment* last_model = nullptr;
  for (const auto& seg : transcript.segments) {
    if (seg.origin != Origin::Model) continue;
    any_model_turn = true;
    last_model = &seg;
    try {
      (void)parse_action(seg.text);
    } catch (const ProtocolError&) {
      return 0.0;
    }
  }
  if (!any_model_turn) return 0.0;
  const Action last = parse_action(last_model->text);
  return last.kind == Action::Kind::Answer ? 1.0 : 0.0;
}

double total_reward(const RewardComponents& components, const RewardConfig& config) {
  const RewardWeights& w = config.weights;
  const double wsum = w.sum();
  if (wsum <= 0) throw ConfigError("reward weights must not all be zero");
  const double raw = w.answer * components.answer + w.format * components.format +
                     w.structure * components.structure +
                     w.executable * (components.executable ? 1.0 : 0.0) +
                     w.tool_use * components.tool_use;
  return raw / wsum;
}

ReconstructScore reconstruct_score(const SystemModel& original, const SystemModel& rebuilt,
                                   const Catalog& catalog) {
  ReconstructScore score;
  score.fidelity = best_mapping(rebuilt, original).total;
  score.functional = is_executable(rebuilt, catalog);
  return score;
}

}  // namespace blockflow
