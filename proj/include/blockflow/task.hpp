#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blockflow/model.hpp"
#include "blockflow/reward.hpp"

namespace blockflow {

// One benchmark task: {"id": ..., "kind": "Create|Modify|QA|Reconstruct",
// "prompt": ..., "reference_model": {...}, "reference_answer": ...,
// "base_model": {...}}. Every kind carries a reference; QA tasks carry a
// reference answer, model tasks a reference model.
struct TaskRecord {
  std::string id;
  TaskKind kind = TaskKind::QA;
  std::string prompt;
  std::optional<SystemModel> reference_model;
  std::optional<std::string> reference_answer;
  std::optional<SystemModel> base_model;  // Modify tasks start from this

  size_t block_count() const;
};

TaskRecord parse_task_text(std::string_view text);
TaskRecord load_task(const std::string& path);

struct StageConfig {
  int stage = 1;             // 1 or 2
  size_t block_threshold = 12;
};

// Stage 1 keeps tasks with reference block count <= threshold; stage 2
// keeps the complement.
std::vector<TaskRecord> stage_filter(const std::vector<TaskRecord>& tasks,
                                     const StageConfig& stage);

}  // namespace blockflow
