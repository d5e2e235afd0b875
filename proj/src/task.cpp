#include "blockflow/task.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "blockflow/model_text.hpp"

namespace blockflow {

size_t TaskRecord::block_count() const {
  return reference_model ? reference_model->blocks.size() : 0;
}

TaskRecord parse_task_text(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed task: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("task must be a JSON object");
  TaskRecord task;
  task.id = j.value("id", std::string{});
  if (task.id.empty()) throw ParseError("task needs a non-empty id");
  if (!j.contains("kind") || !j["kind"].is_string())
    throw ParseError("task '" + task.id + "' needs a kind");
  task.kind = task_kind_from_name(j["kind"].get<std::string>());
  task.prompt = j.value("prompt", std::string{});
  if (j.contains("reference_model"))
    task.reference_model = parse_model_text(j["reference_model"].dump());
  if (j.contains("reference_answer")) {
    if (!j["reference_answer"].is_string())
      throw ParseError("task '" + task.id + "' reference_answer must be a string");
    task.reference_answer = j["reference_answer"].get<std::string>();
  }
  if (j.contains("base_model")) task.base_model = parse_model_text(j["base_model"].dump());

  // Kind-consistent references.
  const bool needs_model = task.kind != TaskKind::QA;
  if (needs_model && !task.reference_model)
    throw ParseError("task '" + task.id + "' needs a reference_model");
  if (task.kind == TaskKind::QA && !task.reference_answer)
    throw ParseError("task '" + task.id + "' needs a reference_answer");
  return task;
}

TaskRecord load_task(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open task file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_task_text(buf.str());
}

std::vector<TaskRecord> stage_filter(const std::vector<TaskRecord>& tasks,
                                     const StageConfig& stage) {
  if (stage.block_threshold < 1) throw ConfigError("stage threshold must be >= 1");
  std::vector<TaskRecord> out;
  for (const auto& task : tasks) {
    const bool small = task.block_count() <= stage.block_threshold;
    if ((stage.stage == 1 && small) || (stage.stage == 2 && !small)) out.push_back(task);
  }
  return out;
}

}  // namespace blockflow
