#pragma once

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blockflow/catalog.hpp"
#include "blockflow/model.hpp"

namespace blockflow {

enum class Origin { Model, Tool };

struct Segment {
  Origin origin = Origin::Model;
  std::string text;
  size_t tokens = 0;  // estimate_tokens(text), fixed at construction

  Segment() = default;
  Segment(Origin o, std::string t);
};

// An agent episode as ordered segments. Tool segments are exactly the
// <result>-wrapped texts and only ever follow tool-call or edit turns.
struct Transcript {
  std::vector<Segment> segments;
  std::optional<std::string> answer;

  size_t total_tokens() const;
};

// One model turn: optional leading <think>, then exactly one of
// <tool>/<python>/<answer>.
struct Action {
  enum class Kind { Tool, Edit, Answer };
  Kind kind = Kind::Answer;
  std::string think;
  std::string tool_name;             // Kind::Tool
  nlohmann::ordered_json tool_args;  // Kind::Tool
  std::string body;                  // Edit: script text; Answer: answer text
};

Action parse_action(std::string_view turn_text);
std::string render_action(const Action& action);

// 1 for model-origin tokens, 0 for tool-origin tokens; depends only on
// segment origins, never on text content.
std::vector<uint8_t> build_mask(const Transcript& transcript);

struct PlanState {
  std::vector<std::string> steps;
  size_t cursor = 0;
  bool finished = false;
};

// Continue -> cursor+1, Finish -> finished, plan tool call -> new plan with
// cursor reset. Anything else is a ProtocolError.
PlanState replan_step(PlanState state, const Action& decision);

struct Session;

using ToolFn = std::function<std::string(const nlohmann::ordered_json& args, Session&)>;

class ToolRegistry {
 public:
  void register_tool(std::string name, ToolFn fn);
  const ToolFn* find(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, ToolFn, std::less<>> tools_;
};

// Mutable episode state shared with tools.
struct Session {
  SystemModel model;
  const Catalog* catalog = nullptr;
  PlanState plan;
  std::string root_name = "sys_dict";
  // Optional plan-step builder; when present the plan tool returns the
  // built sub-model for the current step instead of an acknowledgment.
  std::function<SystemModel(const std::string& step, Session&)> plan_builder;
  int plan_results = 0;
  int tool_calls = 0;
  int tool_errors = 0;
  int edit_errors = 0;

  double tool_use() const {
    return tool_calls == 0 ? 1.0
                           : static_cast<double>(tool_calls - tool_errors) /
                                 static_cast<double>(tool_calls);
  }
};

// search_blocks and plan.
ToolRegistry default_registry();

// Executes a tool-call or edit turn; output comes back as a tool-origin
// <result> segment. Failures are in-band result text, never exceptions, so
// the episode continues.
Segment dispatch(const Action& action, const ToolRegistry& registry, Session& session);

// Restricted edit grammar (one statement per line, values are JSON):
//   stmt := root-assign | block-upsert | param-set | conn-append
//   root-assign:  sys_dict = { ... }
//   block-upsert: sys_dict["Blocks"]["Name"] = { ... }
//   param-set:    sys_dict["Blocks"]["Name"]["Param"] = value
//   conn-append:  sys_dict["Connections"].append({"Src": ..., "Dst": ...})
// Transactional: on error the input model is returned unchanged and the
// segment names the failing line.
std::pair<SystemModel, Segment> apply_edit_script(const SystemModel& model,
                                                  std::string_view script,
                                                  std::string_view root_name = "sys_dict");

struct EpisodeLimits {
  int max_turns = 32;
  size_t token_budget = 8192;
};

enum class EpisodeOutcome { Finished, ContextExceeded, ProtocolFailure };

struct EpisodeResult {
  Transcript transcript;
  EpisodeOutcome outcome = EpisodeOutcome::Finished;
  SystemModel final_model;
  std::string final_answer;
  int turns = 0;
};

using Policy = std::function<std::string(const Transcript&, const Session&)>;

// Plan-execute loop: tool calls and edits get <result> segments; Continue
// advances the plan (running the plan builder when registered); any other
// answer ends the episode. Turn and token limits end it with
// ContextExceeded.
EpisodeResult run_episode(Session& session, const Policy& policy, const ToolRegistry& registry,
                          EpisodeLimits limits = {});

// Search-result rendering shared by the search_blocks tool and tests.
std::string render_search_results(const std::vector<std::string>& queries,
                                  const std::vector<std::vector<const BlockDef*>>& hits);

}  // namespace blockflow
