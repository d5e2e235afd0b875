#include "blockflow/protocol.hpp"

#include <algorithm>
#include <cctype>

#include "blockflow/model_text.hpp"
#include "blockflow/util.hpp"

namespace blockflow {

Segment::Segment(Origin o, std::string t) : origin(o), text(std::move(t)) {
  tokens = estimate_tokens(text);
}

size_t Transcript::total_tokens() const {
  size_t n = 0;
  for (const auto& s : segments) n += s.tokens;
  return n;
}

namespace {

struct TagSpan {
  std::string name;
  std::string body;
  size_t begin = 0;
  size_t end = 0;
};

std::optional<TagSpan> find_tag(std::string_view text, std::string_view name, size_t from) {
  const std::string open = "<" + std::string(name) + ">";
  const std::string close = "</" + std::string(name) + ">";
  const size_t b = text.find(open, from);
  if (b == std::string_view::npos) return std::nullopt;
  const size_t e = text.find(close, b + open.size());
  if (e == std::string_view::npos)
    throw ProtocolError("unterminated <" + std::string(name) + "> tag");
  TagSpan span;
  span.name = name;
  span.body = std::string(text.substr(b + open.size(), e - b - open.size()));
  span.begin = b;
  span.end = e + close.size();
  return span;
}

}  // namespace

Action parse_action(std::string_view turn_text) {
  Action action;
  size_t cursor = 0;

  const std::string text(turn_text);
  auto non_ws = [&](size_t from, size_t to) {
    for (size_t i = from; i < to && i < text.size(); ++i)
      if (!std::isspace(static_cast<unsigned char>(text[i]))) return true;
    return false;
  };

  if (auto think = find_tag(text, "think", 0)) {
    if (non_ws(0, think->begin))
      throw ProtocolError("unexpected text before <think>");
    action.think = think->body;
    cursor = think->end;
  }

  std::optional<TagSpan> found;
  for (std::string_view name : {"tool", "python", "answer"}) {
    auto span = find_tag(text, name, cursor);
    if (!span) continue;
    if (found) throw ProtocolError("turn must contain exactly one action tag");
    // A second instance of the same tag is also a violation.
    if (find_tag(text, name, span->end)) throw ProtocolError("turn has multiple <" +
                                                             std::string(name) + "> tags");
    found = std::move(span);
  }
  if (!found) throw ProtocolError("turn contains no action tag");
  if (non_ws(cursor, found->begin) || non_ws(found->end, text.size()))
    throw ProtocolError("unexpected text around <" + found->name + "> tag");

  if (found->name == "tool") {
    action.kind = Action::Kind::Tool;
    nlohmann::ordered_json body;
    try {
      body = nlohmann::ordered_json::parse(found->body);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("malformed <tool> body: ") + e.what());
    }
    if (!body.is_object() || !body.contains("name") || !body["name"].is_string() ||
        !body.contains("args") || !body["args"].is_object())
      throw ProtocolError("<tool> body must be {\"name\": ..., \"args\": {...}}");
    action.tool_name = body["name"].get<std::string>();
    action.tool_args = body["args"];
  } else if (found->name == "python") {
    action.kind = Action::Kind::Edit;
    action.body = found->body;
  } else {
    action.kind = Action::Kind::Answer;
    action.body = found->body;
  }
  return action;
}

std::string render_action(const Action& action) {
  std::string out;
  if (!action.think.empty()) out += "<think>" + action.think + "</think>";
  switch (action.kind) {
    case Action::Kind::Tool: {
      nlohmann::ordered_json body;
      body["name"] = action.tool_name;
      body["args"] = action.tool_args;
      out += "<tool>" + body.dump() + "</tool>";
      break;
    }
    case Action::Kind::Edit: out += "<python>" + action.body + "</python>"; break;
    case Action::Kind::Answer: out += "<answer>" + action.body + "</answer>"; break;
  }
  return out;
}

std::vector<uint8_t> build_mask(const Transcript& transcript) {
  std::vector<uint8_t> mask;
  mask.reserve(transcript.total_tokens());
  for (const auto& seg : transcript.segments)
    mask.insert(mask.end(), seg.tokens, seg.origin == Origin::Model ? 1 : 0);
  return mask;
}

PlanState replan_step(PlanState state, const Action& decision) {
  if (decision.kind == Action::Kind::Answer) {
    const std::string verdict = to_lower(trim(decision.body));
    if (verdict == "continue") {
      if (state.cursor < state.steps.size()) ++state.cursor;
      return state;
    }
    if (verdict == "finish") {
      state.finished = true;
      return state;
    }
    throw ProtocolError("replanning expects Continue or Finish, got '" + decision.body + "'");
  }
  if (decision.kind == Action::Kind::Tool && decision.tool_name == "plan") {
    if (!decision.tool_args.contains("plan_list") || !decision.tool_args["plan_list"].is_array())
      throw ProtocolError("plan call needs a plan_list array");
    PlanState fresh;
    for (const auto& step : decision.tool_args["plan_list"]) {
      if (!step.is_string()) throw ProtocolError("plan_list entries must be strings");
      fresh.steps.push_back(step.get<std::string>());
    }
    return fresh;
  }
  throw ProtocolError("invalid replanning decision");
}

void ToolRegistry::register_tool(std::string name, ToolFn fn) {
  tools_[std::move(name)] = std::move(fn);
}

const ToolFn* ToolRegistry::find(std::string_view name) const {
  auto it = tools_.find(name);
  return it == tools_.end() ? nullptr : &it->second;
}

std::vector<std::string> ToolRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(tools_.size());
  for (const auto& [name, _] : tools_) out.push_back(name);
  return out;
}

std::string render_search_results(const std::vector<std::string>& queries,
                                  const std::vector<std::vector<const BlockDef*>>& hits) {
  std::string out;
  for (size_t q = 0; q < queries.size(); ++q) {
    if (q) out += "\n";
    out += "\"" + queries[q] + "\"\n";
    if (q < hits.size() && !hits[q].empty()) {
      for (size_t i = 0; i < hits[q].size(); ++i) {
        const BlockDef* def = hits[q][i];
        if (i) out += "\n";
        out += "- Block: " + def->type_name + "\n";
        out += "- Library: " + (def->library.empty() ? def->library_path : def->library) + "\n";
        out += "- Description: " + def->description + "\n";
      }
    } else {
      out += "No matching blocks found.\n";
    }
  }
  return out;
}

ToolRegistry default_registry() {
  ToolRegistry registry;
  registry.register_tool("search_blocks", [](const nlohmann::ordered_json& args,
                                             Session& session) -> std::string {
    if (session.catalog == nullptr) throw Error("no catalog attached to session");
    if (!args.contains("query_list") || !args["query_list"].is_array())
      throw Error("search_blocks needs a query_list array");
    std::vector<std::string> queries;
    for (const auto& q : args["query_list"]) {
      if (!q.is_string()) throw Error("query_list entries must be strings");
      queries.push_back(q.get<std::string>());
    }
    std::string lib = args.value("lib", std::string{});
    const size_t top_k = args.value("top_k", 3);
    auto hits = session.catalog->search_blocks(queries, lib, top_k);
    return render_search_results(queries, hits);
  });
  registry.register_tool("plan", [](const nlohmann::ordered_json& args,
                                    Session& session) -> std::string {
    Action call;
    call.kind = Action::Kind::Tool;
    call.tool_name = "plan";
    call.tool_args = args;
    session.plan = replan_step(session.plan, call);
    if (session.plan_builder && !session.plan.steps.empty()) {
      SystemModel built = session.plan_builder(session.plan.steps[session.plan.cursor], session);
      ++session.plan_results;
      return "subsys_dict_" + std::to_string(session.plan_results) + " = " +
             emit_model_text(built);
    }
    return "Plan updated (" + std::to_string(session.plan.steps.size()) + " steps).";
  });
  return registry;
}

Segment dispatch(const Action& action, const ToolRegistry& registry, Session& session) {
  if (action.kind == Action::Kind::Edit) {
    auto [model, segment] = apply_edit_script(session.model, action.body, session.root_name);
    session.model = std::move(model);
    return segment;
  }
  if (action.kind != Action::Kind::Tool)
    throw ProtocolError("dispatch expects a tool call or edit turn");
  ++session.tool_calls;
  const ToolFn* fn = registry.find(action.tool_name);
  if (fn == nullptr) {
    ++session.tool_errors;
    return Segment(Origin::Tool, "<result>unknown tool: " + action.tool_name + "</result>");
  }
  try {
    return Segment(Origin::Tool, "<result>" + (*fn)(action.tool_args, session) + "</result>");
  } catch (const std::exception& e) {
    ++session.tool_errors;
    return Segment(Origin::Tool,
                   "<result>tool '" + action.tool_name + "' failed: " + e.what() + "</result>");
  }
}

namespace {

struct EditStatement {
  int line = 1;
  std::string text;
};

// Statements end at a newline outside of strings/brackets.
std::vector<EditStatement> split_statements(std::string_view script) {
  std::vector<EditStatement> out;
  EditStatement current;
  int line = 1;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  bool has_content = false;
  for (char c : script) {
    if (c == '\n') ++line;
    if (in_string) {
      current.text.push_back(c);
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
      current.text.push_back(c);
      has_content = true;
      continue;
    }
    if (c == '{' || c == '[' || c == '(') ++depth;
    if (c == '}' || c == ']' || c == ')') --depth;
    if (c == '\n' && depth <= 0) {
      if (has_content) out.push_back(std::move(current));
      current = EditStatement{};
      current.line = line;
      has_content = false;
      continue;
    }
    if (!has_content && std::isspace(static_cast<unsigned char>(c))) {
      current.line = line;
      continue;
    }
    current.text.push_back(c);
    if (!std::isspace(static_cast<unsigned char>(c))) has_content = true;
  }
  if (has_content) out.push_back(std::move(current));
  return out;
}

struct PathSegment {
  std::string key;
};

// Parses `ident["a"]["b"]...` returning ident and the bracket path; `rest`
// receives whatever follows.
std::string parse_target(const std::string& stmt, std::vector<std::string>& path,
                         std::string& rest) {
  size_t i = 0;
  while (i < stmt.size() &&
         (std::isalnum(static_cast<unsigned char>(stmt[i])) || stmt[i] == '_'))
    ++i;
  std::string ident = stmt.substr(0, i);
  path.clear();
  while (i < stmt.size() && stmt[i] == '[') {
    if (i + 1 >= stmt.size() || stmt[i + 1] != '"') break;
    size_t close = i + 2;
    std::string key;
    while (close < stmt.size() && stmt[close] != '"') {
      key.push_back(stmt[close]);
      ++close;
    }
    if (close + 1 >= stmt.size() || stmt[close + 1] != ']') break;
    path.push_back(std::move(key));
    i = close + 2;
  }
  rest = stmt.substr(i);
  return ident;
}

nlohmann::ordered_json parse_json_value(const std::string& text, int line) {
  try {
    return nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("line " + std::to_string(line) + ": bad value: " + e.what(), line);
  }
}

ParamValue param_from_edit_json(const nlohmann::ordered_json& j, int line) {
  if (j.is_number()) return ParamValue::make_number(j.get<double>());
  if (j.is_string()) return ParamValue::make_string(j.get<std::string>());
  if (j.is_boolean()) return ParamValue::make_bool(j.get<bool>());
  if (j.is_array()) {
    std::vector<double> xs;
    for (const auto& e : j) {
      if (!e.is_number())
        throw ParseError("line " + std::to_string(line) + ": list values must be numeric");
      xs.push_back(e.get<double>());
    }
    return ParamValue::make_list(std::move(xs));
  }
  throw ParseError("line " + std::to_string(line) + ": unsupported parameter value");
}

void apply_statement(SystemModel& model, const EditStatement& stmt, std::string_view root_name) {
  std::vector<std::string> path;
  std::string rest;
  const std::string ident = parse_target(stmt.text, path, rest);
  if (ident.empty())
    throw ParseError("line " + std::to_string(stmt.line) + ": expected an assignment");
  if (ident != root_name)
    throw ParseError("line " + std::to_string(stmt.line) + ": undefined variable '" + ident +
                     "'");
  const std::string rest_trimmed = trim(rest);

  // conn-append
  if (rest_trimmed.rfind(".append(", 0) == 0) {
    if (path.size() != 1 || path[0] != "Connections")
      throw ParseError("line " + std::to_string(stmt.line) +
                       ": .append is only valid on " + std::string(root_name) +
                       "[\"Connections\"]");
    std::string inner = rest_trimmed.substr(8);
    if (inner.empty() || inner.back() != ')')
      throw ParseError("line " + std::to_string(stmt.line) + ": unterminated .append(");
    inner.pop_back();
    auto j = parse_json_value(inner, stmt.line);
    if (!j.is_object() || !j.contains("Src") || !j.contains("Dst") || j.size() != 2 ||
        !j["Src"].is_string() || !j["Dst"].is_string())
      throw ParseError("line " + std::to_string(stmt.line) +
                       ": .append expects {\"Src\": ..., \"Dst\": ...}");
    model.connections.push_back({parse_endpoint(j["Src"].get<std::string>()),
                                 parse_endpoint(j["Dst"].get<std::string>())});
    return;
  }

  if (rest_trimmed.empty() || rest_trimmed[0] != '=')
    throw ParseError("line " + std::to_string(stmt.line) + ": expected '='");
  const std::string value_text = trim(rest_trimmed.substr(1));
  auto value = parse_json_value(value_text, stmt.line);

  if (path.empty()) {
    // root-assign: whole model document.
    SystemModel fresh;
    try {
      fresh = parse_model_text(value_text);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(stmt.line) + ": " + e.what(), stmt.line);
    }
    model = std::move(fresh);
    return;
  }
  if (path[0] != "Blocks")
    throw ParseError("line " + std::to_string(stmt.line) + ": unsupported path");
  if (path.size() == 2) {
    // block-upsert; reuse the document block parser via a tiny wrapper doc.
    nlohmann::ordered_json doc;
    doc["Blocks"][path[1]] = value;
    SystemModel parsed;
    try {
      parsed = parse_model_text(doc.dump());
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(stmt.line) + ": " + e.what(), stmt.line);
    }
    model.upsert_block(path[1], parsed.blocks.at(0).second);
    return;
  }
  if (path.size() == 3) {
    // param-set on an existing block.
    BlockInstance* block = model.find_block(path[1]);
    if (block == nullptr)
      throw ParseError("line " + std::to_string(stmt.line) + ": no block '" + path[1] + "'");
    if (path[2] == "Type") {
      if (!value.is_string() || value.get<std::string>().empty())
        throw ParseError("line " + std::to_string(stmt.line) + ": Type must be a string");
      block->type_name = value.get<std::string>();
      return;
    }
    block->set_param(path[2], param_from_edit_json(value, stmt.line));
    return;
  }
  throw ParseError("line " + std::to_string(stmt.line) + ": unsupported path");
}

}  // namespace

std::pair<SystemModel, Segment> apply_edit_script(const SystemModel& model,
                                                  std::string_view script,
                                                  std::string_view root_name) {
  SystemModel working = model;
  try {
    for (const auto& stmt : split_statements(script)) apply_statement(working, stmt, root_name);
  } catch (const std::exception& e) {
    return {model, Segment(Origin::Tool,
                           std::string("<result>Python execution failed. ") + e.what() +
                               "</result>")};
  }
  return {std::move(working),
          Segment(Origin::Tool,
                  "<result>Python execution completed. No errors, and no result returned."
                  "</result>")};
}

EpisodeResult run_episode(Session& session, const Policy& policy, const ToolRegistry& registry,
                          EpisodeLimits limits) {
  EpisodeResult result;
  auto over_budget = [&] { return result.transcript.total_tokens() > limits.token_budget; };
  for (int turn = 0; turn < limits.max_turns; ++turn) {
    const std::string text = policy(result.transcript, session);
    result.transcript.segments.emplace_back(Origin::Model, text);
    ++result.turns;
    if (over_budget()) {
      result.outcome = EpisodeOutcome::ContextExceeded;
      result.final_model = session.model;
      return result;
    }
    Action action;
    try {
      action = parse_action(text);
    } catch (const ProtocolError&) {
      result.outcome = EpisodeOutcome::ProtocolFailure;
      result.final_model = session.model;
      return result;
    }
    if (action.kind == Action::Kind::Answer) {
      const std::string verdict = to_lower(trim(action.body));
      if (verdict == "continue") {
        // Pure plan-state change; results only ever follow tool or edit
        // turns.
        session.plan = replan_step(session.plan, action);
        continue;
      }
      result.final_answer = action.body;
      result.transcript.answer = action.body;
      if (verdict == "finish") session.plan.finished = true;
      result.outcome = EpisodeOutcome::Finished;
      result.final_model = session.model;
      return result;
    }
    Segment seg = dispatch(action, registry, session);
    result.transcript.segments.push_back(std::move(seg));
    if (over_budget()) {
      result.outcome = EpisodeOutcome::ContextExceeded;
      result.final_model = session.model;
      return result;
    }
  }
  result.outcome = EpisodeOutcome::ContextExceeded;
  result.final_model = session.model;
  return result;
}

}  // namespace blockflow
