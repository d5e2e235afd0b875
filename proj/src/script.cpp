#include "blockflow/script.hpp"

#include "blockflow/util.hpp"

namespace blockflow {

namespace {

std::string matlab_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    out.push_back(c);
    if (c == '\'') out.push_back('\'');
  }
  out += "'";
  return out;
}

std::string render_param_value(const ParamValue& v) {
  switch (v.kind) {
    case ParamValue::Kind::Number:
      if (v.unit.empty()) return format_double(v.number);
      return matlab_quote(format_double(v.number) + " " + v.unit);
    case ParamValue::Kind::String: return matlab_quote(v.str);
    case ParamValue::Kind::Bool: return v.boolean ? "\"true\"" : "\"false\"";
    case ParamValue::Kind::NumberList: {
      std::string out = "[";
      for (size_t i = 0; i < v.list.size(); ++i) {
        if (i) out += " ";
        out += format_double(v.list[i]);
      }
      out += "]";
      return out;
    }
  }
  return "''";
}

std::string render_port(const PortRef& ref, const Catalog& catalog, const BlockInstance& inst) {
  PortId port = ref.port;
  if (port.kind == PortKind::Alias) {
    const BlockDef& def = catalog.resolve_type(inst.type_name);
    bool found = false;
    for (const auto& p : def.ports) {
      if (p.alias == port.alias) {
        port = p.id;
        found = true;
        break;
      }
    }
    if (!found)
      throw EmitError("cannot resolve port alias '" + port.alias + "' on '" + ref.block + "' (" +
                      inst.type_name + ")");
  }
  return ref.block + "/" + render_port_id(port);
}

}  // namespace

CommandScript emit_script(const SystemModel& model_in, const Catalog& catalog,
                          std::string_view target_name) {
  const SystemModel model = canonicalize(model_in);
  CommandScript script;
  script.target = std::string(target_name);

  for (const auto& [name, inst] : model.blocks) {
    if (inst.is_subsystem())
      throw EmitError("subsystem block '" + name + "' cannot be emitted; flatten first");
    const BlockDef* def = catalog.find(inst.type_name);
    if (def == nullptr) throw EmitError("unresolvable block type '" + inst.type_name + "'");
    AddBlock cmd;
    cmd.source_path = def->library_path;
    cmd.dest_path = script.target + "/" + name;
    cmd.params = inst.params;
    script.commands.push_back(std::move(cmd));
  }
  for (const auto& conn : model.connections) {
    if (!conn.is_single())
      throw EmitError("connection " + render_endpoint(conn.src) + " -> " +
                      render_endpoint(conn.dst) + " is not in canonical form");
    const PortRef src = conn.src.ref();
    const PortRef dst = conn.dst.ref();
    const BlockInstance* sb = model.find_block(src.block);
    const BlockInstance* db = model.find_block(dst.block);
    if (sb == nullptr || db == nullptr)
      throw EmitError("connection endpoint references unknown block '" +
                      (sb == nullptr ? src.block : dst.block) + "'");
    AddLine cmd;
    cmd.model = script.target;
    cmd.src = render_port(src, catalog, *sb);
    cmd.dst = render_port(dst, catalog, *db);
    script.commands.push_back(std::move(cmd));
  }
  return script;
}

std::string render_script(const CommandScript& script) {
  std::string out = "% Model commands for '" + script.target + "'\n";
  for (const auto& command : script.commands) {
    if (const auto* add = std::get_if<AddBlock>(&command)) {
      out += "add_block(" + matlab_quote(add->source_path) + ", " + matlab_quote(add->dest_path);
      for (const auto& [name, value] : add->params)
        out += ", " + matlab_quote(name) + ", " + render_param_value(value);
      out += ");\n";
    } else if (const auto* line = std::get_if<AddLine>(&command)) {
      out += "add_line(" + matlab_quote(line->model) + ", " + matlab_quote(line->src) + ", " +
             matlab_quote(line->dst);
      if (line->autorouting) out += ", 'autorouting', 'on'";
      out += ");\n";
    } else if (const auto* set = std::get_if<SetParam>(&command)) {
      out += "set_param(" + matlab_quote(set->path) + ", " + matlab_quote(set->name) + ", " +
             render_param_value(set->value) + ");\n";
    }
  }
  out += "% Simulink.BlockDiagram.arrangeSystem(gcs, FullLayout='true')\n";
  return out;
}

std::vector<std::string> lint_script(const CommandScript& script,
                                     const std::set<std::string>& preexisting) {
  std::vector<std::string> problems;
  std::set<std::string> known = preexisting;
  auto block_of = [](const std::string& port_string) {
    const size_t slash = port_string.rfind('/');
    return slash == std::string::npos ? port_string : port_string.substr(0, slash);
  };
  for (const auto& command : script.commands) {
    if (const auto* add = std::get_if<AddBlock>(&command)) {
      const size_t slash = add->dest_path.rfind('/');
      known.insert(slash == std::string::npos ? add->dest_path
                                              : add->dest_path.substr(slash + 1));
    } else if (const auto* line = std::get_if<AddLine>(&command)) {
      for (const std::string& end : {block_of(line->src), block_of(line->dst)}) {
        if (!known.count(end))
          problems.push_back("add_line references '" + end + "' before any add_block");
      }
    }
  }
  return problems;
}

}  // namespace blockflow
