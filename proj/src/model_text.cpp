#include "blockflow/model_text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <set>
#include <vector>

#include "blockflow/util.hpp"

namespace blockflow {

namespace {

using ordered_json = nlohmann::ordered_json;

std::pair<int, int> line_col(std::string_view text, size_t pos) {
  int line = 1, col = 1;
  for (size_t i = 0; i < pos && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// DOM builder that rejects duplicate object keys.
class DupCheckingSax {
 public:
  explicit DupCheckingSax(std::string_view text) : text_(text) {}

  ordered_json take_root() { return std::move(root_); }

  bool null() { return add(nullptr); }
  bool boolean(bool v) { return add(v); }
  bool number_integer(std::int64_t v) { return add(v); }
  bool number_unsigned(std::uint64_t v) { return add(v); }
  bool number_float(double v, const std::string&) { return add(v); }
  bool string(std::string& v) { return add(v); }
  bool binary(ordered_json::binary_t& v) { return add(v); }

  bool start_object(std::size_t) {
    stack_.push_back(Frame{ordered_json::object(), {}, {}, true});
    return true;
  }
  bool key(std::string& k) {
    auto& frame = stack_.back();
    if (!frame.seen.insert(k).second) throw ParseError("duplicate key '" + k + "'");
    frame.pending = k;
    return true;
  }
  bool end_object() { return pop(); }
  bool start_array(std::size_t) {
    stack_.push_back(Frame{ordered_json::array(), {}, {}, false});
    return true;
  }
  bool end_array() { return pop(); }

  bool parse_error(std::size_t position, const std::string&,
                   const nlohmann::detail::exception& ex) {
    auto [line, col] = line_col(text_, position > 0 ? position - 1 : 0);
    throw ParseError(std::string("malformed document: ") + ex.what(), line, col);
  }

 private:
  struct Frame {
    ordered_json value;
    std::set<std::string> seen;
    std::string pending;
    bool is_object;
  };

  template <typename T>
  bool add(T&& v) {
    if (stack_.empty()) {
      root_ = std::forward<T>(v);
      return true;
    }
    auto& frame = stack_.back();
    if (frame.is_object)
      frame.value[frame.pending] = std::forward<T>(v);
    else
      frame.value.push_back(std::forward<T>(v));
    return true;
  }

  bool pop() {
    ordered_json done = std::move(stack_.back().value);
    stack_.pop_back();
    return add(std::move(done));
  }

  std::string_view text_;
  std::vector<Frame> stack_;
  ordered_json root_;
};

ParamValue param_from_json(const ordered_json& j, const std::string& path) {
  if (j.is_number()) return ParamValue::make_number(j.get<double>());
  if (j.is_string()) return ParamValue::make_string(j.get<std::string>());
  if (j.is_boolean()) return ParamValue::make_bool(j.get<bool>());
  if (j.is_array()) {
    std::vector<double> xs;
    xs.reserve(j.size());
    for (const auto& e : j) {
      if (!e.is_number()) throw ParseError("non-numeric list entry in " + path);
      xs.push_back(e.get<double>());
    }
    return ParamValue::make_list(std::move(xs));
  }
  if (j.is_object()) {
    if (j.size() == 2 && j.contains("Value") && j.contains("Unit") &&
        j["Value"].is_number() && j["Unit"].is_string()) {
      return ParamValue::make_number(j["Value"].get<double>(), j["Unit"].get<std::string>());
    }
    throw ParseError("unsupported object value in " + path);
  }
  throw ParseError("unsupported value in " + path);
}

SystemModel model_from_json(const ordered_json& j, const std::string& where);

BlockInstance block_from_json(const ordered_json& j, const std::string& name) {
  if (!j.is_object()) throw ParseError("block '" + name + "' must be an object");
  BlockInstance inst;
  if (!j.contains("Type") || !j["Type"].is_string() || j["Type"].get<std::string>().empty())
    throw ParseError("block '" + name + "' is missing a non-empty \"Type\"");
  inst.type_name = j["Type"].get<std::string>();
  const bool subsystem = inst.type_name == "Subsystem";
  ordered_json inner = ordered_json::object();
  bool has_inner = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "Type") continue;
    if (subsystem && key == "Summary") {
      if (!value.is_string()) throw ParseError("\"Summary\" of '" + name + "' must be a string");
      inst.summary = value.get<std::string>();
      continue;
    }
    if (subsystem && key == "Ports") {
      if (!value.is_object()) throw ParseError("\"Ports\" of '" + name + "' must be an object");
      for (const auto& [port, target] : value.items()) {
        if (!target.is_string())
          throw ParseError("port binding '" + port + "' of '" + name + "' must be a string");
        inst.port_bindings.emplace_back(parse_port_id(port),
                                        parse_port_ref(target.get<std::string>()));
      }
      continue;
    }
    if (subsystem && (key == "Blocks" || key == "Connections")) {
      inner[key] = value;
      has_inner = true;
      continue;
    }
    if (key == "Blocks" || key == "Connections" || key == "Ports" || key == "Summary")
      throw ParseError("key \"" + key + "\" is only valid on Subsystem blocks ('" + name + "')");
    inst.params.emplace_back(key,
                             param_from_json(value, "block '" + name + "' param '" + key + "'"));
  }
  if (has_inner)
    inst.inner = std::make_shared<SystemModel>(model_from_json(inner, "subsystem '" + name + "'"));
  return inst;
}

SystemModel model_from_json(const ordered_json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + " must be a JSON object");
  SystemModel model;
  for (const auto& [key, value] : j.items()) {
    if (key == "Blocks") {
      if (!value.is_object()) throw ParseError("\"Blocks\" must be an object in " + where);
      for (const auto& [name, body] : value.items())
        model.add_block(name, block_from_json(body, name));
    } else if (key == "Connections") {
      if (!value.is_array()) throw ParseError("\"Connections\" must be an array in " + where);
      size_t i = 0;
      for (const auto& entry : value) {
        const std::string at = where + " connection " + std::to_string(i);
        if (!entry.is_object() || !entry.contains("Src") || !entry.contains("Dst") ||
            entry.size() != 2 || !entry["Src"].is_string() || !entry["Dst"].is_string())
          throw ParseError(at + " must be {\"Src\": ..., \"Dst\": ...}");
        model.connections.push_back({parse_endpoint(entry["Src"].get<std::string>()),
                                     parse_endpoint(entry["Dst"].get<std::string>())});
        ++i;
      }
    } else {
      throw ParseError("unknown key \"" + key + "\" in " + where);
    }
  }
  return model;
}

void append_json_string(std::string& out, std::string_view s) {
  out.push_back('"');
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(static_cast<char>(c));
        }
    }
  }
  out.push_back('"');
}

void append_param(std::string& out, const ParamValue& v) {
  switch (v.kind) {
    case ParamValue::Kind::Number:
      if (v.unit.empty()) {
        out += format_double(v.number);
      } else {
        out += "{\"Value\": " + format_double(v.number) + ", \"Unit\": ";
        append_json_string(out, v.unit);
        out += "}";
      }
      break;
    case ParamValue::Kind::String: append_json_string(out, v.str); break;
    case ParamValue::Kind::Bool: out += v.boolean ? "true" : "false"; break;
    case ParamValue::Kind::NumberList: {
      out += "[";
      for (size_t i = 0; i < v.list.size(); ++i) {
        if (i) out += ", ";
        out += format_double(v.list[i]);
      }
      out += "]";
      break;
    }
  }
}

void append_blocks_object(std::string& out, const SystemModel& model, int indent);
void append_connections_array(std::string& out, const SystemModel& model, int indent);

void append_block(std::string& out, const BlockInstance& inst, int indent) {
  const std::string pad(static_cast<size_t>(indent), ' ');
  const std::string pad2(static_cast<size_t>(indent) + 2, ' ');
  if (!inst.inner && inst.summary.empty() && inst.port_bindings.empty()) {
    out += "{\"Type\": ";
    append_json_string(out, inst.type_name);
    for (const auto& [k, v] : inst.params) {
      out += ", ";
      append_json_string(out, k);
      out += ": ";
      append_param(out, v);
    }
    out += "}";
    return;
  }
  out += "{\n" + pad2 + "\"Type\": ";
  append_json_string(out, inst.type_name);
  for (const auto& [k, v] : inst.params) {
    out += ",\n" + pad2;
    append_json_string(out, k);
    out += ": ";
    append_param(out, v);
  }
  if (!inst.summary.empty()) {
    out += ",\n" + pad2 + "\"Summary\": ";
    append_json_string(out, inst.summary);
  }
  if (!inst.port_bindings.empty()) {
    out += ",\n" + pad2 + "\"Ports\": {";
    for (size_t i = 0; i < inst.port_bindings.size(); ++i) {
      if (i) out += ", ";
      append_json_string(out, render_port_id(inst.port_bindings[i].first));
      out += ": ";
      append_json_string(out, render_port_ref(inst.port_bindings[i].second));
    }
    out += "}";
  }
  if (inst.inner) {
    out += ",\n" + pad2 + "\"Blocks\": ";
    append_blocks_object(out, *inst.inner, indent + 2);
    out += ",\n" + pad2 + "\"Connections\": ";
    append_connections_array(out, *inst.inner, indent + 2);
  }
  out += "\n" + pad + "}";
}

void append_blocks_object(std::string& out, const SystemModel& model, int indent) {
  if (model.blocks.empty()) {
    out += "{}";
    return;
  }
  const std::string pad(static_cast<size_t>(indent), ' ');
  const std::string pad2(static_cast<size_t>(indent) + 2, ' ');
  out += "{\n";
  for (size_t i = 0; i < model.blocks.size(); ++i) {
    out += pad2;
    append_json_string(out, model.blocks[i].first);
    out += ": ";
    append_block(out, model.blocks[i].second, indent + 2);
    if (i + 1 < model.blocks.size()) out += ",";
    out += "\n";
  }
  out += pad + "}";
}

void append_connections_array(std::string& out, const SystemModel& model, int indent) {
  if (model.connections.empty()) {
    out += "[]";
    return;
  }
  const std::string pad(static_cast<size_t>(indent), ' ');
  const std::string pad2(static_cast<size_t>(indent) + 2, ' ');
  out += "[\n";
  for (size_t i = 0; i < model.connections.size(); ++i) {
    out += pad2 + "{\"Src\": ";
    append_json_string(out, render_endpoint(model.connections[i].src));
    out += ", \"Dst\": ";
    append_json_string(out, render_endpoint(model.connections[i].dst));
    out += "}";
    if (i + 1 < model.connections.size()) out += ",";
    out += "\n";
  }
  out += pad + "]";
}

}  // namespace

SystemModel parse_model_text(std::string_view text) {
  DupCheckingSax sax(text);
  nlohmann::ordered_json::sax_parse(text, &sax);
  return model_from_json(sax.take_root(), "model");
}

std::string emit_model_text(const SystemModel& model) {
  std::string out = "{\n  \"Blocks\": ";
  append_blocks_object(out, model, 2);
  out += ",\n  \"Connections\": ";
  append_connections_array(out, model, 2);
  out += "\n}\n";
  return out;
}

std::string emit_block_json(const BlockInstance& inst) {
  std::string out;
  append_block(out, inst, 0);
  return out;
}

}  // namespace blockflow
