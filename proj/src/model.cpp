#include "blockflow/model.hpp"

#include <algorithm>
#include <cctype>

#include "blockflow/util.hpp"

namespace blockflow {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::optional<int> parse_index(std::string_view s) {
  if (!all_digits(s)) return std::nullopt;
  int v = 0;
  for (char c : s) {
    v = v * 10 + (c - '0');
    if (v > 1'000'000) return std::nullopt;
  }
  return v;
}

}  // namespace

PortId parse_port_id(std::string_view token) {
  if (token.empty()) throw ParseError("empty port token");
  auto idx_after = [&](std::string_view prefix) -> std::optional<int> {
    if (token.size() <= prefix.size() || token.substr(0, prefix.size()) != prefix)
      return std::nullopt;
    return parse_index(token.substr(prefix.size()));
  };
  if (auto n = idx_after("LConn")) {
    if (*n == 0) throw ParseError("port index must be >= 1: '" + std::string(token) + "'");
    return PortId::conserving_left(*n);
  }
  if (auto n = idx_after("RConn")) {
    if (*n == 0) throw ParseError("port index must be >= 1: '" + std::string(token) + "'");
    return PortId::conserving_right(*n);
  }
  if (auto n = parse_index(token)) {
    if (*n == 0) throw ParseError("port index must be >= 1: '" + std::string(token) + "'");
    return PortId::signal(*n);
  }
  return PortId::named(std::string(token));
}

std::string render_port_id(const PortId& id) {
  switch (id.kind) {
    case PortKind::Signal: return std::to_string(id.index);
    case PortKind::ConservingLeft: return "LConn" + std::to_string(id.index);
    case PortKind::ConservingRight: return "RConn" + std::to_string(id.index);
    case PortKind::Alias: return id.alias;
  }
  return {};
}

ParamValue ParamValue::make_number(double v, std::string unit) {
  ParamValue p;
  p.kind = Kind::Number;
  p.number = v;
  p.unit = std::move(unit);
  return p;
}

ParamValue ParamValue::make_string(std::string v) {
  ParamValue p;
  p.kind = Kind::String;
  p.str = std::move(v);
  return p;
}

ParamValue ParamValue::make_bool(bool v) {
  ParamValue p;
  p.kind = Kind::Bool;
  p.boolean = v;
  return p;
}

ParamValue ParamValue::make_list(std::vector<double> v) {
  ParamValue p;
  p.kind = Kind::NumberList;
  p.list = std::move(v);
  return p;
}

const ParamValue* BlockInstance::find_param(std::string_view name) const {
  for (const auto& [k, v] : params)
    if (k == name) return &v;
  return nullptr;
}

void BlockInstance::set_param(const std::string& name, ParamValue v) {
  for (auto& [k, val] : params) {
    if (k == name) {
      val = std::move(v);
      return;
    }
  }
  params.emplace_back(name, std::move(v));
}

bool operator==(const BlockInstance& a, const BlockInstance& b) {
  if (a.type_name != b.type_name || a.params != b.params || a.summary != b.summary ||
      a.port_bindings != b.port_bindings)
    return false;
  if (!a.inner != !b.inner) return false;
  if (a.inner && !(*a.inner == *b.inner)) return false;
  return true;
}

const BlockInstance* SystemModel::find_block(std::string_view name) const {
  for (const auto& [n, inst] : blocks)
    if (n == name) return &inst;
  return nullptr;
}

BlockInstance* SystemModel::find_block(std::string_view name) {
  for (auto& [n, inst] : blocks)
    if (n == name) return &inst;
  return nullptr;
}

bool SystemModel::has_block(std::string_view name) const { return find_block(name) != nullptr; }

void SystemModel::add_block(std::string name, BlockInstance inst) {
  if (name.empty()) throw Error("block name must be non-empty");
  if (has_block(name)) throw Error("duplicate block name '" + name + "'");
  blocks.emplace_back(std::move(name), std::move(inst));
}

void SystemModel::upsert_block(const std::string& name, BlockInstance inst) {
  if (name.empty()) throw Error("block name must be non-empty");
  if (auto* existing = find_block(name)) {
    *existing = std::move(inst);
    return;
  }
  blocks.emplace_back(name, std::move(inst));
}

bool operator==(const SystemModel& a, const SystemModel& b) {
  return a.blocks == b.blocks && a.connections == b.connections;
}

PortRef parse_port_ref(std::string_view text, const SystemModel* context) {
  const size_t first = text.find('/');
  if (first == std::string_view::npos)
    throw ParseError("port reference needs 'Block/Port': '" + std::string(text) + "'");
  size_t split = first;
  if (text.find('/', first + 1) != std::string_view::npos) {
    if (context == nullptr)
      throw ParseError("ambiguous port reference: '" + std::string(text) + "'");
    // Greedy: longest known block name that is followed by '/'.
    bool found = false;
    for (size_t pos = text.rfind('/'); pos != std::string_view::npos;
         pos = (pos == 0 ? std::string_view::npos : text.rfind('/', pos - 1))) {
      if (context->has_block(text.substr(0, pos))) {
        split = pos;
        found = true;
        break;
      }
      if (pos == 0) break;
    }
    if (!found)
      throw ParseError("no known block matches reference '" + std::string(text) + "'");
  }
  std::string block(text.substr(0, split));
  std::string_view port = text.substr(split + 1);
  if (block.empty()) throw ParseError("empty block name in '" + std::string(text) + "'");
  if (port.empty()) throw ParseError("empty port token in '" + std::string(text) + "'");
  return {std::move(block), parse_port_id(port)};
}

std::string render_port_ref(const PortRef& ref) {
  return ref.block + "/" + render_port_id(ref.port);
}

Endpoint parse_endpoint(std::string_view text, const SystemModel* context) {
  const size_t paren = text.find("/(");
  if (paren == std::string_view::npos || text.back() != ')') {
    auto ref = parse_port_ref(text, context);
    return Endpoint::single(std::move(ref));
  }
  std::string block(text.substr(0, paren));
  if (block.empty()) throw ParseError("empty block name in '" + std::string(text) + "'");
  std::string_view list = text.substr(paren + 2, text.size() - paren - 3);
  Endpoint ep;
  ep.block = std::move(block);
  size_t start = 0;
  while (start <= list.size()) {
    size_t comma = list.find(',', start);
    std::string_view token =
        comma == std::string_view::npos ? list.substr(start) : list.substr(start, comma - start);
    ep.ports.push_back(parse_port_id(trim(token)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (ep.ports.empty()) throw ParseError("empty port list in '" + std::string(text) + "'");
  return ep;
}

std::string render_endpoint(const Endpoint& ep) {
  if (ep.is_single()) return render_port_ref(ep.ref());
  std::string out = ep.block + "/(";
  for (size_t i = 0; i < ep.ports.size(); ++i) {
    if (i) out += ",";
    out += render_port_id(ep.ports[i]);
  }
  out += ")";
  return out;
}

std::vector<Connection> expand_connection(const Connection& conn) {
  if (conn.is_single()) return {conn};
  const size_t ns = conn.src.ports.size();
  const size_t nd = conn.dst.ports.size();
  if (ns != nd)
    throw ExpandError("multi-port connection arity mismatch: " + render_endpoint(conn.src) +
                      " -> " + render_endpoint(conn.dst));
  std::vector<Connection> out;
  out.reserve(ns);
  for (size_t i = 0; i < ns; ++i) {
    out.push_back({Endpoint::single({conn.src.block, conn.src.ports[i]}),
                   Endpoint::single({conn.dst.block, conn.dst.ports[i]})});
  }
  return out;
}

SystemModel canonicalize(const SystemModel& model) {
  SystemModel out;
  out.blocks.reserve(model.blocks.size());
  for (const auto& [name, inst] : model.blocks) {
    BlockInstance copy = inst;
    std::sort(copy.params.begin(), copy.params.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::sort(copy.port_bindings.begin(), copy.port_bindings.end());
    if (copy.inner) copy.inner = std::make_shared<SystemModel>(canonicalize(*copy.inner));
    out.blocks.emplace_back(name, std::move(copy));
  }
  std::sort(out.blocks.begin(), out.blocks.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  for (const auto& conn : model.connections) {
    if (conn.is_single()) {
      out.connections.push_back(conn);
    } else if (conn.src.ports.size() == conn.dst.ports.size()) {
      auto expanded = expand_connection(conn);
      out.connections.insert(out.connections.end(), expanded.begin(), expanded.end());
    } else {
      // Structurally invalid; kept as-is for the validator.
      out.connections.push_back(conn);
    }
  }
  std::sort(out.connections.begin(), out.connections.end());
  out.connections.erase(std::unique(out.connections.begin(), out.connections.end()),
                        out.connections.end());
  return out;
}

bool canonical_equal(const SystemModel& a, const SystemModel& b) {
  return canonicalize(a) == canonicalize(b);
}

SystemModel merge(const SystemModel& a, const SystemModel& b) {
  SystemModel out = a;
  for (const auto& [name, inst] : b.blocks) {
    if (const auto* existing = out.find_block(name)) {
      // Parameter order is irrelevant for identity.
      BlockInstance lhs = *existing;
      BlockInstance rhs = inst;
      std::sort(lhs.params.begin(), lhs.params.end(),
                [](const auto& x, const auto& y) { return x.first < y.first; });
      std::sort(rhs.params.begin(), rhs.params.end(),
                [](const auto& x, const auto& y) { return x.first < y.first; });
      if (!(lhs == rhs)) throw MergeConflict(name);
    } else {
      out.blocks.emplace_back(name, inst);
    }
  }
  out.connections.insert(out.connections.end(), b.connections.begin(), b.connections.end());
  return canonicalize(out);
}

size_t estimate_tokens(std::string_view text) {
  size_t count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool word = std::isalnum(c) || c == '_' || c >= 0x80;
    if (word) {
      if (!in_word) ++count;  // new word run
      in_word = true;
    } else {
      in_word = false;
      if (!std::isspace(c)) ++count;  // punctuation character
    }
  }
  return count;
}

}  // namespace blockflow
