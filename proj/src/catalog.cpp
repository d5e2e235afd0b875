#include "blockflow/catalog.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "blockflow/util.hpp"

namespace blockflow {

bool is_conserving_domain(PortDomain d) {
  return d != PortDomain::SignalIn && d != PortDomain::SignalOut;
}

std::string_view domain_name(PortDomain d) {
  switch (d) {
    case PortDomain::SignalIn: return "signal-in";
    case PortDomain::SignalOut: return "signal-out";
    case PortDomain::Thermal: return "thermal";
    case PortDomain::Electrical: return "electrical";
    case PortDomain::Mechanical: return "mechanical";
    case PortDomain::Hydraulic: return "hydraulic";
    case PortDomain::Magnetic: return "magnetic";
  }
  return "";
}

std::optional<PortDomain> domain_from_name(std::string_view name) {
  for (PortDomain d : {PortDomain::SignalIn, PortDomain::SignalOut, PortDomain::Thermal,
                       PortDomain::Electrical, PortDomain::Mechanical, PortDomain::Hydraulic,
                       PortDomain::Magnetic}) {
    if (domain_name(d) == name) return d;
  }
  return std::nullopt;
}

const PortSpec* BlockDef::find_port(const PortId& id) const {
  for (const auto& p : ports)
    if (p.id == id) return &p;
  return nullptr;
}

const PortSpec* BlockDef::find_port_directed(const PortId& id, bool as_source) const {
  const PortSpec* any = nullptr;
  for (const auto& p : ports) {
    if (!(p.id == id)) continue;
    any = &p;
    if (id.kind != PortKind::Signal) return &p;
    if (as_source && p.domain == PortDomain::SignalOut) return &p;
    if (!as_source && p.domain == PortDomain::SignalIn) return &p;
  }
  return any;
}

const ParamSpec* BlockDef::find_param(std::string_view name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

bool BlockDef::has_conserving_ports() const {
  return std::any_of(ports.begin(), ports.end(),
                     [](const PortSpec& p) { return is_conserving_domain(p.domain); });
}

Catalog::Catalog(std::vector<BlockDef> defs) : defs_(std::move(defs)) {
  for (size_t i = 0; i < defs_.size(); ++i) {
    const auto& def = defs_[i];
    if (def.type_name.empty()) throw LoadError("catalog entry with empty type name");
    if (def.library_path.empty())
      throw LoadError("catalog entry '" + def.type_name + "' with empty library path");
    if (!by_name_.emplace(def.type_name, i).second)
      throw LoadError("duplicate catalog type '" + def.type_name + "'");
    std::set<std::string> aliases_seen;
    for (const auto& p : def.ports) {
      if (!p.alias.empty() && !aliases_seen.insert(p.alias).second)
        throw LoadError("duplicate port alias '" + p.alias + "' on '" + def.type_name + "'");
    }
    for (const auto& p : def.params) {
      if (p.min && p.max && *p.min > *p.max)
        throw LoadError("parameter '" + p.name + "' of '" + def.type_name +
                        "' has empty range");
    }
    // Inverted index over type name, aliases and description tokens.
    std::set<std::string> tokens;
    for (const auto& t : word_tokens(def.type_name)) tokens.insert(t);
    for (const auto& a : def.aliases)
      for (const auto& t : word_tokens(a)) tokens.insert(t);
    for (const auto& t : word_tokens(def.description)) tokens.insert(t);
    for (const auto& t : tokens) index_[t].push_back(i);
  }
}

const BlockDef* Catalog::find(std::string_view type_name) const {
  auto it = by_name_.find(type_name);
  return it == by_name_.end() ? nullptr : &defs_[it->second];
}

const BlockDef& Catalog::resolve_type(std::string_view type_name) const {
  if (const auto* def = find(type_name)) return *def;
  // Nearest names by edit distance, for the error message.
  std::vector<std::pair<size_t, std::string>> scored;
  scored.reserve(defs_.size());
  for (const auto& def : defs_) scored.emplace_back(levenshtein(type_name, def.type_name),
                                                    def.type_name);
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> suggestions;
  for (size_t i = 0; i < scored.size() && i < 3; ++i) suggestions.push_back(scored[i].second);
  throw NotFoundError("no block type named '" + std::string(type_name) + "'",
                      std::move(suggestions));
}

std::vector<std::vector<const BlockDef*>> Catalog::search_blocks(
    std::span<const std::string> queries, std::string_view lib, size_t top_k) const {
  std::vector<std::vector<const BlockDef*>> results;
  results.reserve(queries.size());
  for (const auto& query : queries) {
    std::vector<std::string> qtokens = word_tokens(query);
    std::sort(qtokens.begin(), qtokens.end());
    qtokens.erase(std::unique(qtokens.begin(), qtokens.end()), qtokens.end());

    std::vector<std::pair<double, size_t>> scored;  // (-score, index) for stable ordering
    for (size_t i = 0; i < defs_.size(); ++i) {
      const auto& def = defs_[i];
      if (!lib.empty() && def.library_path.rfind(lib, 0) != 0) continue;
      std::set<std::string> type_tokens;
      for (const auto& t : word_tokens(def.type_name)) type_tokens.insert(t);
      std::set<std::string> alias_tokens;
      for (const auto& a : def.aliases)
        for (const auto& t : word_tokens(a)) alias_tokens.insert(t);
      std::set<std::string> desc_tokens;
      for (const auto& t : word_tokens(def.description)) desc_tokens.insert(t);
      double score = 0;
      for (const auto& t : qtokens) {
        if (type_tokens.count(t)) score += 3;
        if (alias_tokens.count(t)) score += 1;
        if (desc_tokens.count(t)) score += 1;
      }
      if (score > 0) scored.emplace_back(-score, i);
    }
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return defs_[a.second].type_name < defs_[b.second].type_name;
    });
    std::vector<const BlockDef*> hits;
    for (size_t i = 0; i < scored.size() && i < top_k; ++i)
      hits.push_back(&defs_[scored[i].second]);
    results.push_back(std::move(hits));
  }
  return results;
}

const PortSpec& resolve_port(const BlockDef& def, const PortId& port) {
  if (port.kind == PortKind::Alias) {
    for (const auto& p : def.ports)
      if (p.alias == port.alias) return p;
  } else if (const auto* p = def.find_port(port)) {
    return *p;
  }
  std::string valid;
  for (const auto& p : def.ports) {
    if (!valid.empty()) valid += ", ";
    valid += render_port_id(p.id);
    if (!p.alias.empty()) valid += " (" + p.alias + ")";
  }
  throw NotFoundError("block '" + def.type_name + "' has no port '" + render_port_id(port) +
                      "'; valid ports: " + valid);
}

namespace {

using nlohmann::json;

ParamValue param_value_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return ParamValue::make_number(j.get<double>());
  if (j.is_string()) return ParamValue::make_string(j.get<std::string>());
  if (j.is_boolean()) return ParamValue::make_bool(j.get<bool>());
  throw LoadError("unsupported default value in " + where);
}

ParamSpec param_spec_from_json(const json& j, const std::string& type_name) {
  ParamSpec spec;
  if (!j.contains("name") || !j["name"].is_string())
    throw LoadError("parameter without name on '" + type_name + "'");
  spec.name = j["name"].get<std::string>();
  const std::string where = "param '" + spec.name + "' of '" + type_name + "'";
  std::string kind = j.value("kind", std::string("number"));
  if (kind == "number") spec.kind = ParamSpec::Kind::Number;
  else if (kind == "string") spec.kind = ParamSpec::Kind::String;
  else if (kind == "bool") spec.kind = ParamSpec::Kind::Bool;
  else if (kind == "enum") spec.kind = ParamSpec::Kind::Enum;
  else throw LoadError("unknown kind '" + kind + "' for " + where);
  if (j.contains("min")) spec.min = j["min"].get<double>();
  if (j.contains("max")) spec.max = j["max"].get<double>();
  if (j.contains("values")) {
    for (const auto& v : j["values"]) spec.enum_values.push_back(v.get<std::string>());
  }
  if (spec.kind == ParamSpec::Kind::Enum && spec.enum_values.empty())
    throw LoadError("enum " + where + " needs non-empty values");
  spec.required = j.value("required", false);
  if (j.contains("default")) spec.default_value = param_value_from_json(j["default"], where);
  return spec;
}

PortSpec port_spec_from_json(const json& j, const std::string& type_name) {
  PortSpec spec;
  if (!j.contains("id") || !j["id"].is_string())
    throw LoadError("port without id on '" + type_name + "'");
  spec.id = parse_port_id(j["id"].get<std::string>());
  const std::string dom = j.value("domain", std::string("signal-in"));
  auto d = domain_from_name(dom);
  if (!d) throw LoadError("unknown domain '" + dom + "' on '" + type_name + "'");
  spec.domain = *d;
  spec.required = j.value("required", false);
  spec.alias = j.value("alias", std::string{});
  return spec;
}

}  // namespace

Catalog load_catalog_text(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed catalog: ") + e.what());
  }
  if (root.is_null()) return Catalog{};
  if (!root.is_object() || !root.contains("blocks"))
    throw LoadError("catalog must be an object with a \"blocks\" array");
  const int version = root.value("version", 1);
  if (version != 1) throw LoadError("unsupported catalog version " + std::to_string(version));
  std::vector<BlockDef> defs;
  for (const auto& entry : root["blocks"]) {
    BlockDef def;
    if (!entry.contains("type") || !entry["type"].is_string())
      throw LoadError("catalog entry without \"type\"");
    def.type_name = entry["type"].get<std::string>();
    def.library_path = entry.value("library_path", std::string{});
    def.library = entry.value("library", std::string{});
    def.description = entry.value("description", std::string{});
    def.bridge = entry.value("bridge", false);
    if (entry.contains("aliases"))
      for (const auto& a : entry["aliases"]) def.aliases.push_back(a.get<std::string>());
    if (entry.contains("ports"))
      for (const auto& p : entry["ports"]) def.ports.push_back(port_spec_from_json(p, def.type_name));
    if (entry.contains("params"))
      for (const auto& p : entry["params"])
        def.params.push_back(param_spec_from_json(p, def.type_name));
    defs.push_back(std::move(def));
  }
  return Catalog(std::move(defs));
}

Catalog load_catalog(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open catalog file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (trim(text).empty()) return Catalog{};
  return load_catalog_text(text);
}

}  // namespace blockflow
