#include "blockflow/ingest.hpp"

#include <algorithm>
#include <map>

#include "blockflow/util.hpp"

namespace blockflow {

namespace {

// Style-only parameters discarded on ingest.
const char* const kDroppedParams[] = {"Position", "ZOrder", "BlockMirror", "LibraryVersion",
                                      "BlockRotation", "ShowName", "NameLocation", "FontSize",
                                      "ForegroundColor", "BackgroundColor"};

bool is_dropped_param(std::string_view name) {
  return std::any_of(std::begin(kDroppedParams), std::end(kDroppedParams),
                     [&](const char* d) { return name == d; });
}

std::string normalize_name(std::string_view raw, std::vector<std::string>& remarks) {
  std::string name = collapse_whitespace(raw);
  if (name.find('/') != std::string::npos) {
    std::string renamed;
    for (char c : name) {
      if (c == '/')
        renamed += "∕";  // division slash; '/' is reserved for port refs
      else
        renamed.push_back(c);
    }
    remarks.push_back("block name '" + name + "' contains '/', renamed to '" + renamed + "'");
    name = std::move(renamed);
  }
  return name;
}

std::string last_path_segment(std::string_view path) {
  const size_t pos = path.rfind('/');
  std::string seg(pos == std::string_view::npos ? path : path.substr(pos + 1));
  return collapse_whitespace(seg);
}

ParamValue param_from_text(const std::string& text) {
  if (auto num = parse_double(text)) return ParamValue::make_number(*num);
  // "[1, 2, 3]" style numeric vectors.
  if (text.size() >= 2 && text.front() == '[' && text.back() == ']') {
    std::vector<double> xs;
    std::string_view body(text.data() + 1, text.size() - 2);
    size_t start = 0;
    bool ok = !body.empty();
    while (ok && start <= body.size()) {
      size_t comma = body.find(',', start);
      std::string_view tok = comma == std::string_view::npos ? body.substr(start)
                                                             : body.substr(start, comma - start);
      auto v = parse_double(trim(tok));
      if (!v) {
        ok = false;
        break;
      }
      xs.push_back(*v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (ok) return ParamValue::make_list(std::move(xs));
  }
  return ParamValue::make_string(text);
}

// "17#out:1" -> (sid "17", port). Throws IngestError on unknown shapes.
std::pair<std::string, PortId> parse_line_token(const std::string& token) {
  const size_t hash = token.find('#');
  const size_t colon = token.find(':', hash == std::string::npos ? 0 : hash);
  if (hash == std::string::npos || colon == std::string::npos || colon < hash)
    throw IngestError("unsupported line endpoint '" + token + "'");
  const std::string sid = token.substr(0, hash);
  const std::string kind = token.substr(hash + 1, colon - hash - 1);
  int index = 0;
  try {
    index = std::stoi(token.substr(colon + 1));
  } catch (...) {
    throw IngestError("bad port index in line endpoint '" + token + "'");
  }
  if (index < 1) throw IngestError("bad port index in line endpoint '" + token + "'");
  if (kind == "out" || kind == "in") return {sid, PortId::signal(index)};
  if (kind == "lconn") return {sid, PortId::conserving_left(index)};
  if (kind == "rconn") return {sid, PortId::conserving_right(index)};
  throw IngestError("unsupported port kind '" + kind + "' in '" + token + "'");
}

SystemModel ingest_system(const XmlNode& system, std::vector<std::string>& remarks);

void ingest_block(const XmlNode& node, SystemModel& model, std::map<std::string, std::string>& sids,
                  std::vector<std::string>& remarks) {
  const std::string* name_attr = node.attr("Name");
  if (name_attr == nullptr) throw IngestError("<Block> without Name attribute");
  const std::string name = normalize_name(*name_attr, remarks);
  if (model.has_block(name)) throw IngestError("duplicate block name '" + name + "'");

  BlockInstance inst;
  const std::string* block_type = node.attr("BlockType");
  std::string source_block;
  for (const auto& child : node.children) {
    if (child.tag == "P") {
      const std::string* pname = child.attr("Name");
      if (pname == nullptr) continue;
      if (*pname == "SourceBlock") {
        source_block = collapse_whitespace(child.text);
        continue;
      }
      if (is_dropped_param(*pname)) continue;
      inst.params.emplace_back(*pname, param_from_text(child.text));
    } else if (child.tag == "System") {
      inst.inner = std::make_shared<SystemModel>(ingest_system(child, remarks));
    } else if (child.tag == "PortCounts" || child.tag == "Port" || child.tag == "InstanceData") {
      // Port/arity metadata; the catalog is authoritative for ports.
    } else {
      remarks.push_back("ignored <" + child.tag + "> under block '" + name + "'");
    }
  }
  if (inst.inner) {
    inst.type_name = "Subsystem";
  } else if (!source_block.empty()) {
    inst.type_name = last_path_segment(source_block);
  } else if (block_type != nullptr && *block_type == "SubSystem") {
    inst.type_name = "Subsystem";
  } else if (block_type != nullptr && !block_type->empty()) {
    inst.type_name = collapse_whitespace(*block_type);
  } else {
    throw IngestError("block '" + name + "' has neither SourceBlock nor BlockType");
  }

  const std::string* sid = node.attr("SID");
  if (sid != nullptr) {
    if (!sids.emplace(*sid, name).second) throw IngestError("duplicate SID '" + *sid + "'");
  }
  model.add_block(name, std::move(inst));
}

void ingest_line(const XmlNode& node, SystemModel& model,
                 const std::map<std::string, std::string>& sids,
                 std::vector<std::string>& remarks) {
  std::string src, dst;
  for (const auto& child : node.children) {
    if (child.tag == "P") {
      const std::string* pname = child.attr("Name");
      if (pname == nullptr) continue;
      if (*pname == "Src") src = collapse_whitespace(child.text);
      else if (*pname == "Dst") dst = collapse_whitespace(child.text);
    } else if (child.tag == "Branch") {
      remarks.push_back("ignored <Branch> in line");
    }
  }
  if (src.empty() || dst.empty()) {
    remarks.push_back("ignored line without Src/Dst");
    return;
  }
  auto [src_sid, src_port] = parse_line_token(src);
  auto [dst_sid, dst_port] = parse_line_token(dst);
  auto lookup = [&](const std::string& sid) -> const std::string& {
    auto it = sids.find(sid);
    if (it == sids.end()) throw IngestError("line references unknown SID '" + sid + "'");
    return it->second;
  };
  model.connections.push_back({Endpoint::single({lookup(src_sid), src_port}),
                               Endpoint::single({lookup(dst_sid), dst_port})});
}

SystemModel ingest_system(const XmlNode& system, std::vector<std::string>& remarks) {
  SystemModel model;
  std::map<std::string, std::string> sids;
  // Blocks first: lines may appear before their endpoints in the file.
  for (const auto& child : system.children) {
    if (child.tag == "Block") ingest_block(child, model, sids, remarks);
  }
  for (const auto& child : system.children) {
    if (child.tag == "Line") {
      ingest_line(child, model, sids, remarks);
    } else if (child.tag == "Block" || child.tag == "P") {
      // System-level <P> nodes are window/styling state.
    } else {
      remarks.push_back("ignored <" + child.tag + "> in system");
    }
  }
  return model;
}

}  // namespace

IngestResult parse_model_xml(const XmlNode& root) {
  IngestResult result;
  const XmlNode* system = &root;
  if (root.tag != "System") {
    system = root.child("System");
    if (system == nullptr) throw IngestError("no <System> element found");
  }
  result.model = ingest_system(*system, result.remarks);
  return result;
}

IngestResult ingest_xml(std::string_view xml_text) {
  return parse_model_xml(xml_parse(xml_text));
}

}  // namespace blockflow
