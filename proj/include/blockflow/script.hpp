#pragma once

#include <set>
#include <string>
#include <variant>
#include <vector>

#include "blockflow/catalog.hpp"
#include "blockflow/model.hpp"

namespace blockflow {

struct AddBlock {
  std::string source_path;  // library path
  std::string dest_path;    // "<target>/<block name>"
  std::vector<std::pair<std::string, ParamValue>> params;
};

struct AddLine {
  std::string model;
  std::string src;  // "Block/Port", transcript dialect
  std::string dst;
  bool autorouting = true;
};

struct SetParam {
  std::string path;
  std::string name;
  ParamValue value;
};

using Command = std::variant<AddBlock, AddLine, SetParam>;

struct CommandScript {
  std::string target;
  std::vector<Command> commands;
};

// One add_block per block in canonical order (library path from the
// catalog, parameters inline), then one add_line per connection with port
// strings in the LConnN/RConnN/digit dialect and autorouting on. Output is
// deterministic and byte-stable. Unresolvable types, aliases or subsystem
// blocks are EmitErrors.
CommandScript emit_script(const SystemModel& model, const Catalog& catalog,
                          std::string_view target_name);

// UTF-8, LF line endings, one command per line, '%' comment header.
std::string render_script(const CommandScript& script);

// Well-formedness pass: every add_line endpoint must name a block added
// earlier in the script or pre-existing in the target model. Returns the
// violations (empty = clean).
std::vector<std::string> lint_script(const CommandScript& script,
                                     const std::set<std::string>& preexisting = {});

}  // namespace blockflow
