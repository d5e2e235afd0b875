#pragma once

#include <string>
#include <string_view>

#include "blockflow/model.hpp"

namespace blockflow {

// On-disk IR document: a JSON object with "Blocks" (name -> {"Type": ...,
// params...}) and "Connections" (array of {"Src": "Block/Port", "Dst":
// "Block/Port"}). Subsystem blocks additionally carry "Summary", "Ports"
// and a nested "Blocks"/"Connections" pair.
//
// parse accepts the multi-port shorthand "Block/(LConn1,LConn2)" and treats
// a missing "Connections" key as present-but-empty. Duplicate keys are a
// ParseError. emit is byte-stable on canonical models:
// parse(emit(m)) == m and emit is deterministic.
SystemModel parse_model_text(std::string_view text);
std::string emit_model_text(const SystemModel& model);

// JSON body of a single block, e.g. {"Type": "Gain", "Gain": 2}; the form
// used on the right-hand side of edit statements.
std::string emit_block_json(const BlockInstance& inst);

}  // namespace blockflow
