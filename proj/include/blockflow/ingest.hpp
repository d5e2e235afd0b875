#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "blockflow/model.hpp"
#include "blockflow/xml.hpp"

namespace blockflow {

struct IngestResult {
  SystemModel model;
  // Non-fatal notes: ignored constructs, renamed blocks.
  std::vector<std::string> remarks;
};

// Converts the System/Block/Line/P XML subset into the compact IR. Blocks
// are keyed by their Name attribute (whitespace normalized); the type is
// the last path segment of SourceBlock, or BlockType when absent. Line
// endpoints "SID#out:N"/"SID#in:N" become signal ports and
// "SID#lconn:N"/"SID#rconn:N" conserving ports. Position and styling
// parameters are dropped; nested <System> elements become subsystems.
// Unknown SIDs and duplicate names are IngestErrors; anything outside the
// subset is skipped with a remark.
IngestResult parse_model_xml(const XmlNode& root);
IngestResult ingest_xml(std::string_view xml_text);

}  // namespace blockflow
