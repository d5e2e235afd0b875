#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace blockflow {

struct XmlNode {
  std::string tag;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::string text;  // concatenated character data
  std::vector<XmlNode> children;

  const std::string* attr(std::string_view name) const;
  const XmlNode* child(std::string_view tag) const;
};

// Element/attribute/text subset with entity decoding (&amp; &lt; &gt; &quot;
// &apos; and numeric refs). Comments, processing instructions and DOCTYPE
// are skipped. Throws ParseError with line/column on malformed input.
XmlNode xml_parse(std::string_view text);

}  // namespace blockflow
