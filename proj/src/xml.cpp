#include "blockflow/xml.hpp"

#include <cctype>

#include "blockflow/errors.hpp"

namespace blockflow {

const std::string* XmlNode::attr(std::string_view name) const {
  for (const auto& [k, v] : attrs)
    if (k == name) return &v;
  return nullptr;
}

const XmlNode* XmlNode::child(std::string_view tag_name) const {
  for (const auto& c : children)
    if (c.tag == tag_name) return &c;
  return nullptr;
}

namespace {

class XmlScanner {
 public:
  explicit XmlScanner(std::string_view text) : text_(text) {}

  XmlNode parse_document() {
    skip_misc();
    XmlNode root = parse_element();
    skip_misc();
    if (pos_ < text_.size()) fail("trailing content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("XML: " + msg, line_, col_);
  }

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return eof() ? '\0' : text_[pos_]; }
  bool starts_with(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

  char advance() {
    if (eof()) fail("unexpected end of input");
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void advance_n(size_t n) {
    for (size_t i = 0; i < n; ++i) advance();
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }

  void skip_until(std::string_view end) {
    while (!eof() && !starts_with(end)) advance();
    if (eof()) fail("unterminated construct (expected '" + std::string(end) + "')");
    advance_n(end.size());
  }

  // Whitespace, comments, <?...?>, <!DOCTYPE...>
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<!--")) {
        skip_until("-->");
      } else if (starts_with("<?")) {
        skip_until("?>");
      } else if (starts_with("<!")) {
        skip_until(">");
      } else {
        return;
      }
    }
  }

  std::string parse_name() {
    std::string name;
    while (!eof()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' ||
          c == '.') {
        name.push_back(c);
        advance();
      } else {
        break;
      }
    }
    if (name.empty()) fail("expected a name");
    return name;
  }

  // Pure; errors are reported at the scanner's current position.
  std::string decode_entities(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    size_t i = 0;
    while (i < raw.size()) {
      if (raw[i] != '&') {
        out.push_back(raw[i++]);
        continue;
      }
      size_t semi = raw.find(';', i);
      if (semi == std::string_view::npos) fail("unterminated entity reference");
      std::string_view ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "amp") out.push_back('&');
      else if (ent == "lt") out.push_back('<');
      else if (ent == "gt") out.push_back('>');
      else if (ent == "quot") out.push_back('"');
      else if (ent == "apos") out.push_back('\'');
      else if (!ent.empty() && ent[0] == '#') {
        long code = 0;
        size_t j = 1;
        const bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
        if (hex) j = 2;
        if (j >= ent.size()) fail("bad numeric entity '&" + std::string(ent) + ";'");
        for (; j < ent.size(); ++j) {
          char c = ent[j];
          int digit;
          if (c >= '0' && c <= '9') digit = c - '0';
          else if (hex && c >= 'a' && c <= 'f') digit = c - 'a' + 10;
          else if (hex && c >= 'A' && c <= 'F') digit = c - 'A' + 10;
          else fail("bad numeric entity '&" + std::string(ent) + ";'");
          code = code * (hex ? 16 : 10) + digit;
          if (code > 0x10FFFF) fail("numeric entity out of range");
        }
        // UTF-8 encode.
        if (code < 0x80) {
          out.push_back(static_cast<char>(code));
        } else if (code < 0x800) {
          out.push_back(static_cast<char>(0xC0 | (code >> 6)));
          out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        } else if (code < 0x10000) {
          out.push_back(static_cast<char>(0xE0 | (code >> 12)));
          out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
          out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        } else {
          out.push_back(static_cast<char>(0xF0 | (code >> 18)));
          out.push_back(static_cast<char>(0x80 | ((code >> 12) & 0x3F)));
          out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
          out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        }
      } else {
        fail("unknown entity '&" + std::string(ent) + ";'");
      }
      i = semi + 1;
    }
    return out;
  }

  std::string parse_attr_value() {
    char quote = peek();
    if (quote != '"' && quote != '\'') fail("attribute value must be quoted");
    advance();
    size_t start = pos_;
    while (!eof() && peek() != quote) advance();
    if (eof()) fail("unterminated attribute value");
    std::string_view raw = text_.substr(start, pos_ - start);
    advance();  // closing quote
    return decode_entities(raw);
  }

  XmlNode parse_element() {
    if (peek() != '<') fail("expected '<'");
    advance();
    XmlNode node;
    node.tag = parse_name();
    for (;;) {
      skip_ws();
      if (starts_with("/>")) {
        advance_n(2);
        return node;
      }
      if (peek() == '>') {
        advance();
        break;
      }
      std::string name = parse_name();
      skip_ws();
      if (peek() != '=') fail("expected '=' after attribute name");
      advance();
      skip_ws();
      node.attrs.emplace_back(std::move(name), parse_attr_value());
    }
    // Content.
    for (;;) {
      size_t start = pos_;
      while (!eof() && peek() != '<') advance();
      if (pos_ > start) node.text += decode_entities(text_.substr(start, pos_ - start));
      if (eof()) fail("unterminated element <" + node.tag + ">");
      if (starts_with("<!--")) {
        skip_until("-->");
        continue;
      }
      if (starts_with("</")) {
        advance_n(2);
        std::string closing = parse_name();
        if (closing != node.tag)
          fail("mismatched closing tag </" + closing + "> for <" + node.tag + ">");
        skip_ws();
        if (peek() != '>') fail("malformed closing tag");
        advance();
        return node;
      }
      node.children.push_back(parse_element());
    }
  }

  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

XmlNode xml_parse(std::string_view text) { return XmlScanner(text).parse_document(); }

}  // namespace blockflow
