#pragma once

// Minimal XML reader/writer for the policy file schema. Covers exactly what
// the serializer emits: elements, attributes, character data, comments, an
// optional XML declaration, the five named entities and numeric character
// references. No CDATA, processing instructions or DTDs.

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "fairgate/errors.hpp"

namespace fairgate::xml {

struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::string text;  // concatenated character data of this element

  const std::string* attr(std::string_view key) const {
    for (const auto& [k, v] : attributes) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  const Element* child(std::string_view name_) const {
    for (const auto& c : children) {
      if (c.name == name_) return &c;
    }
    return nullptr;
  }

  std::vector<const Element*> children_named(std::string_view name_) const {
    std::vector<const Element*> out;
    for (const auto& c : children) {
      if (c.name == name_) out.push_back(&c);
    }
    return out;
  }
};

inline void append_escaped(std::string& out, std::string_view s,
                           bool in_attribute) {
  for (unsigned char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (in_attribute) {
          out += "&quot;";
        } else {
          out += static_cast<char>(c);
        }
        break;
      default:
        if (c < 0x20) {
          char buf[16];
          std::snprintf(buf, sizeof(buf), "&#x%X;", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
}

inline void write_element(std::string& out, const Element& e, int depth) {
  out.append(static_cast<size_t>(depth) * 2, ' ');
  out += '<';
  out += e.name;
  for (const auto& [k, v] : e.attributes) {
    out += ' ';
    out += k;
    out += "=\"";
    append_escaped(out, v, true);
    out += '"';
  }
  if (e.children.empty() && e.text.empty()) {
    out += "/>\n";
    return;
  }
  out += '>';
  if (e.children.empty()) {
    append_escaped(out, e.text, false);
    out += "</";
    out += e.name;
    out += ">\n";
    return;
  }
  out += '\n';
  for (const auto& c : e.children) write_element(out, c, depth + 1);
  out.append(static_cast<size_t>(depth) * 2, ' ');
  out += "</";
  out += e.name;
  out += ">\n";
}

inline std::string write_document(const Element& root) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  write_element(out, root, 0);
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view input) : in_(input) {}

  Element parse_document() {
    skip_prolog();
    Element root = parse_element();
    skip_whitespace_and_comments();
    if (pos_ != in_.size()) fail("trailing content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& why) {
    throw Error(Errc::MalformedDocument, "xml: " + why, "", line_, column());
  }

  std::uint64_t column() const { return pos_ - line_start_ + 1; }

  char peek() const { return pos_ < in_.size() ? in_[pos_] : '\0'; }

  char advance() {
    if (pos_ >= in_.size()) fail("unexpected end of input");
    char c = in_[pos_++];
    if (c == '\n') {
      ++line_;
      line_start_ = pos_;
    }
    return c;
  }

  bool eat(std::string_view lit) {
    if (in_.substr(pos_).rfind(lit, 0) == 0) {
      for (size_t i = 0; i < lit.size(); ++i) advance();
      return true;
    }
    return false;
  }

  void skip_ws() {
    while (pos_ < in_.size()) {
      char c = in_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else {
        break;
      }
    }
  }

  void skip_comment() {
    // positioned after "<!--"
    while (true) {
      if (pos_ + 2 >= in_.size()) fail("unterminated comment");
      if (in_[pos_] == '-' && in_[pos_ + 1] == '-' && in_[pos_ + 2] == '>') {
        advance();
        advance();
        advance();
        return;
      }
      advance();
    }
  }

  void skip_whitespace_and_comments() {
    while (true) {
      skip_ws();
      if (eat("<!--")) {
        skip_comment();
      } else {
        return;
      }
    }
  }

  void skip_prolog() {
    skip_ws();
    if (eat("<?xml")) {
      while (!eat("?>")) advance();
    }
    skip_whitespace_and_comments();
  }

  static bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '-' || c == '.' || c == ':';
  }

  std::string parse_name() {
    std::string name;
    while (pos_ < in_.size() && is_name_char(in_[pos_])) {
      name += advance();
    }
    if (name.empty()) fail("expected a name");
    return name;
  }

  void decode_reference(std::string& out) {
    // positioned after '&'
    std::string ref;
    while (peek() != ';') {
      if (pos_ >= in_.size()) fail("unterminated entity reference");
      ref += advance();
      if (ref.size() > 10) fail("entity reference too long");
    }
    advance();  // ';'
    if (ref == "amp") {
      out += '&';
    } else if (ref == "lt") {
      out += '<';
    } else if (ref == "gt") {
      out += '>';
    } else if (ref == "quot") {
      out += '"';
    } else if (ref == "apos") {
      out += '\'';
    } else if (!ref.empty() && ref[0] == '#') {
      unsigned long code = 0;
      try {
        code = (ref.size() > 1 && (ref[1] == 'x' || ref[1] == 'X'))
                   ? std::stoul(ref.substr(2), nullptr, 16)
                   : std::stoul(ref.substr(1), nullptr, 10);
      } catch (const std::exception&) {
        fail("bad character reference &" + ref + ";");
      }
      if (code > 0x10FFFF) fail("character reference out of range");
      append_utf8(out, static_cast<std::uint32_t>(code));
    } else {
      fail("unknown entity &" + ref + ";");
    }
  }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  std::string parse_attr_value() {
    char quote = advance();
    if (quote != '"' && quote != '\'') fail("expected quoted attribute value");
    std::string value;
    while (true) {
      char c = peek();
      if (c == '\0') fail("unterminated attribute value");
      if (c == quote) {
        advance();
        return value;
      }
      if (c == '&') {
        advance();
        decode_reference(value);
      } else if (c == '<') {
        fail("'<' in attribute value");
      } else {
        value += advance();
      }
    }
  }

  Element parse_element() {
    if (!eat("<")) fail("expected element");
    Element e;
    e.name = parse_name();
    while (true) {
      skip_ws();
      char c = peek();
      if (c == '/') {
        advance();
        if (!eat(">")) fail("malformed empty-element tag");
        return e;
      }
      if (c == '>') {
        advance();
        break;
      }
      std::string key = parse_name();
      skip_ws();
      if (!eat("=")) fail("expected '=' after attribute name");
      skip_ws();
      e.attributes.emplace_back(std::move(key), parse_attr_value());
    }
    // content
    while (true) {
      char c = peek();
      if (c == '\0') fail("unterminated element <" + e.name + ">");
      if (c == '<') {
        if (eat("<!--")) {
          skip_comment();
          continue;
        }
        if (in_.substr(pos_).rfind("</", 0) == 0) {
          advance();
          advance();
          std::string close = parse_name();
          if (close != e.name) {
            fail("mismatched close tag </" + close + "> for <" + e.name + ">");
          }
          skip_ws();
          if (!eat(">")) fail("malformed close tag");
          // Indentation around child elements is formatting, not data.
          if (!e.children.empty() &&
              e.text.find_first_not_of(" \t\n\r") == std::string::npos) {
            e.text.clear();
          }
          return e;
        }
        e.children.push_back(parse_element());
      } else if (c == '&') {
        advance();
        decode_reference(e.text);
      } else {
        e.text += advance();
      }
    }
  }

  std::string_view in_;
  size_t pos_ = 0;
  std::uint64_t line_ = 1;
  size_t line_start_ = 0;
};

inline Element parse_document(std::string_view input) {
  return Parser(input).parse_document();
}

}  // namespace fairgate::xml
