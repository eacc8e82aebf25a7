#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "epikin/errors.hpp"

namespace epikin::xml {

/// Plain element tree; text content is concatenated per element. Covers the
/// XML subset annotation files actually use (no namespaces, CDATA, or DTDs).
struct Node {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<Node> children;
    std::string text;

    const std::string* attribute(std::string_view key) const {
        for (const auto& [k, v] : attributes)
            if (k == key) return &v;
        return nullptr;
    }

    const Node* child(std::string_view element_name) const {
        for (const auto& c : children)
            if (c.name == element_name) return &c;
        return nullptr;
    }

    std::vector<const Node*> children_named(std::string_view element_name) const {
        std::vector<const Node*> out;
        for (const auto& c : children)
            if (c.name == element_name) out.push_back(&c);
        return out;
    }
};

inline std::string escape(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Node parse_document() {
        skip_prolog();
        Node root = parse_element();
        skip_ws_and_comments();
        if (pos_ != text_.size()) fail("content after the root element");
        return root;
    }

private:
    std::string_view text_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("XML error at byte " + std::to_string(pos_) + ": " + what);
    }

    bool starts_with(std::string_view s) const {
        return text_.substr(pos_, s.size()) == s;
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                       text_[pos_] == '\n' || text_[pos_] == '\r'))
            ++pos_;
    }

    void skip_ws_and_comments() {
        for (;;) {
            skip_ws();
            if (starts_with("<!--")) {
                const size_t end = text_.find("-->", pos_ + 4);
                if (end == std::string_view::npos) fail("unterminated comment");
                pos_ = end + 3;
            } else {
                break;
            }
        }
    }

    void skip_prolog() {
        skip_ws();
        if (starts_with("<?xml")) {
            const size_t end = text_.find("?>", pos_);
            if (end == std::string_view::npos) fail("unterminated XML declaration");
            pos_ = end + 2;
        }
        for (;;) {
            skip_ws_and_comments();
            if (starts_with("<!DOCTYPE")) {
                const size_t end = text_.find('>', pos_);
                if (end == std::string_view::npos) fail("unterminated DOCTYPE");
                pos_ = end + 1;
            } else {
                break;
            }
        }
    }

    static bool is_name_char(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '_' || c == '-' || c == '.' || c == ':';
    }

    std::string read_name() {
        const size_t start = pos_;
        while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
        if (pos_ == start) fail("expected a name");
        return std::string(text_.substr(start, pos_ - start));
    }

    std::string decode_entities(std::string_view raw) {
        std::string out;
        out.reserve(raw.size());
        for (size_t i = 0; i < raw.size();) {
            if (raw[i] != '&') {
                out += raw[i++];
                continue;
            }
            const size_t semi = raw.find(';', i);
            if (semi == std::string_view::npos) fail("unterminated entity");
            const std::string_view ent = raw.substr(i + 1, semi - i - 1);
            if (ent == "amp")
                out += '&';
            else if (ent == "lt")
                out += '<';
            else if (ent == "gt")
                out += '>';
            else if (ent == "quot")
                out += '"';
            else if (ent == "apos")
                out += '\'';
            else if (!ent.empty() && ent[0] == '#') {
                long code = 0;
                try {
                    code = ent[1] == 'x' || ent[1] == 'X'
                               ? std::stol(std::string(ent.substr(2)), nullptr, 16)
                               : std::stol(std::string(ent.substr(1)), nullptr, 10);
                } catch (...) {
                    fail("bad numeric entity");
                }
                // UTF-8 encode.
                if (code < 0x80) {
                    out += static_cast<char>(code);
                } else if (code < 0x800) {
                    out += static_cast<char>(0xC0 | (code >> 6));
                    out += static_cast<char>(0x80 | (code & 0x3F));
                } else if (code < 0x10000) {
                    out += static_cast<char>(0xE0 | (code >> 12));
                    out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                    out += static_cast<char>(0x80 | (code & 0x3F));
                } else {
                    out += static_cast<char>(0xF0 | (code >> 18));
                    out += static_cast<char>(0x80 | ((code >> 12) & 0x3F));
                    out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                    out += static_cast<char>(0x80 | (code & 0x3F));
                }
            } else {
                fail("unknown entity &" + std::string(ent) + ";");
            }
            i = semi + 1;
        }
        return out;
    }

    Node parse_element() {
        skip_ws_and_comments();
        if (peek() != '<') fail("expected '<'");
        ++pos_;
        Node node;
        node.name = read_name();
        for (;;) {
            skip_ws();
            const char c = peek();
            if (c == '/') {
                ++pos_;
                if (peek() != '>') fail("expected '>' after '/'");
                ++pos_;
                return node; // self-closing
            }
            if (c == '>') {
                ++pos_;
                break;
            }
            // Attribute.
            const std::string key = read_name();
            skip_ws();
            if (peek() != '=') fail("expected '=' after attribute name");
            ++pos_;
            skip_ws();
            const char quote = peek();
            if (quote != '"' && quote != '\'') fail("expected quoted attribute value");
            ++pos_;
            const size_t end = text_.find(quote, pos_);
            if (end == std::string_view::npos) fail("unterminated attribute value");
            node.attributes.emplace_back(key, decode_entities(text_.substr(pos_, end - pos_)));
            pos_ = end + 1;
        }
        // Content.
        for (;;) {
            if (pos_ >= text_.size()) fail("unexpected end inside <" + node.name + ">");
            if (starts_with("<!--")) {
                const size_t end = text_.find("-->", pos_ + 4);
                if (end == std::string_view::npos) fail("unterminated comment");
                pos_ = end + 3;
                continue;
            }
            if (starts_with("</")) {
                pos_ += 2;
                const std::string closing = read_name();
                if (closing != node.name)
                    fail("mismatched closing tag </" + closing + "> for <" + node.name + ">");
                skip_ws();
                if (peek() != '>') fail("expected '>'");
                ++pos_;
                return node;
            }
            if (peek() == '<') {
                node.children.push_back(parse_element());
                continue;
            }
            const size_t next = text_.find('<', pos_);
            if (next == std::string_view::npos) fail("unexpected end of text content");
            node.text += decode_entities(text_.substr(pos_, next - pos_));
            pos_ = next;
        }
    }
};

} // namespace detail

inline Node parse(std::string_view text) {
    return detail::Parser(text).parse_document();
}

} // namespace epikin::xml
