#include "flatlink/ntriples.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <optional>

namespace flatlink {

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t'; }

bool is_hex(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

unsigned hex_value(char c) {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    return static_cast<unsigned>(c - 'A' + 10);
}

bool forbidden_in_iri(unsigned char c) {
    if (c <= 0x20) return true;
    switch (c) {
    case '<': case '>': case '"': case '{': case '}': case '|': case '^': case '`': case '\\':
        return true;
    default:
        return false;
    }
}

bool append_utf8(std::string& out, std::uint32_t cp) {
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return true;
}

/// Cursor over one line; every read_* returns an error reason or nothing.
class LineCursor {
public:
    explicit LineCursor(std::string_view text) : s_(text) {}

    bool at_end() const { return pos_ >= s_.size(); }
    char peek() const { return at_end() ? '\0' : s_[pos_]; }
    bool starts_with(std::string_view p) const { return s_.substr(pos_).starts_with(p); }

    void skip_blanks() {
        while (!at_end() && is_blank(s_[pos_])) ++pos_;
    }

    std::optional<std::string> read_iri(std::string& out) {
        ++pos_; // '<'
        out.clear();
        for (;;) {
            if (at_end()) return "unterminated IRI";
            char c = s_[pos_];
            if (c == '>') {
                ++pos_;
                break;
            }
            if (c == '\t') return "raw tab inside IRI";
            if (c == '\\') {
                std::uint32_t cp = 0;
                if (auto err = read_uchar(cp)) return err;
                if (cp < 0x80 && forbidden_in_iri(static_cast<unsigned char>(cp))) {
                    return "escaped character not allowed in IRI";
                }
                if (!append_utf8(out, cp)) return "invalid code point in IRI";
                continue;
            }
            if (forbidden_in_iri(static_cast<unsigned char>(c))) {
                return "character not allowed in IRI";
            }
            out.push_back(c);
            ++pos_;
        }
        if (out.empty()) return "empty IRI";
        return std::nullopt;
    }

    std::optional<std::string> read_bnode(std::string& out) {
        std::size_t start = pos_;
        pos_ += 2; // "_:"
        while (!at_end()) {
            char c = s_[pos_];
            if (is_blank(c) || c == '<' || c == '"' || c == '#') break;
            if (static_cast<unsigned char>(c) < 0x20) return "control character in blank node";
            ++pos_;
        }
        // A label never ends with '.', so a dot glued to it is the terminator.
        while (pos_ > start + 2 && s_[pos_ - 1] == '.') --pos_;
        if (pos_ == start + 2) return "empty blank node label";
        out.assign(s_.substr(start, pos_ - start));
        return std::nullopt;
    }

    std::optional<std::string> read_literal(std::string& out) {
        ++pos_; // opening quote
        out.clear();
        for (;;) {
            if (at_end()) return "unterminated literal";
            char c = s_[pos_];
            if (c == '"') {
                ++pos_;
                break;
            }
            if (c == '\t') return "raw tab inside literal";
            if (c == '\r' || c == '\n') return "raw line break inside literal";
            if (c != '\\') {
                out.push_back(c);
                ++pos_;
                continue;
            }
            if (pos_ + 1 >= s_.size()) return "dangling escape in literal";
            char e = s_[pos_ + 1];
            switch (e) {
            case 't': out.push_back('\t'); pos_ += 2; break;
            case 'b': out.push_back('\b'); pos_ += 2; break;
            case 'n': out.push_back('\n'); pos_ += 2; break;
            case 'r': out.push_back('\r'); pos_ += 2; break;
            case 'f': out.push_back('\f'); pos_ += 2; break;
            case '"': out.push_back('"'); pos_ += 2; break;
            case '\'': out.push_back('\''); pos_ += 2; break;
            case '\\': out.push_back('\\'); pos_ += 2; break;
            case 'u':
            case 'U': {
                std::uint32_t cp = 0;
                if (auto err = read_uchar(cp)) return err;
                if (!append_utf8(out, cp)) return "invalid code point in literal";
                break;
            }
            default:
                return "unknown escape in literal";
            }
        }
        if (peek() == '@') {
            ++pos_;
            std::size_t start = pos_;
            while (!at_end() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '-')) {
                ++pos_;
            }
            if (pos_ == start) return "empty language tag";
        } else if (starts_with("^^")) {
            pos_ += 2;
            if (peek() != '<') return "datatype must be an IRI";
            std::string ignored;
            if (auto err = read_iri(ignored)) return err;
        }
        return std::nullopt;
    }

    std::optional<std::string> finish() {
        skip_blanks();
        if (peek() != '.') return "missing terminal ' .'";
        ++pos_;
        skip_blanks();
        if (!at_end() && peek() != '#') return "unexpected text after ' .'";
        return std::nullopt;
    }

private:
    std::optional<std::string> read_uchar(std::uint32_t& cp) {
        // at '\\'
        if (pos_ + 1 >= s_.size()) return "dangling escape";
        char kind = s_[pos_ + 1];
        std::size_t digits = kind == 'u' ? 4 : kind == 'U' ? 8 : 0;
        if (digits == 0) return "only \\u and \\U escapes are allowed in IRIs";
        if (pos_ + 2 + digits > s_.size()) return "truncated unicode escape";
        cp = 0;
        for (std::size_t i = 0; i < digits; ++i) {
            char h = s_[pos_ + 2 + i];
            if (!is_hex(h)) return "bad hex digit in unicode escape";
            cp = (cp << 4) | hex_value(h);
        }
        pos_ += 2 + digits;
        return std::nullopt;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

} // namespace

LineParse parse_ntriples_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    LineCursor cur(line);
    cur.skip_blanks();
    if (cur.at_end() || cur.peek() == '#') return Skip{};

    Triple t;
    if (cur.peek() == '<') {
        if (auto err = cur.read_iri(t.subject)) return ParseError{"subject: " + *err};
    } else if (cur.starts_with("_:")) {
        if (auto err = cur.read_bnode(t.subject)) return ParseError{"subject: " + *err};
    } else {
        return ParseError{"subject must be an IRI or blank node"};
    }

    cur.skip_blanks();
    if (cur.peek() != '<') return ParseError{"predicate must be an IRI"};
    if (auto err = cur.read_iri(t.predicate)) return ParseError{"predicate: " + *err};

    cur.skip_blanks();
    if (cur.peek() == '<') {
        t.object.kind = ValueKind::uri;
        if (auto err = cur.read_iri(t.object.lexical)) return ParseError{"object: " + *err};
    } else if (cur.starts_with("_:")) {
        t.object.kind = ValueKind::uri;
        if (auto err = cur.read_bnode(t.object.lexical)) return ParseError{"object: " + *err};
    } else if (cur.peek() == '"') {
        t.object.kind = ValueKind::literal;
        if (auto err = cur.read_literal(t.object.lexical)) return ParseError{"object: " + *err};
    } else {
        return ParseError{"missing object"};
    }

    if (auto err = cur.finish()) return ParseError{*err};
    return t;
}

namespace {

void append_hex_escape(std::string& out, unsigned char c) {
    std::array<char, 8> buf{};
    std::snprintf(buf.data(), buf.size(), "\\u%04X", c);
    out += buf.data();
}

void render_term(std::string& out, std::string_view uri) {
    if (uri.starts_with("_:")) {
        out += uri;
        return;
    }
    out.push_back('<');
    for (char c : uri) {
        auto u = static_cast<unsigned char>(c);
        if (forbidden_in_iri(u)) {
            append_hex_escape(out, u);
        } else {
            out.push_back(c);
        }
    }
    out.push_back('>');
}

} // namespace

std::string render_ntriples(const Triple& t) {
    std::string out;
    out.reserve(t.subject.size() + t.predicate.size() + t.object.lexical.size() + 12);
    render_term(out, t.subject);
    out.push_back(' ');
    render_term(out, t.predicate);
    out.push_back(' ');
    if (t.object.is_literal()) {
        out.push_back('"');
        for (char c : t.object.lexical) {
            switch (c) {
            case '\\': out += "\\\\"; break;
            case '"': out += "\\\""; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    append_hex_escape(out, static_cast<unsigned char>(c));
                } else {
                    out.push_back(c);
                }
            }
        }
        out.push_back('"');
    } else {
        render_term(out, t.object.lexical);
    }
    out += " .";
    return out;
}

ParseReport& ParseReport::operator+=(const ParseReport& other) {
    lines_total += other.lines_total;
    triples_ok += other.triples_ok;
    lines_skipped += other.lines_skipped;
    blank_or_comment += other.blank_or_comment;
    first_errors.insert(first_errors.end(), other.first_errors.begin(), other.first_errors.end());
    return *this;
}

ParseReport stream_triples(LineReader& source, const TripleConsumer& on_triple,
                           const StreamOptions& options) {
    ParseReport report;
    std::string line;
    while (source.next(line)) {
        ++report.lines_total;
        auto parsed = parse_ntriples_line(line);
        if (auto* t = std::get_if<Triple>(&parsed)) {
            ++report.triples_ok;
            on_triple(std::move(*t));
        } else if (auto* e = std::get_if<ParseError>(&parsed)) {
            ++report.lines_skipped;
            if (report.first_errors.size() < options.max_reported_errors) {
                report.first_errors.push_back({source.line_number(), std::move(e->reason)});
            }
        } else {
            ++report.blank_or_comment;
        }
    }
    return report;
}

} // namespace flatlink
