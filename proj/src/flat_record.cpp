#include "flatlink/flat_record.hpp"

#include "flatlink/error.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace flatlink {

namespace {
constexpr std::string_view kSentinelSuffix = "-instance";
constexpr std::string_view kLiteralQuote = "\"\"";

bool is_label_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '-';
}
} // namespace

bool is_valid_kb_label(std::string_view label) {
    return !label.empty() && std::all_of(label.begin(), label.end(), is_label_char);
}

std::string sentinel_for(std::string_view label) {
    std::string s(label);
    s += kSentinelSuffix;
    return s;
}

std::string_view sentinel_label(std::string_view token) {
    if (token.size() <= kSentinelSuffix.size() || !token.ends_with(kSentinelSuffix)) return {};
    auto label = token.substr(0, token.size() - kSentinelSuffix.size());
    return is_valid_kb_label(label) ? label : std::string_view{};
}

bool is_sentinel_token(std::string_view token) { return !sentinel_label(token).empty(); }

void append_escaped(std::string& out, std::string_view raw) {
    if (is_sentinel_token(raw)) out += "\\s";
    for (char c : raw) {
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        default: out.push_back(c);
        }
    }
}

std::string escape_token(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    append_escaped(out, raw);
    return out;
}

std::optional<std::string> try_unescape_token(std::string_view token) {
    std::string out;
    out.reserve(token.size());
    for (std::size_t i = 0; i < token.size(); ++i) {
        char c = token[i];
        if (c != '\\') {
            out.push_back(c);
            continue;
        }
        if (i + 1 == token.size()) return std::nullopt;
        switch (token[++i]) {
        case '\\': out.push_back('\\'); break;
        case 't': out.push_back('\t'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 's':
            if (i != 1) return std::nullopt;
            break;
        default: return std::nullopt;
        }
    }
    return out;
}

std::string unescape_token(std::string_view token) {
    auto out = try_unescape_token(token);
    if (!out) throw FormatError("bad escape sequence in token '" + std::string(token) + "'");
    return std::move(*out);
}

const Property* EntityRecord::find(std::string_view key) const {
    for (const auto& p : properties) {
        if (p.key == key) return &p;
    }
    return nullptr;
}

std::size_t EntityRecord::value_count() const {
    std::size_t n = 0;
    for (const auto& p : properties) n += p.values.size();
    return n;
}

std::vector<std::string> record_violations(const EntityRecord& rec) {
    std::vector<std::string> out;
    if (rec.uri.empty()) out.emplace_back("empty uri");
    if (rec.properties.empty()) out.emplace_back("record has no properties");
    std::unordered_set<std::string_view> keys;
    for (const auto& p : rec.properties) {
        if (p.key.empty()) out.emplace_back("empty key");
        if (!keys.insert(p.key).second) out.push_back("key '" + p.key + "' appears twice");
        if (p.values.empty()) out.push_back("key '" + p.key + "' has no values");
        std::unordered_set<std::string> seen;
        for (const auto& v : p.values) {
            if (!v.is_literal() && (v.lexical.empty() || v.lexical.front() == '"')) {
                out.push_back("key '" + p.key + "' has an invalid URI value");
            }
            if (!seen.insert(value_token(v)).second) {
                out.push_back("duplicate value under key '" + p.key + "'");
            }
        }
    }
    return out;
}

void append_value_token(std::string& out, const ObjectValue& v) {
    if (v.is_literal()) {
        // Wrapped before escaping so a literal can never look like a sentinel.
        std::string wrapped;
        wrapped.reserve(v.lexical.size() + 4);
        wrapped += kLiteralQuote;
        wrapped += v.lexical;
        wrapped += kLiteralQuote;
        append_escaped(out, wrapped);
    } else {
        append_escaped(out, v.lexical);
    }
}

std::string value_token(const ObjectValue& v) {
    std::string out;
    append_value_token(out, v);
    return out;
}

ObjectValue parse_value_token(std::string_view token) {
    std::string text = unescape_token(token);
    if (text.starts_with('"')) {
        if (text.size() < 4 || !text.starts_with(kLiteralQuote) || !text.ends_with(kLiteralQuote)) {
            throw FormatError("unbalanced literal quotes in '" + std::string(token) + "'");
        }
        return ObjectValue::literal(text.substr(2, text.size() - 4));
    }
    if (text.empty()) throw FormatError("empty value token");
    return ObjectValue::uri(std::move(text));
}

void append_record(std::string& out, const EntityRecord& rec) {
    append_escaped(out, rec.uri);
    for (const auto& p : rec.properties) {
        for (const auto& v : p.values) {
            out.push_back('\t');
            append_escaped(out, p.key);
            out.push_back('\t');
            append_value_token(out, v);
        }
    }
}

std::string serialize_record(const EntityRecord& rec) {
    std::string out;
    append_record(out, rec);
    return out;
}

void split_tabs(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    for (;;) {
        auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            out.push_back(line.substr(start));
            return;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    split_tabs(line, out);
    return out;
}

EntityRecord parse_record_tokens(const std::vector<std::string_view>& tokens) {
    if (tokens.size() % 2 == 0) {
        throw FormatError("even token count (" + std::to_string(tokens.size()) + ")");
    }
    if (tokens[0].empty()) throw FormatError("empty uri");

    EntityRecord rec;
    rec.uri = unescape_token(tokens[0]);
    std::unordered_set<std::string_view> closed_keys;
    std::unordered_set<std::string_view> current_values;
    std::string_view current_key;
    for (std::size_t i = 1; i < tokens.size(); i += 2) {
        std::string_view key = tokens[i];
        std::string_view val = tokens[i + 1];
        if (key.empty()) throw FormatError("empty key at token " + std::to_string(i));
        if (rec.properties.empty() || key != current_key) {
            if (!rec.properties.empty()) closed_keys.insert(current_key);
            if (closed_keys.contains(key)) {
                throw FormatError("key '" + std::string(key) + "' repeats non-adjacently");
            }
            rec.properties.push_back({unescape_token(key), {}});
            current_key = key;
            current_values.clear();
        }
        if (!current_values.insert(val).second) {
            throw FormatError("duplicate value under key '" + std::string(key) + "'");
        }
        rec.properties.back().values.push_back(parse_value_token(val));
    }
    if (rec.properties.empty()) throw FormatError("record has no properties");
    return rec;
}

EntityRecord parse_record(std::string_view line) {
    return parse_record_tokens(split_tabs(line));
}

EntityRecord record_from_triples(std::string_view subject, const std::vector<Triple>& triples) {
    if (triples.empty()) {
        throw FormatError("entity '" + std::string(subject) + "' has no triples");
    }
    std::map<std::string, std::size_t> slot_of_key;
    std::vector<Property> props;
    std::vector<std::unordered_set<std::string>> seen;
    for (const auto& t : triples) {
        if (t.subject != subject) {
            throw FormatError("triple subject '" + t.subject + "' differs from '"
                              + std::string(subject) + "'");
        }
        auto [it, inserted] = slot_of_key.try_emplace(t.predicate, props.size());
        if (inserted) {
            props.push_back({t.predicate, {}});
            seen.emplace_back();
        }
        if (seen[it->second].insert(value_token(t.object)).second) {
            props[it->second].values.push_back(t.object);
        }
    }
    EntityRecord rec;
    rec.uri = std::string(subject);
    rec.properties.reserve(props.size());
    for (const auto& [key, slot] : slot_of_key) rec.properties.push_back(std::move(props[slot]));
    return rec;
}

std::vector<Triple> record_to_triples(const EntityRecord& rec) {
    std::vector<Triple> out;
    out.reserve(rec.value_count());
    for (const auto& p : rec.properties) {
        for (const auto& v : p.values) out.push_back({rec.uri, p.key, v});
    }
    return out;
}

std::string first_token_uri(std::string_view line) {
    return unescape_token(line.substr(0, line.find('\t')));
}

} // namespace flatlink
