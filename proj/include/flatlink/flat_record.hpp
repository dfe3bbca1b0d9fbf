#pragma once

#include "flatlink/ntriples.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flatlink {

// ---------------------------------------------------------------------------
// Token escaping
//
// Every token in a flat line is escaped so it never holds a raw tab, line
// feed or carriage return and never equals a slot sentinel:
//
//   `\`  -> `\\`      TAB -> `\t`      LF -> `\n`      CR -> `\r`
//
// and a token that is byte-equal to a sentinel (`<label>-instance`) gets a
// leading `\s`. `\s` is only legal at the start of a token.
// ---------------------------------------------------------------------------

/// Characters allowed in a knowledge-base label: `[a-z0-9_.-]`, non-empty.
bool is_valid_kb_label(std::string_view label);

/// The slot marker for a label: `<label>-instance`.
std::string sentinel_for(std::string_view label);

/// True when `token` has the shape `<valid label>-instance`.
bool is_sentinel_token(std::string_view token);

/// Label part of a sentinel token; empty when `token` is not a sentinel.
std::string_view sentinel_label(std::string_view token);

std::string escape_token(std::string_view raw);
void append_escaped(std::string& out, std::string_view raw);

/// Throws FormatError on a dangling `\`, an unknown escape code or a `\s`
/// that is not at the start of the token.
std::string unescape_token(std::string_view token);
std::optional<std::string> try_unescape_token(std::string_view token);

// ---------------------------------------------------------------------------
// Entity records
// ---------------------------------------------------------------------------

struct Property {
    std::string key;
    std::vector<ObjectValue> values;

    friend bool operator==(const Property&, const Property&) = default;
};

/// One entity's complete information set: its URI and every (predicate,
/// object) pair it is the subject of. Properties keep their order; records
/// built from triples have keys in ascending byte order.
struct EntityRecord {
    std::string uri;
    std::vector<Property> properties;

    const Property* find(std::string_view key) const;
    std::size_t value_count() const;

    friend bool operator==(const EntityRecord&, const EntityRecord&) = default;
};

/// Structural problems with a record; empty when valid. Checks: non-empty
/// uri and keys, at least one property, non-empty value lists, unique keys,
/// no duplicate (key, value), URI-kind values non-empty and not starting
/// with `"`.
std::vector<std::string> record_violations(const EntityRecord& rec);

/// Wire form of one value token: `""lexical""` for literals, the URI text
/// otherwise, then escaped.
std::string value_token(const ObjectValue& v);
void append_value_token(std::string& out, const ObjectValue& v);

/// Inverse of value_token. Throws FormatError on bad escapes or unbalanced
/// literal quotes.
ObjectValue parse_value_token(std::string_view token);

/// `uri TAB key TAB value ...`, one pair per value, no terminator.
std::string serialize_record(const EntityRecord& rec);
void append_record(std::string& out, const EntityRecord& rec);

/// Single split on TAB plus one linear scan. Throws FormatError.
EntityRecord parse_record(std::string_view line);

/// Same as parse_record over tokens already split from a line.
EntityRecord parse_record_tokens(const std::vector<std::string_view>& tokens);

/// Groups one subject's triples into a record: duplicates dropped, keys
/// ascending, values in first-occurrence order. Throws FormatError when
/// `triples` is empty or a triple has another subject.
EntityRecord record_from_triples(std::string_view subject, const std::vector<Triple>& triples);

/// Flattens a record back into triples, in record order.
std::vector<Triple> record_to_triples(const EntityRecord& rec);

/// Splits on TAB. Empty input yields one empty token.
std::vector<std::string_view> split_tabs(std::string_view line);
void split_tabs(std::string_view line, std::vector<std::string_view>& out);

/// Unescaped text of the first token of a line (the record's URI).
std::string first_token_uri(std::string_view line);

} // namespace flatlink
