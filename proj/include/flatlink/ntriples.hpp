#pragma once

#include "flatlink/io.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace flatlink {

enum class ValueKind : std::uint8_t { uri, literal };

/// An RDF object term. URIs are stored without angle brackets, blank nodes
/// as their `_:label` text (URI kind), literals as the bare lexical form.
struct ObjectValue {
    ValueKind kind = ValueKind::uri;
    std::string lexical;

    static ObjectValue uri(std::string text) { return {ValueKind::uri, std::move(text)}; }
    static ObjectValue literal(std::string text) { return {ValueKind::literal, std::move(text)}; }

    bool is_literal() const noexcept { return kind == ValueKind::literal; }

    friend bool operator==(const ObjectValue&, const ObjectValue&) = default;
    friend auto operator<=>(const ObjectValue&, const ObjectValue&) = default;
};

struct Triple {
    std::string subject;
    std::string predicate;
    ObjectValue object;

    friend bool operator==(const Triple&, const Triple&) = default;
    friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// Blank line or comment.
struct Skip {};

struct ParseError {
    std::string reason;
};

using LineParse = std::variant<Triple, Skip, ParseError>;

/// Parses one physical N-Triples line (without terminator). Accepts
/// `<iri> <iri> (<iri> | _:bnode | "literal"(@lang | ^^<iri>)?) .` with
/// optional trailing whitespace or comment and a trailing `\r`. Escapes
/// (`\t`, `\"`, `\uXXXX`, ...) are decoded; language tags and datatypes are
/// dropped.
LineParse parse_ntriples_line(std::string_view line);

/// Renders a triple as one N-Triples line (no terminator). Inverse of
/// parse_ntriples_line for triples without language/datatype annotations.
std::string render_ntriples(const Triple& t);

struct LineIssue {
    std::uint64_t line = 0;
    std::string reason;
};

struct ParseReport {
    std::uint64_t lines_total = 0;
    std::uint64_t triples_ok = 0;
    std::uint64_t lines_skipped = 0;
    std::uint64_t blank_or_comment = 0;
    std::vector<LineIssue> first_errors;

    ParseReport& operator+=(const ParseReport& other);
};

struct StreamOptions {
    std::size_t max_reported_errors = 20;
};

using TripleConsumer = std::function<void(Triple&&)>;

/// Parses every line of `source` in order, delivering well-formed triples
/// to `on_triple`. Malformed lines are counted and skipped. Only I/O errors
/// (IoError) or exceptions thrown by the consumer abort the stream.
ParseReport stream_triples(LineReader& source, const TripleConsumer& on_triple,
                           const StreamOptions& options = {});

} // namespace flatlink
