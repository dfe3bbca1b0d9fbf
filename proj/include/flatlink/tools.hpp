#pragma once

#include "flatlink/flat_record.hpp"
#include "flatlink/ntriples.hpp"
#include "flatlink/report.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace flatlink {

inline constexpr std::string_view kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

/// What one line of a file holds.
enum class FileMode { entity, link2, link3 };

FileMode parse_file_mode(std::string_view name);
std::string_view to_string(FileMode mode);
std::size_t record_slots(FileMode mode);

/// Records of one line in slot order, with the slot labels (`entity` for
/// entity files). Throws FormatError when the line does not fit `mode`.
struct ParsedLine {
    std::string id;
    std::vector<std::string> labels;
    std::vector<EntityRecord> records;
};
ParsedLine parse_line(std::string_view line, FileMode mode);

// --- sampling --------------------------------------------------------------

struct SampleSpec {
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
};

/// Uniform integer in [0, bound) from a std::mt19937_64 draw: values below
/// (2^64 - bound) mod bound are rejected, the rest reduced mod bound.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound);

/// Algorithm R over the lines of `in`: the first n lines fill the reservoir;
/// line i (0-based, i >= n) replaces slot j = bounded_draw(rng, i + 1) when
/// j < n. The generator is std::mt19937_64 seeded with `seed`. Chosen lines
/// are written in input order, byte-identical. Returns lines written.
std::uint64_t sample_lines(const std::filesystem::path& in, const SampleSpec& spec,
                           const std::filesystem::path& out);

// --- type filter -------------------------------------------------------------

enum class Side { first, second, third, any, all };

Side parse_side(std::string_view name);
std::string_view to_string(Side side);

struct TypeFilterSpec {
    std::string type_uri;
    Side side = Side::any;
    std::string type_predicate = std::string(kRdfType);
};

bool record_has_type(const EntityRecord& rec, std::string_view type_predicate,
                     std::string_view type_uri);

struct FilterReport {
    std::uint64_t lines = 0;
    std::uint64_t kept = 0;
    std::uint64_t unparseable = 0;
    std::vector<LineIssue> first_errors;

    KvReport to_kv() const;
};

/// Copies every line whose designated record(s) carry `type_uri` among the
/// values of `type_predicate`. Unparseable lines are counted and skipped.
FilterReport filter_by_type(const std::filesystem::path& in, FileMode mode,
                            const TypeFilterSpec& spec, const std::filesystem::path& out);

// --- stats -------------------------------------------------------------------

struct StatsOptions {
    FileMode mode = FileMode::entity;
    std::size_t top_k = 10;
    std::string type_predicate = std::string(kRdfType);
};

struct SlotStats {
    std::string label;
    std::uint64_t records = 0;
    std::uint64_t distinct_entities = 0;
};

struct StatsReport {
    std::uint64_t lines = 0;
    std::uint64_t bytes = 0;
    std::uint64_t parsed = 0;
    std::uint64_t unparseable = 0;
    std::vector<SlotStats> slots;
    /// Most frequent type values, count descending then value ascending.
    std::vector<std::pair<std::string, std::uint64_t>> top_types;

    KvReport to_kv() const;
};

StatsReport compute_stats(const std::filesystem::path& in, const StatsOptions& options);

// --- validation --------------------------------------------------------------

struct Violation {
    std::uint64_t line = 0;
    std::string reason;
};

struct ValidationReport {
    std::uint64_t lines = 0;
    std::uint64_t ok_lines = 0;
    std::uint64_t violation_count = 0;
    std::vector<Violation> violations; // first `max_violations`

    bool ok() const noexcept { return violation_count == 0; }
    KvReport to_kv() const;
};

/// Stateless checks of one line: control bytes, structure, sentinel
/// placement, token counts, escapes, literal quoting, record invariants.
std::vector<std::string> check_line(std::string_view line, FileMode mode);

/// check_line on every line plus uniqueness of link ids (or of entity URIs
/// for entity files).
ValidationReport validate_file(const std::filesystem::path& in, FileMode mode,
                               std::size_t max_violations = 1000);

} // namespace flatlink
