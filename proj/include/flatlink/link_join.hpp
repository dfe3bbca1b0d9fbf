#pragma once

#include "flatlink/exec.hpp"
#include "flatlink/ntriples.hpp"
#include "flatlink/report.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace flatlink {

inline constexpr std::string_view kOwlSameAs = "http://www.w3.org/2002/07/owl#sameAs";

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

/// A sameAs link in file order: `left` belongs to the first knowledge base
/// of a join, `right` to the second. URIs compare byte-exact.
struct GroundTruthPair {
    std::string left;
    std::string right;

    friend bool operator==(const GroundTruthPair&, const GroundTruthPair&) = default;
    friend auto operator<=>(const GroundTruthPair&, const GroundTruthPair&) = default;
};

enum class GroundTruthFormat { tsv_pairs, ntriples_sameas };

/// "tsv-pairs" or "ntriples-sameas"; throws ConfigError otherwise.
GroundTruthFormat parse_ground_truth_format(std::string_view name);
std::string_view to_string(GroundTruthFormat format);

struct GroundTruthOptions {
    GroundTruthFormat format = GroundTruthFormat::tsv_pairs;
    std::string sameas_uri = std::string(kOwlSameAs);
    std::size_t max_reported_errors = 20;
};

struct GroundTruthReport {
    std::uint64_t lines_total = 0;
    std::uint64_t blank_or_comment = 0;
    std::uint64_t pairs_read = 0;
    std::uint64_t malformed = 0;
    std::vector<LineIssue> first_errors;
};

/// Streams pairs in file order, duplicates included. tsv-pairs lines are
/// `left TAB right` (surrounding `<>` stripped); ntriples-sameas lines are
/// triples whose predicate is `options.sameas_uri`. Anything else is counted
/// as malformed and skipped.
GroundTruthReport for_each_ground_truth_pair(const std::filesystem::path& path,
                                             const GroundTruthOptions& options,
                                             const std::function<void(GroundTruthPair&&)>& on_pair);

struct GroundTruth {
    std::vector<GroundTruthPair> pairs; // distinct, ascending
    GroundTruthReport report;
};

/// In-memory, deduplicated load. The joins stream instead.
GroundTruth load_ground_truth(const std::filesystem::path& path, const GroundTruthOptions& options);

// ---------------------------------------------------------------------------
// Link lines
// ---------------------------------------------------------------------------

/// `<prefix>-<n>`, decimal, no padding. n must be >= 1.
std::string gen_link_id(std::string_view prefix, std::uint64_t n);

/// Default 2-way id prefix: first character of each label (`fd`).
std::string default_link_prefix(std::string_view left_label, std::string_view right_label);

/// One record slot of a link line: the sentinel's label and the record's
/// escaped tokens exactly as they appear in the line.
struct LinkGroup {
    std::string label;
    std::string record_text;

    friend bool operator==(const LinkGroup&, const LinkGroup&) = default;
};

struct LinkLine {
    std::string id;
    std::vector<LinkGroup> groups;

    const LinkGroup* group(std::string_view label) const;

    friend bool operator==(const LinkLine&, const LinkLine&) = default;
};

/// `id TAB label-instance TAB record ... TAB label-instance TAB record`.
std::string serialize_link_line(const LinkLine& line);

/// Sentinel-delimited scan of one line. Throws FormatError on an empty id,
/// a missing leading sentinel, an empty or even-length record group, or a
/// label used twice. Record contents are not parsed.
LinkLine parse_link_line(std::string_view line);

/// The two ids of a 3-way line (`idA,idB`); throws FormatError.
std::pair<std::string, std::string> split_id_pair(std::string_view id);

/// Byte string whose order matches (prefix, numeric suffix) order of ids
/// like `fd-12`; ids without a numeric suffix order by their full text.
std::string link_id_sort_key(std::string_view id);

// ---------------------------------------------------------------------------
// Joins
// ---------------------------------------------------------------------------

struct Join2Spec {
    std::filesystem::path left_entities;
    std::filesystem::path right_entities;
    std::filesystem::path ground_truth;
    GroundTruthOptions gt_options;
    std::string left_label;
    std::string right_label;
    std::filesystem::path output;
    /// Defaults to default_link_prefix(left_label, right_label).
    std::string id_prefix;

    void validate() const;
};

struct Join2Report {
    GroundTruthReport ground_truth;
    std::uint64_t pairs_read = 0;
    std::uint64_t pairs_unique = 0;
    std::uint64_t duplicate_pairs = 0;
    std::uint64_t pairs_dropped_left = 0;
    std::uint64_t pairs_dropped_right = 0;
    std::uint64_t lines_emitted = 0;
    std::uint64_t spill_runs = 0;

    KvReport to_kv() const;
};

/// Inner join of ground-truth pairs with two entity files. One line per
/// distinct pair whose left URI is in the left file and right URI in the
/// right file; ids numbered 1.. in ascending (left, right) order.
Join2Report join2(const Join2Spec& spec, const ExecConfig& cfg);

struct Join3Spec {
    std::filesystem::path first;  // 2-way file A (its ids come first)
    std::filesystem::path second; // 2-way file B
    std::string shared_label;
    /// Output slot order; empty means shared, A's other, B's other.
    std::vector<std::string> order;
    std::filesystem::path output;

    void validate() const;
};

struct Join3Report {
    std::uint64_t lines_first = 0;
    std::uint64_t lines_second = 0;
    std::uint64_t shared_uris_first = 0;
    std::uint64_t shared_uris_second = 0;
    std::uint64_t shared_uris_matched = 0;
    std::uint64_t lines_emitted = 0;
    std::uint64_t spill_runs = 0;

    KvReport to_kv() const;
};

/// For every shared-KB URI, pairs each line of `first` with each line of
/// `second` that hold it. Output ids are `idA,idB`; lines ascend by
/// (idA, idB) in link_id_sort_key order.
Join3Report join3(const Join3Spec& spec, const ExecConfig& cfg);

} // namespace flatlink
