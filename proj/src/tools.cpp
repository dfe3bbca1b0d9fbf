#include "flatlink/tools.hpp"

#include "flatlink/error.hpp"
#include "flatlink/io.hpp"
#include "flatlink/link_join.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace flatlink {

namespace fs = std::filesystem;

FileMode parse_file_mode(std::string_view name) {
    if (name == "entity") return FileMode::entity;
    if (name == "link2") return FileMode::link2;
    if (name == "link3") return FileMode::link3;
    throw ConfigError("unknown file mode '" + std::string(name) + "' (expected entity, link2 or link3)");
}

std::string_view to_string(FileMode mode) {
    switch (mode) {
    case FileMode::entity: return "entity";
    case FileMode::link2: return "link2";
    case FileMode::link3: return "link3";
    }
    return "entity";
}

std::size_t record_slots(FileMode mode) {
    switch (mode) {
    case FileMode::entity: return 1;
    case FileMode::link2: return 2;
    case FileMode::link3: return 3;
    }
    return 1;
}

ParsedLine parse_line(std::string_view line, FileMode mode) {
    ParsedLine out;
    if (mode == FileMode::entity) {
        out.labels.emplace_back("entity");
        out.records.push_back(parse_record(line));
        out.id = out.records.back().uri;
        return out;
    }
    auto link = parse_link_line(line);
    if (link.groups.size() != record_slots(mode)) {
        throw FormatError("expected " + std::to_string(record_slots(mode)) + " record slots, found "
                          + std::to_string(link.groups.size()));
    }
    if (mode == FileMode::link3) split_id_pair(link.id);
    else if (link.id.find(',') != std::string::npos) throw FormatError("2-way link id holds a comma");
    out.id = std::move(link.id);
    for (auto& g : link.groups) {
        out.records.push_back(parse_record(g.record_text));
        out.labels.push_back(std::move(g.label));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound == 0) throw Error(ErrorCode::exec, "bounded_draw with bound 0");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        std::uint64_t r = rng();
        if (r >= threshold) return r % bound;
    }
}

std::uint64_t sample_lines(const fs::path& in, const SampleSpec& spec, const fs::path& out) {
    struct Slot {
        std::uint64_t index;
        std::string line;
    };
    std::vector<Slot> reservoir;
    if (spec.n > 0) {
        std::mt19937_64 rng(spec.seed);
        LineReader reader(in);
        std::string line;
        std::uint64_t i = 0;
        for (; reader.next(line); ++i) {
            if (i < spec.n) {
                reservoir.push_back({i, line});
                continue;
            }
            auto j = bounded_draw(rng, i + 1);
            if (j < spec.n) {
                reservoir[j].index = i;
                reservoir[j].line = line;
            }
        }
        std::sort(reservoir.begin(), reservoir.end(),
                  [](const Slot& a, const Slot& b) { return a.index < b.index; });
    }
    AtomicLineWriter writer(out);
    for (const auto& s : reservoir) writer.write_line(s.line);
    writer.commit();
    return reservoir.size();
}

// ---------------------------------------------------------------------------

Side parse_side(std::string_view name) {
    if (name == "first") return Side::first;
    if (name == "second") return Side::second;
    if (name == "third") return Side::third;
    if (name == "any") return Side::any;
    if (name == "all") return Side::all;
    throw ConfigError("unknown side '" + std::string(name) + "' (expected first, second, third, any or all)");
}

std::string_view to_string(Side side) {
    switch (side) {
    case Side::first: return "first";
    case Side::second: return "second";
    case Side::third: return "third";
    case Side::any: return "any";
    case Side::all: return "all";
    }
    return "any";
}

bool record_has_type(const EntityRecord& rec, std::string_view type_predicate, std::string_view type_uri) {
    const Property* p = rec.find(type_predicate);
    if (p == nullptr) return false;
    return std::any_of(p->values.begin(), p->values.end(),
                       [&](const ObjectValue& v) { return !v.is_literal() && v.lexical == type_uri; });
}

KvReport FilterReport::to_kv() const {
    KvReport kv;
    kv.add("stage", "filter-type").add("lines", lines).add("kept", kept).add("unparseable", unparseable);
    return kv;
}

FilterReport filter_by_type(const fs::path& in, FileMode mode, const TypeFilterSpec& spec,
                            const fs::path& out) {
    std::size_t slot = 0;
    switch (spec.side) {
    case Side::first: slot = 0; break;
    case Side::second: slot = 1; break;
    case Side::third: slot = 2; break;
    default: break;
    }
    bool positional = spec.side == Side::first || spec.side == Side::second || spec.side == Side::third;
    if (positional && slot >= record_slots(mode)) {
        throw ConfigError("side '" + std::string(to_string(spec.side)) + "' does not exist in "
                          + std::string(to_string(mode)) + " files");
    }
    if (spec.type_uri.empty()) throw ConfigError("type filter needs a type URI");

    FilterReport report;
    LineReader reader(in);
    AtomicLineWriter writer(out);
    std::string line;
    while (reader.next(line)) {
        ++report.lines;
        ParsedLine parsed;
        try {
            parsed = parse_line(line, mode);
        } catch (const FormatError& e) {
            ++report.unparseable;
            if (report.first_errors.size() < 20) report.first_errors.push_back({reader.line_number(), e.what()});
            continue;
        }
        auto has = [&](const EntityRecord& r) { return record_has_type(r, spec.type_predicate, spec.type_uri); };
        bool keep = false;
        if (positional) keep = has(parsed.records[slot]);
        else if (spec.side == Side::any) keep = std::any_of(parsed.records.begin(), parsed.records.end(), has);
        else keep = std::all_of(parsed.records.begin(), parsed.records.end(), has);
        if (keep) {
            writer.write_line(line);
            ++report.kept;
        }
    }
    writer.commit();
    return report;
}

// ---------------------------------------------------------------------------

KvReport StatsReport::to_kv() const {
    KvReport kv;
    kv.add("stage", "stats")
        .add("lines", lines)
        .add("bytes", bytes)
        .add("parsed", parsed)
        .add("unparseable", unparseable);
    for (std::size_t i = 0; i < slots.size(); ++i) {
        std::string p = "slot" + std::to_string(i + 1) + ".";
        kv.add(p + "label", slots[i].label)
            .add(p + "records", slots[i].records)
            .add(p + "distinct_entities", slots[i].distinct_entities);
    }
    for (std::size_t i = 0; i < top_types.size(); ++i) {
        std::string p = "type" + std::to_string(i + 1) + ".";
        kv.add(p + "value", top_types[i].first).add(p + "count", top_types[i].second);
    }
    return kv;
}

StatsReport compute_stats(const fs::path& in, const StatsOptions& options) {
    StatsReport report;
    const std::size_t nslots = record_slots(options.mode);
    report.slots.resize(nslots);
    std::vector<std::unordered_set<std::string>> distinct(nslots);
    std::unordered_map<std::string, std::uint64_t> types;

    LineReader reader(in);
    std::string line;
    while (reader.next(line)) {
        ++report.lines;
        ParsedLine parsed;
        try {
            parsed = parse_line(line, options.mode);
        } catch (const FormatError&) {
            ++report.unparseable;
            continue;
        }
        ++report.parsed;
        for (std::size_t i = 0; i < nslots; ++i) {
            auto& slot = report.slots[i];
            if (slot.label.empty()) slot.label = parsed.labels[i];
            ++slot.records;
            distinct[i].insert(parsed.records[i].uri);
            if (const Property* p = parsed.records[i].find(options.type_predicate)) {
                // literal look-alikes are not types, same as the filter
                for (const auto& v : p->values)
                    if (!v.is_literal()) ++types[v.lexical];
            }
        }
    }
    report.bytes = reader.bytes_read();
    for (std::size_t i = 0; i < nslots; ++i) report.slots[i].distinct_entities = distinct[i].size();

    report.top_types.assign(types.begin(), types.end());
    std::sort(report.top_types.begin(), report.top_types.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (report.top_types.size() > options.top_k) report.top_types.resize(options.top_k);
    return report;
}

// ---------------------------------------------------------------------------

KvReport ValidationReport::to_kv() const {
    KvReport kv;
    kv.add("stage", "validate")
        .add("lines", lines)
        .add("ok_lines", ok_lines)
        .add("violations", violation_count);
    return kv;
}

std::vector<std::string> check_line(std::string_view line, FileMode mode) {
    std::vector<std::string> out;
    if (line.empty()) {
        out.emplace_back("empty line");
        return out;
    }
    // Only the bytes the token escape covers; other C0 bytes may legally
    // come from decoded \u escapes in the source data.
    if (line.find_first_of("\r\n") != std::string_view::npos) out.emplace_back("raw control byte");
    if (mode == FileMode::entity) {
        auto tokens = split_tabs(line);
        if (std::any_of(tokens.begin(), tokens.end(), [](std::string_view t) { return is_sentinel_token(t); })) {
            out.emplace_back("unescaped sentinel token inside entity record");
        }
    }
    try {
        auto parsed = parse_line(line, mode);
        for (const auto& rec : parsed.records) {
            for (auto& v : record_violations(rec)) out.push_back(std::move(v));
        }
    } catch (const FormatError& e) {
        out.emplace_back(e.what());
    }
    return out;
}

ValidationReport validate_file(const fs::path& in, FileMode mode, std::size_t max_violations) {
    ValidationReport report;
    std::unordered_set<std::string> ids;
    LineReader reader(in);
    std::string line;
    auto flag = [&](std::string reason) {
        ++report.violation_count;
        if (report.violations.size() < max_violations) {
            report.violations.push_back({reader.line_number(), std::move(reason)});
        }
    };
    while (reader.next(line)) {
        ++report.lines;
        auto problems = check_line(line, mode);
        if (problems.empty()) {
            std::string id;
            if (mode == FileMode::entity) id = first_token_uri(line);
            else id = line.substr(0, line.find('\t'));
            if (!ids.insert(std::move(id)).second) {
                problems.emplace_back(mode == FileMode::entity ? "duplicate entity uri" : "duplicate link id");
            }
        }
        if (problems.empty()) {
            ++report.ok_lines;
        } else {
            for (auto& p : problems) flag(std::move(p));
        }
    }
    return report;
}

} // namespace flatlink
