#include "flatlink/link_join.hpp"

#include "flatlink/error.hpp"
#include "flatlink/flat_record.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <set>

namespace flatlink {

namespace fs = std::filesystem;

GroundTruthFormat parse_ground_truth_format(std::string_view name) {
    if (name == "tsv-pairs") return GroundTruthFormat::tsv_pairs;
    if (name == "ntriples-sameas") return GroundTruthFormat::ntriples_sameas;
    throw ConfigError("unknown ground truth format '" + std::string(name)
                      + "' (expected tsv-pairs or ntriples-sameas)");
}

std::string_view to_string(GroundTruthFormat format) {
    return format == GroundTruthFormat::tsv_pairs ? "tsv-pairs" : "ntriples-sameas";
}

namespace {

std::string_view strip_angles(std::string_view s) {
    if (s.size() >= 2 && s.front() == '<' && s.back() == '>') return s.substr(1, s.size() - 2);
    return s;
}

std::string_view trim_blanks(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.back() == '\r' || s.back() == ' ')) {
        if (s.front() == ' ') s.remove_prefix(1);
        else s.remove_suffix(1);
    }
    return s;
}

} // namespace

GroundTruthReport for_each_ground_truth_pair(const fs::path& path, const GroundTruthOptions& options,
                                             const std::function<void(GroundTruthPair&&)>& on_pair) {
    GroundTruthReport report;
    LineReader reader(path);
    std::string line;
    auto malformed = [&](std::string reason) {
        ++report.malformed;
        if (report.first_errors.size() < options.max_reported_errors) {
            report.first_errors.push_back({reader.line_number(), std::move(reason)});
        }
    };
    while (reader.next(line)) {
        ++report.lines_total;
        std::string_view text = line;
        if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
        auto first = text.find_first_not_of(" \t");
        if (first == std::string_view::npos || text[first] == '#') {
            ++report.blank_or_comment;
            continue;
        }
        if (options.format == GroundTruthFormat::tsv_pairs) {
            auto fields = split_tabs(text);
            if (fields.size() != 2) {
                malformed("expected 2 tab-separated fields, got " + std::to_string(fields.size()));
                continue;
            }
            auto left = strip_angles(trim_blanks(fields[0]));
            auto right = strip_angles(trim_blanks(fields[1]));
            if (left.empty() || right.empty()) {
                malformed("empty URI");
                continue;
            }
            ++report.pairs_read;
            on_pair({std::string(left), std::string(right)});
        } else {
            auto parsed = parse_ntriples_line(text);
            if (auto* err = std::get_if<ParseError>(&parsed)) {
                malformed(err->reason);
                continue;
            }
            if (std::holds_alternative<Skip>(parsed)) {
                ++report.blank_or_comment;
                continue;
            }
            auto& t = std::get<Triple>(parsed);
            if (t.predicate != options.sameas_uri) {
                malformed("predicate is not " + options.sameas_uri);
                continue;
            }
            if (t.object.is_literal()) {
                malformed("sameAs object is a literal");
                continue;
            }
            ++report.pairs_read;
            on_pair({std::move(t.subject), std::move(t.object.lexical)});
        }
    }
    return report;
}

GroundTruth load_ground_truth(const fs::path& path, const GroundTruthOptions& options) {
    GroundTruth gt;
    gt.report = for_each_ground_truth_pair(path, options,
                                           [&](GroundTruthPair&& p) { gt.pairs.push_back(std::move(p)); });
    std::sort(gt.pairs.begin(), gt.pairs.end());
    gt.pairs.erase(std::unique(gt.pairs.begin(), gt.pairs.end()), gt.pairs.end());
    return gt;
}

// ---------------------------------------------------------------------------

std::string gen_link_id(std::string_view prefix, std::uint64_t n) {
    if (n == 0) throw Error(ErrorCode::exec, "link id counter starts at 1");
    std::string id(prefix);
    id.push_back('-');
    id += std::to_string(n);
    return id;
}

std::string default_link_prefix(std::string_view left_label, std::string_view right_label) {
    std::string prefix;
    if (!left_label.empty()) prefix.push_back(left_label.front());
    if (!right_label.empty()) prefix.push_back(right_label.front());
    return prefix;
}

const LinkGroup* LinkLine::group(std::string_view label) const {
    for (const auto& g : groups) {
        if (g.label == label) return &g;
    }
    return nullptr;
}

std::string serialize_link_line(const LinkLine& line) {
    std::string out = line.id;
    for (const auto& g : line.groups) {
        out.push_back('\t');
        out += g.label;
        out += "-instance";
        out.push_back('\t');
        out += g.record_text;
    }
    return out;
}

LinkLine parse_link_line(std::string_view line) {
    auto tokens = split_tabs(line);
    if (tokens[0].empty()) throw FormatError("empty link id");
    if (is_sentinel_token(tokens[0])) throw FormatError("link id slot holds a sentinel");
    if (tokens.size() < 2 || !is_sentinel_token(tokens[1])) {
        throw FormatError("link id must be followed by a sentinel");
    }
    LinkLine out;
    out.id = std::string(tokens[0]);
    auto close_group = [&](std::size_t begin, std::size_t end) {
        std::size_t count = end - begin;
        const auto& label = out.groups.back().label;
        if (count == 0) throw FormatError("empty record after " + label + "-instance");
        if (count % 2 == 0) {
            throw FormatError("even token count in " + label + " record");
        }
        const char* from = tokens[begin].data();
        const char* to = tokens[end - 1].data() + tokens[end - 1].size();
        out.groups.back().record_text.assign(from, static_cast<std::size_t>(to - from));
    };
    std::size_t group_start = 0;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (!is_sentinel_token(tokens[i])) continue;
        if (!out.groups.empty()) close_group(group_start, i);
        std::string label(sentinel_label(tokens[i]));
        if (out.group(label) != nullptr) throw FormatError("label '" + label + "' appears twice");
        out.groups.push_back({std::move(label), {}});
        group_start = i + 1;
    }
    close_group(group_start, tokens.size());
    return out;
}

std::pair<std::string, std::string> split_id_pair(std::string_view id) {
    auto comma = id.find(',');
    if (comma == std::string_view::npos || comma == 0 || comma + 1 == id.size()
        || id.find(',', comma + 1) != std::string_view::npos) {
        throw FormatError("expected an id pair 'idA,idB', got '" + std::string(id) + "'");
    }
    return {std::string(id.substr(0, comma)), std::string(id.substr(comma + 1))};
}

namespace {

/// Order-preserving, self-delimiting encoding: 0x00 -> 00 FF, end -> 00 01.
void append_ordered(std::string& out, std::string_view s) {
    for (char c : s) {
        out.push_back(c);
        if (c == '\0') out.push_back('\xFF');
    }
    out.push_back('\0');
    out.push_back('\x01');
}

} // namespace

std::string link_id_sort_key(std::string_view id) {
    std::string key;
    auto dash = id.rfind('-');
    std::string_view digits = dash == std::string_view::npos ? std::string_view{} : id.substr(dash + 1);
    bool numeric = !digits.empty() && digits.size() <= 20
                   && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; });
    if (numeric) {
        append_ordered(key, id.substr(0, dash));
        append_ordered(key, std::string(20 - digits.size(), '0') + std::string(digits));
    } else {
        append_ordered(key, id);
        append_ordered(key, {});
    }
    return key;
}

// ---------------------------------------------------------------------------

namespace {

void check_distinct_paths(const std::vector<fs::path>& paths, const fs::path& output) {
    for (const auto& p : paths) {
        if (p == output) throw ConfigError("output " + output.string() + " is also an input");
    }
}

/// Length-prefixed (sort key, payload) packed into one reducer output line.
std::string pack_sorted(std::string_view key, std::string_view payload) {
    std::string out;
    auto n = static_cast<std::uint32_t>(key.size());
    out.append(reinterpret_cast<const char*>(&n), sizeof n);
    out += key;
    out += payload;
    return out;
}

std::pair<std::string_view, std::string_view> unpack_sorted(std::string_view packed) {
    std::uint32_t n = 0;
    std::memcpy(&n, packed.data(), sizeof n);
    return {packed.substr(sizeof n, n), packed.substr(sizeof n + n)};
}

void emit_entity_lines(const fs::path& path, MapEmitter& emit) {
    LineReader reader(path);
    std::string line;
    while (reader.next(line)) {
        if (line.empty()) continue;
        std::string uri;
        try {
            uri = first_token_uri(line);
        } catch (const FormatError& e) {
            throw FormatError(path.string() + ":" + std::to_string(reader.line_number()) + ": "
                              + e.what());
        }
        if (uri.empty()) {
            throw FormatError(path.string() + ":" + std::to_string(reader.line_number())
                              + ": empty entity uri");
        }
        emit.emit(uri, line);
    }
}

} // namespace

void Join2Spec::validate() const {
    if (!is_valid_kb_label(left_label) || !is_valid_kb_label(right_label)) {
        throw ConfigError("join labels must match [a-z0-9_.-]+");
    }
    if (left_label == right_label) throw ConfigError("join labels must differ");
    if (!id_prefix.empty() && (!is_valid_kb_label(id_prefix) || id_prefix.find(',') != std::string::npos)) {
        throw ConfigError("invalid link id prefix '" + id_prefix + "'");
    }
    if (output.empty()) throw ConfigError("join2 needs an output path");
    check_distinct_paths({left_entities, right_entities, ground_truth}, output);
}

KvReport Join2Report::to_kv() const {
    KvReport kv;
    kv.add("stage", "join2")
        .add("pairs_read", pairs_read)
        .add("pairs_unique", pairs_unique)
        .add("duplicate_pairs", duplicate_pairs)
        .add("malformed_gt_lines", ground_truth.malformed)
        .add("pairs_dropped_left", pairs_dropped_left)
        .add("pairs_dropped_right", pairs_dropped_right)
        .add("lines_emitted", lines_emitted)
        .add("spill_runs", spill_runs);
    return kv;
}

Join2Report join2(const Join2Spec& spec, const ExecConfig& cfg) {
    spec.validate();
    cfg.validate();
    Join2Report report;
    const std::string prefix =
        spec.id_prefix.empty() ? default_link_prefix(spec.left_label, spec.right_label) : spec.id_prefix;

    ScratchDir scratch(cfg.spill_dir, "flatlink-join2");
    const auto stage1_path = scratch.next_file("left-matched");

    // Stage 1: co-group left entities with pairs on the left URI.
    std::atomic<std::uint64_t> unique{0}, dropped_left{0}, dropped_right{0};
    {
        std::vector<MapInput> inputs;
        inputs.push_back({0, [&](MapEmitter& emit) { emit_entity_lines(spec.left_entities, emit); }});
        inputs.push_back({1, [&](MapEmitter& emit) {
                              report.ground_truth = for_each_ground_truth_pair(
                                  spec.ground_truth, spec.gt_options,
                                  [&](GroundTruthPair&& p) { emit.emit(p.left, p.right); });
                          }});
        ReduceFn reduce = [&](KeyGroup& g, LineEmitter& out) {
            std::string entity_line;
            bool have_entity = false;
            std::string last_right;
            bool have_right = false;
            std::uint64_t distinct = 0;
            while (g.next()) {
                if (g.tag() == 0) {
                    if (have_entity) {
                        throw FormatError("duplicate subject in " + spec.left_entities.string());
                    }
                    entity_line = g.value();
                    have_entity = true;
                    continue;
                }
                if (have_right && g.value() == last_right) continue;
                last_right = g.value();
                have_right = true;
                ++distinct;
                if (have_entity) {
                    std::string line = escape_token(last_right);
                    line.push_back('\t');
                    append_escaped(line, g.key());
                    line.push_back('\t');
                    line += entity_line;
                    out.emit(line);
                }
            }
            unique += distinct;
            if (!have_entity) dropped_left += distinct;
        };
        AtomicLineWriter stage1(stage1_path);
        auto stats = run_map_reduce(inputs, reduce, cfg,
                                    [&](std::string_view line) { stage1.write_line(line); });
        stage1.commit();
        report.spill_runs += stats.sort.spill_runs;
    }

    // Stage 2: co-group right entities with the left matches on the right URI;
    // results go to an external sort on (left, right).
    ExternalSorter ordered(cfg.memory_budget_bytes, scratch.path(), cfg.merge_fan_in);
    {
        std::vector<MapInput> inputs;
        inputs.push_back({0, [&](MapEmitter& emit) { emit_entity_lines(spec.right_entities, emit); }});
        inputs.push_back({1, [&](MapEmitter& emit) {
                              LineReader reader(stage1_path);
                              std::string line;
                              while (reader.next(line)) {
                                  auto tab = line.find('\t');
                                  std::string_view rest(line);
                                  emit.emit(unescape_token(rest.substr(0, tab)), rest.substr(tab + 1));
                              }
                          }});
        ReduceFn reduce = [&](KeyGroup& g, LineEmitter& out) {
            std::string entity_line;
            bool have_entity = false;
            std::uint64_t unmatched = 0;
            while (g.next()) {
                if (g.tag() == 0) {
                    if (have_entity) {
                        throw FormatError("duplicate subject in " + spec.right_entities.string());
                    }
                    entity_line = g.value();
                    have_entity = true;
                    continue;
                }
                if (!have_entity) {
                    ++unmatched;
                    continue;
                }
                auto value = g.value();
                auto tab = value.find('\t');
                std::string key;
                append_ordered(key, unescape_token(value.substr(0, tab)));
                append_ordered(key, g.key());
                std::string payload(value.substr(tab + 1));
                payload.push_back('\n');
                payload += entity_line;
                out.emit(pack_sorted(key, payload));
            }
            dropped_right += unmatched;
        };
        auto stats = run_map_reduce(inputs, reduce, cfg, [&](std::string_view packed) {
            auto [key, payload] = unpack_sorted(packed);
            ordered.add(key, 0, payload);
        });
        report.spill_runs += stats.sort.spill_runs;
    }

    // Stage 3: number the pairs in (left, right) order and write.
    auto sorted = ordered.finish();
    AtomicLineWriter out(spec.output);
    const std::string left_sentinel = sentinel_for(spec.left_label);
    const std::string right_sentinel = sentinel_for(spec.right_label);
    std::uint64_t n = 0;
    std::string line;
    while (sorted.next()) {
        auto payload = sorted.value();
        auto nl = payload.find('\n');
        line = gen_link_id(prefix, ++n);
        line.push_back('\t');
        line += left_sentinel;
        line.push_back('\t');
        line += payload.substr(0, nl);
        line.push_back('\t');
        line += right_sentinel;
        line.push_back('\t');
        line += payload.substr(nl + 1);
        out.write_line(line);
    }
    out.commit();

    report.pairs_read = report.ground_truth.pairs_read;
    report.pairs_unique = unique.load();
    report.duplicate_pairs = report.pairs_read - report.pairs_unique;
    report.pairs_dropped_left = dropped_left.load();
    report.pairs_dropped_right = dropped_right.load();
    report.lines_emitted = n;
    return report;
}

// ---------------------------------------------------------------------------

void Join3Spec::validate() const {
    if (!is_valid_kb_label(shared_label)) throw ConfigError("invalid shared label '" + shared_label + "'");
    if (!order.empty()) {
        if (order.size() != 3) throw ConfigError("join3 order must list exactly 3 labels");
        std::set<std::string> distinct(order.begin(), order.end());
        if (distinct.size() != 3) throw ConfigError("join3 order labels must be distinct");
        if (!distinct.contains(shared_label)) {
            throw ConfigError("join3 order must include the shared label '" + shared_label + "'");
        }
    }
    if (output.empty()) throw ConfigError("join3 needs an output path");
    check_distinct_paths({first, second}, output);
}

KvReport Join3Report::to_kv() const {
    KvReport kv;
    kv.add("stage", "join3")
        .add("lines_first", lines_first)
        .add("lines_second", lines_second)
        .add("shared_uris_first", shared_uris_first)
        .add("shared_uris_second", shared_uris_second)
        .add("shared_uris_matched", shared_uris_matched)
        .add("lines_emitted", lines_emitted)
        .add("spill_runs", spill_runs);
    return kv;
}

namespace {

struct SideLabels {
    std::string other;
    bool known = false;
};

/// Emits each 2-way line under its shared-KB URI and records the label of
/// the other side, which must be the same on every line.
void emit_link_lines(const fs::path& path, const std::string& shared_label, SideLabels& side,
                     std::uint64_t& lines, MapEmitter& emit) {
    LineReader reader(path);
    std::string line;
    while (reader.next(line)) {
        if (line.empty()) continue;
        auto where = [&] { return path.string() + ":" + std::to_string(reader.line_number()) + ": "; };
        LinkLine link;
        try {
            link = parse_link_line(line);
        } catch (const FormatError& e) {
            throw FormatError(where() + e.what());
        }
        if (link.groups.size() != 2) throw FormatError(where() + "expected a 2-way link line");
        const LinkGroup* shared = link.group(shared_label);
        if (shared == nullptr) throw FormatError(where() + "no " + shared_label + "-instance slot");
        const auto& other = link.groups[0].label == shared_label ? link.groups[1] : link.groups[0];
        if (!side.known) {
            side.other = other.label;
            side.known = true;
        } else if (side.other != other.label) {
            throw FormatError(where() + "mixes labels '" + side.other + "' and '" + other.label + "'");
        }
        emit.emit(first_token_uri(shared->record_text), line);
        ++lines;
    }
}

SideLabels peek_side(const fs::path& path, const std::string& shared_label) {
    SideLabels side;
    LineReader reader(path);
    std::string line;
    while (reader.next(line)) {
        if (line.empty()) continue;
        LinkLine link;
        try {
            link = parse_link_line(line);
        } catch (const FormatError& e) {
            throw FormatError(path.string() + ":" + std::to_string(reader.line_number()) + ": " + e.what());
        }
        for (const auto& g : link.groups) {
            if (g.label != shared_label) {
                side.other = g.label;
                side.known = true;
                break;
            }
        }
        break;
    }
    return side;
}

} // namespace

Join3Report join3(const Join3Spec& spec, const ExecConfig& cfg) {
    spec.validate();
    cfg.validate();
    Join3Report report;
    SideLabels first_side, second_side;

    std::vector<MapInput> inputs;
    inputs.push_back({0, [&](MapEmitter& emit) {
                          emit_link_lines(spec.first, spec.shared_label, first_side, report.lines_first, emit);
                      }});
    inputs.push_back({1, [&](MapEmitter& emit) {
                          emit_link_lines(spec.second, spec.shared_label, second_side, report.lines_second,
                                          emit);
                      }});

    // Slot order is fixed up front from the first line of each input.
    first_side = peek_side(spec.first, spec.shared_label);
    second_side = peek_side(spec.second, spec.shared_label);
    std::vector<std::string> order;
    if (first_side.known && second_side.known) {
        if (first_side.other == second_side.other) {
            throw FormatError("both inputs link " + spec.shared_label + " to " + first_side.other);
        }
        order = {spec.shared_label, first_side.other, second_side.other};
        if (!spec.order.empty()) {
            for (const auto& l : spec.order) {
                if (std::find(order.begin(), order.end(), l) == order.end()) {
                    throw ConfigError("join3 order label '" + l + "' does not occur in the inputs");
                }
            }
            order = spec.order;
        }
    }

    std::atomic<std::uint64_t> uris_first{0}, uris_second{0}, matched{0};
    ReduceFn reduce = [&](KeyGroup& g, LineEmitter& out) {
        std::vector<LinkLine> firsts;
        bool any_second = false;
        while (g.next()) {
            if (g.tag() == 0) {
                firsts.push_back(parse_link_line(g.value()));
                continue;
            }
            any_second = true;
            if (firsts.empty()) continue;
            auto second = parse_link_line(g.value());
            const LinkGroup* second_other = second.group(second_side.other);
            for (const auto& first : firsts) {
                std::string line = first.id;
                line.push_back(',');
                line += second.id;
                for (const auto& label : order) {
                    const LinkGroup* grp = label == second_side.other ? second_other : first.group(label);
                    line.push_back('\t');
                    line += label;
                    line += "-instance\t";
                    line += grp->record_text;
                }
                std::string key = link_id_sort_key(first.id);
                key += link_id_sort_key(second.id);
                out.emit(pack_sorted(key, line));
            }
        }
        if (!firsts.empty()) ++uris_first;
        if (any_second) ++uris_second;
        if (!firsts.empty() && any_second) ++matched;
    };

    ScratchDir scratch(cfg.spill_dir, "flatlink-join3");
    ExternalSorter ordered(cfg.memory_budget_bytes, scratch.path(), cfg.merge_fan_in);
    auto stats = run_map_reduce(inputs, reduce, cfg, [&](std::string_view packed) {
        auto [key, payload] = unpack_sorted(packed);
        ordered.add(key, 0, payload);
    });
    report.spill_runs = stats.sort.spill_runs;

    auto sorted = ordered.finish();
    AtomicLineWriter out(spec.output);
    std::uint64_t n = 0;
    while (sorted.next()) {
        out.write_line(sorted.value());
        ++n;
    }
    out.commit();

    report.shared_uris_first = uris_first.load();
    report.shared_uris_second = uris_second.load();
    report.shared_uris_matched = matched.load();
    report.lines_emitted = n;
    return report;
}

} // namespace flatlink
