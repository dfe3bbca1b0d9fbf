#include "flatlink/compile.hpp"

#include "flatlink/error.hpp"
#include "flatlink/flat_record.hpp"

#include <array>
#include <atomic>
#include <cstdio>
#include <set>

namespace flatlink {

namespace fs = std::filesystem;

void KbSpec::validate() const {
    if (!is_valid_kb_label(label)) {
        throw ConfigError("invalid knowledge base label '" + label
                          + "' (expected lowercase [a-z0-9_.-]+)");
    }
    if (input_paths.empty()) throw ConfigError("knowledge base '" + label + "' has no input files");
    if (output_path.empty()) throw ConfigError("knowledge base '" + label + "' has no output path");
    std::set<fs::path> seen;
    for (const auto& p : input_paths) {
        if (p == output_path) throw ConfigError("output path of '" + label + "' is also an input");
        if (!seen.insert(p).second) throw ConfigError("input " + p.string() + " listed twice");
    }
}

KvReport CompileReport::to_kv() const {
    KvReport kv;
    kv.add("stage", "compile")
        .add("label", label)
        .add("entities", entities)
        .add("triples", triples)
        .add("duplicate_triples", duplicate_triples)
        .add("skipped_lines", skipped_lines)
        .add("lines_total", parse.lines_total)
        .add("spill_runs", job.sort.spill_runs);
    return kv;
}

namespace {

// Shuffle value: 16 hex digits of input sequence, escaped predicate, value token.
void encode_triple_value(std::string& out, std::uint64_t seq, const Triple& t) {
    std::array<char, 17> hex{};
    std::snprintf(hex.data(), hex.size(), "%016llx", static_cast<unsigned long long>(seq));
    out.assign(hex.data(), 16);
    out.push_back('\t');
    append_escaped(out, t.predicate);
    out.push_back('\t');
    append_value_token(out, t.object);
}

Triple decode_triple_value(std::string_view subject, std::string_view value) {
    auto first = value.find('\t');
    auto second = value.find('\t', first + 1);
    if (first != 16 || second == std::string_view::npos) {
        throw Error(ErrorCode::exec, "corrupt shuffle value");
    }
    return {std::string(subject), unescape_token(value.substr(first + 1, second - first - 1)),
            parse_value_token(value.substr(second + 1))};
}

} // namespace

CompileReport compile_kb(const KbSpec& spec, const ExecConfig& cfg) {
    spec.validate();
    cfg.validate();
    CompileReport report;
    report.label = spec.label;

    std::uint64_t seq = 0;
    std::vector<MapInput> inputs;
    for (const auto& path : spec.input_paths) {
        inputs.push_back({0, [&, path](MapEmitter& emit) {
                              LineReader reader(path);
                              std::string value;
                              report.parse += stream_triples(reader, [&](Triple&& t) {
                                  encode_triple_value(value, seq++, t);
                                  emit.emit(t.subject, value);
                              });
                          }});
    }

    std::atomic<std::uint64_t> kept_values{0};
    ReduceFn reduce = [&](KeyGroup& group, LineEmitter& out) {
        std::vector<Triple> triples;
        while (group.next()) triples.push_back(decode_triple_value(group.key(), group.value()));
        auto rec = record_from_triples(group.key(), triples);
        kept_values += rec.value_count();
        out.emit(serialize_record(rec));
    };

    AtomicLineWriter writer(spec.output_path);
    report.job = run_map_reduce(
        inputs, reduce, cfg, [&](std::string_view line) { writer.write_line(line); },
        OutputOrder::key);

    report.triples = report.parse.triples_ok;
    report.skipped_lines = report.parse.lines_skipped;
    report.entities = report.job.keys;
    report.duplicate_triples = report.triples - kept_values.load();
    if (report.triples == 0) {
        throw FormatError("knowledge base '" + spec.label + "' has no parseable triples");
    }
    writer.commit();
    return report;
}

} // namespace flatlink
