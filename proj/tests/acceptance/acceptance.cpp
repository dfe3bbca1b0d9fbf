// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are the constants below.

#include "flatlink/compile.hpp"
#include "flatlink/config.hpp"
#include "flatlink/error.hpp"
#include "flatlink/flat_record.hpp"
#include "flatlink/link_join.hpp"
#include "flatlink/pipeline.hpp"
#include "flatlink/tools.hpp"

#include "gen.hpp"
#include "oracle.hpp"
#include "testutil.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

using namespace flatlink;
namespace fs = std::filesystem;
using testutil::read_lines;
using testutil::write_lines;

namespace {

constexpr double kCodecSeconds = 5.0;     // AC1
constexpr double kCompileSeconds = 60.0;  // AC3
constexpr double kScaleSeconds = 600.0;   // AC8
constexpr std::uint64_t kScaleBudget = 64ull << 20;
constexpr std::size_t kScaleTriples = 1000000;
constexpr std::size_t kScaleEntities = 100000;
constexpr std::uint64_t kSampleN = 10000;
constexpr std::size_t kSamplePopulation = 120000;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool ok = true;
    std::string detail;
};

// Collects the first few mismatches; any mismatch fails the criterion.
class Check {
public:
    void expect(bool cond, const std::string& what) {
        if (cond) return;
        ok_ = false;
        if (++failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
    }
    bool ok() const { return ok_; }
    Outcome done(const std::string& summary) const {
        if (ok_) return {true, summary};
        return {false, summary + " | " + std::to_string(failures_) + " mismatches: " + notes_};
    }

private:
    bool ok_ = true;
    std::size_t failures_ = 0;
    std::string notes_;
};

ExecConfig exec_in(const fs::path& dir, std::uint64_t budget = 1 << 20, std::size_t partitions = 4,
                   std::size_t workers = 2) {
    ExecConfig cfg;
    cfg.spill_dir = dir;
    cfg.memory_budget_bytes = budget;
    cfg.partitions = partitions;
    cfg.parallelism = workers;
    return cfg;
}

void write_gt(const fs::path& p, const std::vector<GroundTruthPair>& pairs) {
    std::vector<std::string> lines;
    for (const auto& gp : pairs) lines.push_back(gp.left + "\t" + gp.right);
    write_lines(p, lines);
}

std::string strip_id(const std::string& line) { return line.substr(line.find('\t')); }

// Every file any criterion produced, for the file-level criteria.
struct Produced {
    fs::path path;
    FileMode mode;
};

std::vector<std::string> sentinel_labels(const std::string& line) {
    std::vector<std::string> out;
    for (const auto& g : oracle::split_link_line(line).groups) out.push_back(g.first);
    return out;
}

// --- AC1 -------------------------------------------------------------------

Outcome codec_round_trip() {
    gen::Rng rng(20150101);
    std::vector<EntityRecord> recs;
    for (int i = 0; i < 10000; ++i) recs.push_back(gen::random_record(rng));
    Check c;
    auto t0 = Clock::now();
    for (const auto& r : recs) {
        auto line = serialize_record(r);
        c.expect(parse_record(line) == r, "record " + r.uri + " changed");
        c.expect(line.find('\n') == std::string::npos && line.find('\r') == std::string::npos,
                 "raw line break in " + r.uri);
    }
    double secs = seconds_since(t0);
    c.expect(secs < kCodecSeconds, "took " + std::to_string(secs) + "s");
    char buf[96];
    std::snprintf(buf, sizeof buf, "10000 records in %.2fs (limit %.0fs)", secs, kCodecSeconds);
    return c.done(buf);
}

// --- AC3 (+ literal tokens for AC2) ------------------------------------------

// Literal tokens of a compiled KB, checked against the triples that went in.
void check_literal_tokens(Check& c, const std::vector<flatlink::Triple>& triples,
                          const std::vector<std::string>& lines) {
    std::unordered_map<std::string, std::unordered_set<std::string>> pairs_by_subject;
    for (const auto& l : lines) {
        auto toks = testutil::split(l, '\t');
        auto& set = pairs_by_subject[oracle::unescape(toks[0])];
        for (std::size_t i = 1; i + 1 < toks.size(); i += 2) set.insert(toks[i] + '\t' + toks[i + 1]);
    }
    for (const auto& t : triples) {
        if (!t.object.is_literal()) continue;
        const std::string want = oracle::escape("\"\"" + t.object.lexical + "\"\"");
        c.expect(want.compare(0, 2, "\"\"") == 0 && want.compare(want.size() - 2, 2, "\"\"") == 0,
                 "literal of " + t.subject + " not wrapped");
        c.expect(pairs_by_subject[t.subject].count(oracle::escape(t.predicate) + '\t' + want) == 1,
                 "literal of " + t.subject + " missing or not wrapped in two quotes");
    }
}

Outcome compile_equals_group_by(const fs::path& work, std::vector<Produced>& produced, Check& literal_check) {
    Check c;
    double total = 0;
    std::uint64_t total_triples = 0;
    for (int i = 0; i < 20; ++i) {
        gen::Rng rng(3000 + i);
        gen::KbOptions opts;
        opts.triples = static_cast<std::size_t>(std::llround(std::pow(10.0, 3.0 + 2.0 * i / 19.0)));
        opts.subjects = std::max<std::size_t>(10, opts.triples / (2 + gen::pick(rng, 19)));
        auto fx = gen::random_kb(rng, "kb" + std::to_string(i), opts);
        auto dir = work / ("ac3-" + std::to_string(i));
        fs::create_directories(dir);
        std::vector<fs::path> inputs;
        std::size_t files = 1 + i % 3;
        for (std::size_t f = 0; f < files; ++f) {
            std::vector<std::string> part;
            for (std::size_t k = f; k < fx.lines.size(); k += files) part.push_back(fx.lines[k]);
            inputs.push_back(dir / ("in" + std::to_string(f) + ".nt"));
            write_lines(inputs.back(), part);
        }
        auto out = dir / "kb.ents";
        auto t0 = Clock::now();
        auto rep = compile_kb({"kb" + std::to_string(i), inputs, out}, exec_in(dir, 256 << 10));
        total += seconds_since(t0);
        total_triples += opts.triples;

        auto lines = read_lines(out);
        auto want = oracle::group_by_subject(fx.parsed);
        oracle::Grouped got;
        try {
            got = oracle::group_entity_lines(lines);
        } catch (const std::exception& e) {
            c.expect(false, "kb" + std::to_string(i) + ": " + e.what());
            continue;
        }
        c.expect(got == want, "kb" + std::to_string(i) + " differs from the group-by oracle");
        c.expect(rep.entities == want.size(), "kb" + std::to_string(i) + " entity count");

        // a URI is an entity iff it occurs as a subject
        std::set<std::string> subjects, objects;
        for (const auto& t : fx.parsed) {
            subjects.insert(t.subject);
            if (!t.object.is_literal()) objects.insert(t.object.lexical);
        }
        std::set<std::string> line_uris;
        for (const auto& l : lines) line_uris.insert(oracle::unescape(l.substr(0, l.find('\t'))));
        c.expect(line_uris == subjects, "kb" + std::to_string(i) + " entity set is not the subject set");
        c.expect(line_uris.size() == lines.size(), "kb" + std::to_string(i) + " repeats a subject");
        for (const auto& o : objects) {
            if (!subjects.count(o)) c.expect(!line_uris.count(o), "object-only URI " + o + " became an entity");
        }
        check_literal_tokens(literal_check, fx.parsed, lines);
        produced.push_back({out, FileMode::entity});
    }
    c.expect(total < kCompileSeconds, "compile took " + std::to_string(total) + "s");
    char buf[128];
    std::snprintf(buf, sizeof buf, "20 KBs, %llu triples, compile %.2fs (limit %.0fs)",
                  static_cast<unsigned long long>(total_triples), total, kCompileSeconds);
    return c.done(buf);
}

// --- AC4 -------------------------------------------------------------------

Outcome join2_equals_nested_loop(const fs::path& work, std::vector<Produced>& produced) {
    Check c;
    std::uint64_t lines_total = 0, dropped = 0;
    for (int i = 0; i < 50; ++i) {
        gen::Rng rng(4000 + i);
        auto dir = work / ("ac4-" + std::to_string(i));
        fs::create_directories(dir);
        std::size_t na = 20 + gen::pick(rng, 481);
        std::size_t nb = 20 + gen::pick(rng, 481);
        auto a = gen::random_entities(rng, "http://a.example/e", na, na + na / 3);
        auto b = gen::random_entities(rng, "http://b.example/e", nb, nb + nb / 3);
        double dangling = 0.1 + 0.4 * std::uniform_real_distribution<double>(0, 1)(rng);
        auto gt = gen::random_ground_truth(rng, a, b, 20 + gen::pick(rng, 600), dangling);
        write_lines(dir / "left.ents", a.lines);
        write_lines(dir / "right.ents", b.lines);
        write_gt(dir / "gt.tsv", gt);
        Join2Spec s;
        s.left_entities = dir / "left.ents";
        s.right_entities = dir / "right.ents";
        s.ground_truth = dir / "gt.tsv";
        s.left_label = "left";
        s.right_label = "right";
        s.output = dir / "lr.links";
        auto rep = join2(s, exec_in(dir, 16 << 10));
        auto want = oracle::join2(a.lines, b.lines, gt, "left", "right", "lr");
        auto got = read_lines(s.output);
        std::vector<std::string> got_stripped, want_stripped;
        for (const auto& l : got) got_stripped.push_back(strip_id(l));
        for (const auto& l : want.lines) want_stripped.push_back(strip_id(l));
        const std::string tag = "instance " + std::to_string(i);
        c.expect(got_stripped == want_stripped, tag + ": lines differ after id stripping");
        c.expect(rep.pairs_dropped_left == want.dropped_left, tag + ": dropped_left");
        c.expect(rep.pairs_dropped_right == want.dropped_right, tag + ": dropped_right");
        lines_total += got.size();
        dropped += rep.pairs_dropped_left + rep.pairs_dropped_right;
        produced.push_back({s.output, FileMode::link2});
    }
    return c.done("50 instances, " + std::to_string(lines_total) + " lines, " + std::to_string(dropped) +
                  " dropped pairs");
}

// --- AC5 -------------------------------------------------------------------

// Count identity, slot order and id traceability of one 3-way output. The
// inputs are read into maps keyed by id, never joined against each other.
void check_join3_output(Check& c, const std::string& tag, const fs::path& first, const fs::path& second,
                        const fs::path& out, const std::vector<std::string>& slot_order) {
    auto fd = read_lines(first);
    auto yd = read_lines(second);
    auto got = read_lines(out);
    c.expect(got.size() == oracle::join3_count(fd, yd, "dbpedia"), tag + ": |join3| != sum m*n");
    std::unordered_map<std::string, oracle::Groups> by_id;
    for (const auto& l : fd) {
        auto g = oracle::split_link_line(l);
        by_id[g.id] = g;
    }
    for (const auto& l : yd) {
        auto g = oracle::split_link_line(l);
        by_id[g.id] = g;
    }
    std::set<std::string> ids;
    for (const auto& l : got) {
        auto g = oracle::split_link_line(l);
        c.expect(sentinel_labels(l) == slot_order, tag + ": slot order of " + g.id);
        c.expect(ids.insert(g.id).second, tag + ": repeated id " + g.id);
        auto comma = g.id.find(',');
        if (comma == std::string::npos) {
            c.expect(false, tag + ": id " + g.id + " is not a pair");
            continue;
        }
        auto ia = by_id.find(g.id.substr(0, comma));
        auto ib = by_id.find(g.id.substr(comma + 1));
        if (ia == by_id.end() || ib == by_id.end()) {
            c.expect(false, tag + ": id " + g.id + " does not resolve");
            continue;
        }
        const auto& A = ia->second;
        const auto& B = ib->second;
        c.expect(*g.record("dbpedia") == *A.record("dbpedia"), tag + ": shared record of " + g.id);
        c.expect(*B.record("dbpedia") == *A.record("dbpedia"), tag + ": " + g.id + " pairs different URIs");
        c.expect(*g.record("freebase") == *A.record("freebase"), tag + ": first-side record of " + g.id);
        c.expect(*g.record("yago") == *B.record("yago"), tag + ": second-side record of " + g.id);
    }
}

Outcome join3_identity(const fs::path& work, std::vector<Produced>& produced) {
    Check c;
    std::uint64_t lines_total = 0;
    for (int i = 0; i < 10; ++i) {
        gen::Rng rng(5000 + i);
        auto dir = work / ("ac5-" + std::to_string(i));
        fs::create_directories(dir);
        // a small shared universe so one DBpedia URI is hit many times
        auto f = gen::random_entities(rng, "http://fb.example/m.", 150, 200);
        auto d = gen::random_entities(rng, "http://db.example/r/", 30 + gen::pick(rng, 50), 100);
        auto y = gen::random_entities(rng, "http://yago.example/", 150, 200);
        write_lines(dir / "freebase.ents", f.lines);
        write_lines(dir / "dbpedia.ents", d.lines);
        write_lines(dir / "yago.ents", y.lines);
        auto run2 = [&](const std::string& left, const gen::EntitySet& l, const std::string& out) {
            write_gt(dir / "gt.tsv", gen::random_ground_truth(rng, l, d, 250, 0.2));
            Join2Spec s;
            s.left_entities = dir / (left + ".ents");
            s.right_entities = dir / "dbpedia.ents";
            s.ground_truth = dir / "gt.tsv";
            s.left_label = left;
            s.right_label = "dbpedia";
            s.output = dir / out;
            join2(s, exec_in(dir));
        };
        run2("freebase", f, "fd.links");
        run2("yago", y, "yd.links");

        const std::string tag = "instance " + std::to_string(i);
        Join3Spec s{dir / "fd.links", dir / "yd.links", "dbpedia", {"dbpedia", "freebase", "yago"}, dir / "o.links"};
        join3(s, exec_in(dir, 8 << 10));
        check_join3_output(c, tag, s.first, s.second, s.output, s.order);
        c.expect(read_lines(s.output) == oracle::join3(read_lines(s.first), read_lines(s.second), "dbpedia", s.order),
                 tag + ": differs from brute force");
        lines_total += read_lines(s.output).size();

        // no configured order: shared first, then first's other, then second's other
        Join3Spec dflt{dir / "fd.links", dir / "yd.links", "dbpedia", {}, dir / "dflt.links"};
        join3(dflt, exec_in(dir));
        check_join3_output(c, tag + " default order", dflt.first, dflt.second, dflt.output,
                           {"dbpedia", "freebase", "yago"});

        produced.push_back({dir / "fd.links", FileMode::link2});
        produced.push_back({dir / "yd.links", FileMode::link2});
        produced.push_back({s.output, FileMode::link3});
    }
    return c.done("10 instances, " + std::to_string(lines_total) + " 3-way lines");
}

// --- AC6 -------------------------------------------------------------------

Outcome self_containment(const fs::path& work, const std::vector<Produced>& produced) {
    Check c;
    gen::Rng rng(6000);
    std::uint64_t files = 0, lines = 0;
    auto scratch = work / "ac6";
    fs::create_directories(scratch);
    for (const auto& p : produced) {
        auto all = read_lines(p.path);
        ++files;
        lines += all.size();
        auto shuffled = all;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        write_lines(scratch / "copy", shuffled);
        auto v = validate_file(scratch / "copy", p.mode, 3);
        c.expect(v.ok() && v.lines == all.size(),
                 p.path.filename().string() + " shuffled: " +
                     (v.violations.empty() ? "line count" : v.violations.front().reason));
        for (double keep : {0.1, 0.5, 0.9}) {
            std::vector<std::string> subset;
            for (const auto& l : shuffled)
                if (gen::chance(rng, keep)) subset.push_back(l);
            write_lines(scratch / "copy", subset);
            auto s = validate_file(scratch / "copy", p.mode, 3);
            c.expect(s.ok(), p.path.filename().string() + " subset: " +
                                 (s.violations.empty() ? "" : s.violations.front().reason));
            for (const auto& l : subset) {
                try {
                    parse_line(l, p.mode);
                } catch (const Error& e) {
                    c.expect(false, std::string("subset line does not parse: ") + e.what());
                }
            }
        }
    }
    return c.done(std::to_string(files) + " files, " + std::to_string(lines) +
                  " lines, shuffled and 3 random subsets each");
}

// --- AC2 -------------------------------------------------------------------

Outcome literal_convention(const std::vector<Produced>& produced, const Check& literal_tokens) {
    Check c = literal_tokens;
    std::uint64_t lines = 0;
    for (const auto& p : produced) {
        auto v = validate_file(p.path, p.mode, 1);
        lines += v.lines;
        c.expect(v.ok(), p.path.filename().string() + ": " +
                             (v.violations.empty() ? "" : v.violations.front().reason));
    }
    return c.done(std::to_string(produced.size()) + " files, " + std::to_string(lines) +
                  " lines validated; compiled literals checked token by token");
}

// --- AC7 -------------------------------------------------------------------

Outcome pipeline_determinism(const fs::path& work, std::vector<Produced>& produced) {
    Check c;
    std::vector<std::map<std::string, std::uint64_t>> hashes;
    const std::vector<std::pair<std::string, FileMode>> outputs = {
        {"dbpedia.ents", FileMode::entity},
        {"freebase.ents", FileMode::entity},
        {"yago.ents", FileMode::entity},
        {"freebase-dbpedia.links", FileMode::link2},
        {"yago-dbpedia.links", FileMode::link2},
        {"dbpedia-freebase-yago.links", FileMode::link3},
        {"freebase-dbpedia.sample", FileMode::link2},
    };
    for (int run = 0; run < 2; ++run) {
        auto dir = work / ("ac7-" + std::to_string(run));
        fs::create_directories(dir);
        for (const auto& e : fs::directory_iterator(testutil::fixture_dir())) {
            if (e.is_regular_file()) fs::copy_file(e.path(), dir / e.path().filename());
        }
        auto cfg = load_pipeline_config(dir / "demo.cfg");
        cfg.exec.spill_dir = dir;
        run_pipeline(cfg);
        std::map<std::string, std::uint64_t> h;
        for (const auto& [name, mode] : outputs) {
            auto bytes = testutil::read_file(dir / "out" / name);
            c.expect(!bytes.empty(), name + " is empty");
            h[name] = testutil::content_hash(bytes);
            if (run == 0) produced.push_back({dir / "out" / name, mode});
        }
        hashes.push_back(std::move(h));
    }
    for (const auto& [name, mode] : outputs) {
        c.expect(hashes[0][name] == hashes[1][name], name + " hash differs between runs");
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu outputs, e.g. join3 hash %016llx", outputs.size(),
                  static_cast<unsigned long long>(hashes[0]["dbpedia-freebase-yago.links"]));
    return c.done(buf);
}

// --- AC8 -------------------------------------------------------------------

// Order-independent picture of a KB: (subject, predicate/object) hash pairs,
// distinct. Kept as hashes so 10^6 triples fit comfortably in memory.
using Fingerprint = std::vector<std::pair<std::uint64_t, std::uint64_t>>;

std::uint64_t h64(std::string_view s) { return std::hash<std::string_view>{}(s); }

std::uint64_t pair_hash(std::string_view predicate, bool literal, std::string_view object) {
    return h64(std::string(predicate) + (literal ? "\x01L\x01" : "\x01U\x01") + std::string(object));
}

void finish(Fingerprint& f) {
    std::sort(f.begin(), f.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());
}

// Writes an N-Triples KB with `entities` subjects and `triples` triples in an
// interleaved order, and returns its fingerprint.
Fingerprint write_scale_kb(const fs::path& path, const std::string& base, std::size_t triples,
                           std::size_t entities, std::uint64_t seed) {
    gen::Rng rng(seed);
    Fingerprint fp;
    fp.reserve(triples);
    std::ofstream out(path, std::ios::binary);
    std::string line;
    for (std::size_t t = 0; t < triples; ++t) {
        // stride walk: every subject gets triples/entities triples, spread out
        std::size_t s = (t * 7919) % entities;
        std::string subject = base + "e" + std::to_string(s);
        std::string predicate = "http://schema.example/p" + std::to_string(gen::pick(rng, 40));
        line = "<" + subject + "> <" + predicate + "> ";
        bool literal = gen::chance(rng, 0.5);
        std::string object;
        if (literal) {
            object = "value " + std::to_string(rng() % 100000);
            std::string text = object;
            if (gen::chance(rng, 0.05)) {
                object += "\ttabbed";
                text += "\\ttabbed";
            }
            line += "\"" + text + "\"";
            if (gen::chance(rng, 0.3)) line += "@en";
        } else {
            object = gen::chance(rng, 0.5) ? base + "e" + std::to_string(gen::pick(rng, entities))
                                           : "http://other.example/o" + std::to_string(gen::pick(rng, 5000));
            line += "<" + object + ">";
        }
        line += " .\n";
        out << line;
        fp.emplace_back(h64(subject), pair_hash(predicate, literal, object));
    }
    out.close();
    if (!out) throw std::runtime_error("cannot write " + path.string());
    finish(fp);
    return fp;
}

Fingerprint fingerprint_entities(const std::vector<std::string>& lines) {
    Fingerprint fp;
    for (const auto& l : lines) {
        auto [uri, pairs] = oracle::parse_entity_line(l);
        auto hs = h64(uri);
        for (const auto& [k, v] : pairs) fp.emplace_back(hs, pair_hash(k, v.is_literal(), v.lexical));
    }
    finish(fp);
    return fp;
}

std::unordered_map<std::string, std::string> lines_by_uri(const std::vector<std::string>& lines) {
    std::unordered_map<std::string, std::string> m;
    m.reserve(lines.size());
    for (const auto& l : lines) m.emplace(oracle::unescape(l.substr(0, l.find('\t'))), l);
    return m;
}

Outcome scale_smoke(const fs::path& work, Check& files_check) {
    Check c;
    auto dir = work / "ac8";
    fs::create_directories(dir);
    std::size_t workers = std::max(1u, std::min(4u, std::thread::hardware_concurrency()));
    ExecConfig cfg = exec_in(dir, kScaleBudget, 16, workers);

    auto fa = write_scale_kb(dir / "a.nt", "http://a.example/", kScaleTriples, kScaleEntities, 81);
    auto fb = write_scale_kb(dir / "b.nt", "http://b.example/", kScaleTriples, kScaleEntities, 82);
    auto fc = write_scale_kb(dir / "c.nt", "http://c.example/", kScaleTriples / 10, kScaleEntities / 10, 83);

    auto t0 = Clock::now();
    auto ra = compile_kb({"freebase", {dir / "a.nt"}, dir / "freebase.ents"}, cfg);
    auto rb = compile_kb({"dbpedia", {dir / "b.nt"}, dir / "dbpedia.ents"}, cfg);
    auto rc = compile_kb({"yago", {dir / "c.nt"}, dir / "yago.ents"}, cfg);

    // ground truth: mostly resolvable, some dangling, DBpedia URIs reused so
    // the 3-way join has multiplicities above one
    gen::Rng rng(88);
    std::vector<GroundTruthPair> gt_fd, gt_yd;
    for (std::size_t i = 0; i < kScaleEntities; ++i) {
        std::string l = "http://a.example/e" + std::to_string(gen::pick(rng, kScaleEntities));
        std::string r = "http://b.example/e" + std::to_string(gen::pick(rng, kScaleEntities / 2));
        if (gen::chance(rng, 0.2)) (gen::chance(rng, 0.5) ? l : r) = "http://missing.example/" + std::to_string(i);
        gt_fd.push_back({l, r});
    }
    for (std::size_t i = 0; i < kScaleEntities / 5; ++i) {
        gt_yd.push_back({"http://c.example/e" + std::to_string(gen::pick(rng, kScaleEntities / 10)),
                         "http://b.example/e" + std::to_string(gen::pick(rng, kScaleEntities / 2))});
    }
    write_gt(dir / "fd.tsv", gt_fd);
    write_gt(dir / "yd.tsv", gt_yd);
    auto spec = [&](const std::string& left, const std::string& gt, const std::string& out) {
        Join2Spec s;
        s.left_entities = dir / (left + ".ents");
        s.right_entities = dir / "dbpedia.ents";
        s.ground_truth = dir / gt;
        s.left_label = left;
        s.right_label = "dbpedia";
        s.output = dir / out;
        return s;
    };
    auto jfd = join2(spec("freebase", "fd.tsv", "fd.links"), cfg);
    auto jyd = join2(spec("yago", "yd.tsv", "yd.links"), cfg);
    Join3Spec s3{dir / "fd.links", dir / "yd.links", "dbpedia", {"dbpedia", "freebase", "yago"}, dir / "fdy.links"};
    auto j3 = join3(s3, cfg);
    double secs = seconds_since(t0);

    std::uint64_t spills = ra.job.sort.spill_runs + rb.job.sort.spill_runs + jfd.spill_runs;
    std::uint64_t peak = std::max(ra.job.sort.peak_buffer_bytes, rb.job.sort.peak_buffer_bytes);
    c.expect(spills >= 1, "no spill observed");
    c.expect(peak <= kScaleBudget, "sort buffer peaked at " + std::to_string(peak));
    c.expect(secs < kScaleSeconds, "took " + std::to_string(secs) + "s");

    // criterion 3 on the compiled files, by fingerprint
    auto a_lines = read_lines(dir / "freebase.ents");
    auto b_lines = read_lines(dir / "dbpedia.ents");
    c.expect(a_lines.size() == kScaleEntities && b_lines.size() == kScaleEntities, "entity count");
    c.expect(fingerprint_entities(a_lines) == fa, "freebase.ents differs from its triples");
    c.expect(fingerprint_entities(b_lines) == fb, "dbpedia.ents differs from its triples");
    c.expect(fingerprint_entities(read_lines(dir / "yago.ents")) == fc, "yago.ents differs from its triples");

    // criterion 4 with a map-based oracle (nested loops are too slow here)
    {
        auto am = lines_by_uri(a_lines);
        auto bm = lines_by_uri(b_lines);
        std::set<std::pair<std::string, std::string>> pairs;
        for (const auto& p : gt_fd) pairs.insert({p.left, p.right});
        std::vector<std::string> want;
        std::uint64_t dl = 0, dr = 0;
        for (const auto& [l, r] : pairs) {
            auto ia = am.find(l);
            auto ib = bm.find(r);
            if (ia == am.end()) ++dl;
            else if (ib == bm.end()) ++dr;
            else want.push_back("\tfreebase-instance\t" + ia->second + "\tdbpedia-instance\t" + ib->second);
        }
        auto got = read_lines(dir / "fd.links");
        std::vector<std::string> stripped;
        stripped.reserve(got.size());
        for (const auto& l : got) stripped.push_back(strip_id(l));
        c.expect(stripped == want, "fd.links differs from the map join");
        c.expect(jfd.pairs_dropped_left == dl && jfd.pairs_dropped_right == dr, "fd drop counts");
    }

    // criterion 5 on the 3-way file
    check_join3_output(c, "scale", s3.first, s3.second, s3.output, s3.order);

    // criterion 6 (and the validator side of 2) on every output
    std::vector<Produced> outs = {{dir / "freebase.ents", FileMode::entity},
                                  {dir / "dbpedia.ents", FileMode::entity},
                                  {dir / "yago.ents", FileMode::entity},
                                  {dir / "fd.links", FileMode::link2},
                                  {dir / "yd.links", FileMode::link2},
                                  {s3.output, FileMode::link3}};
    auto six = self_containment(dir, outs);
    files_check.expect(six.ok, "scale outputs: " + six.detail);
    c.expect(six.ok, "self-containment: " + six.detail);

    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "2x%zu triples / %zu entities, budget 64MiB, %llu spills, peak %.1fMiB, %llu fd + %llu 3-way lines, "
                  "%.1fs (limit %.0fs)",
                  kScaleTriples, kScaleEntities, static_cast<unsigned long long>(spills), peak / 1048576.0,
                  static_cast<unsigned long long>(jfd.lines_emitted), static_cast<unsigned long long>(j3.lines_emitted),
                  secs, kScaleSeconds);
    fs::remove_all(dir);
    return c.done(buf);
}

// --- AC9 -------------------------------------------------------------------

Outcome sampling_reference(const fs::path& work, std::vector<Produced>& produced) {
    Check c;
    auto dir = work / "ac9";
    fs::create_directories(dir);
    gen::Rng rng(9000);
    auto fx = gen::random_link_file(rng, {"freebase", "dbpedia"}, kSamplePopulation,
                                    {"http://t.example/A", "http://t.example/B"});
    write_lines(dir / "fd.links", fx.lines);
    for (std::uint64_t seed : {42ull, 7ull}) {
        auto out = dir / ("sample-" + std::to_string(seed));
        auto written = sample_lines(dir / "fd.links", {kSampleN, seed}, out);
        auto got = read_lines(out);
        c.expect(written == kSampleN && got.size() == kSampleN, "wrote " + std::to_string(got.size()) + " lines");
        std::vector<std::string> want;
        for (auto i : oracle::reservoir(fx.lines.size(), kSampleN, seed)) want.push_back(fx.lines[i]);
        c.expect(got == want, "seed " + std::to_string(seed) + " differs from the reservoir reference");
        sample_lines(dir / "fd.links", {kSampleN, seed}, dir / "again");
        c.expect(testutil::read_file(dir / "again") == testutil::read_file(out),
                 "seed " + std::to_string(seed) + " not deterministic");
        produced.push_back({out, FileMode::link2});
    }
    c.expect(testutil::read_file(dir / "sample-42") != testutil::read_file(dir / "sample-7"),
             "different seeds gave the same sample");
    return c.done(std::to_string(kSampleN) + " of " + std::to_string(kSamplePopulation) +
                  " lines, seeds 42 and 7, matches reference and repeats");
}

// --- AC10 ------------------------------------------------------------------

bool record_text_has_type(const std::string& text, const std::string& type) {
    auto [uri, pairs] = oracle::parse_entity_line(text);
    for (const auto& [k, v] : pairs)
        if (k == kRdfType && !v.is_literal() && v.lexical == type) return true;
    return false;
}

Outcome filter_brute_force(const fs::path& work, std::vector<Produced>& produced) {
    Check c;
    const std::vector<std::string> types = {"http://t.example/Person", "http://t.example/City",
                                            "http://t.example/Film", "http://t.example/Band"};
    struct Case {
        FileMode mode;
        std::vector<std::string> labels;
    };
    const std::vector<Case> cases = {{FileMode::entity, {"kb"}},
                                     {FileMode::link2, {"freebase", "dbpedia"}},
                                     {FileMode::link3, {"dbpedia", "freebase", "yago"}}};
    auto dir = work / "ac10";
    fs::create_directories(dir);
    gen::Rng rng(10000);
    std::uint64_t runs = 0;
    for (const auto& cs : cases) {
        auto fx = gen::random_link_file(rng, cs.labels, 1000, types);
        auto in = dir / ("in-" + std::string(to_string(cs.mode)));
        write_lines(in, fx.lines);
        // full parse of every line by the test-side reader
        std::vector<std::vector<std::string>> records;
        for (const auto& l : fx.lines) {
            std::vector<std::string> r;
            if (cs.mode == FileMode::entity) r.push_back(l);
            else
                for (const auto& g : oracle::split_link_line(l).groups) r.push_back(g.second);
            records.push_back(std::move(r));
        }
        std::vector<Side> sides = {Side::first, Side::any, Side::all};
        if (cs.mode != FileMode::entity) sides.insert(sides.begin() + 1, Side::second);
        for (Side side : sides) {
            for (const auto& type : types) {
                auto out = dir / "out";
                filter_by_type(in, cs.mode, {type, side}, out);
                std::vector<std::string> want;
                for (std::size_t i = 0; i < fx.lines.size(); ++i) {
                    const auto& r = records[i];
                    auto has = [&](const std::string& t) { return record_text_has_type(t, type); };
                    bool keep = false;
                    if (side == Side::first) keep = has(r[0]);
                    else if (side == Side::second) keep = has(r[1]);
                    else if (side == Side::any) keep = std::any_of(r.begin(), r.end(), has);
                    else keep = std::all_of(r.begin(), r.end(), has);
                    if (keep) want.push_back(fx.lines[i]);
                }
                c.expect(read_lines(out) == want, std::string(to_string(cs.mode)) + " side " +
                                                      std::string(to_string(side)) + " type " + type);
                ++runs;
            }
        }
        produced.push_back({in, cs.mode});
    }
    return c.done(std::to_string(runs) + " filter runs on 1000-line files, entity/link2/link3");
}

} // namespace

int main() {
    testutil::TempDir work;
    std::vector<Produced> produced;
    Check literal_tokens;
    std::map<int, std::pair<std::string, Outcome>> results;

    auto run = [&](int n, const std::string& name, const std::function<Outcome()>& fn) {
        std::cerr << "running AC" << n << " (" << name << ")\n";
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        results[n] = {name, o};
    };

    run(1, "codec round trip", codec_round_trip);
    run(3, "compile equals group-by oracle",
        [&] { return compile_equals_group_by(work.path(), produced, literal_tokens); });
    run(4, "join2 equals nested-loop oracle", [&] { return join2_equals_nested_loop(work.path(), produced); });
    run(5, "3-way count identity, slot order, traceability", [&] { return join3_identity(work.path(), produced); });
    run(7, "pipeline determinism", [&] { return pipeline_determinism(work.path(), produced); });
    run(9, "reservoir sampling reference", [&] { return sampling_reference(work.path(), produced); });
    run(10, "type filter equals brute force", [&] { return filter_brute_force(work.path(), produced); });
    Check scale_files;
    run(8, "memory-bounded scale smoke", [&] { return scale_smoke(work.path(), scale_files); });
    run(2, "literal convention", [&] {
        auto o = literal_convention(produced, literal_tokens);
        if (!scale_files.ok()) o = {false, o.detail + " | scale outputs failed validation"};
        return o;
    });
    run(6, "self-containment", [&] { return self_containment(work.path(), produced); });

    bool all = true;
    for (const auto& [n, r] : results) {
        all = all && r.second.ok;
        std::cout << "AC" << n << ' ' << (r.second.ok ? "PASS" : "FAIL") << ' ' << r.first << ": " << r.second.detail
                  << '\n';
    }
    std::cout << (all ? "ALL PASS" : "SOME FAILED") << '\n';
    return all ? 0 : 1;
}
