#include "flatlink/cli.hpp"

#include "flatlink/compile.hpp"
#include "flatlink/config.hpp"
#include "flatlink/error.hpp"
#include "flatlink/link_join.hpp"
#include "flatlink/pipeline.hpp"
#include "flatlink/tools.hpp"

#include <CLI11.hpp>

#include <optional>

namespace flatlink::cli {

namespace {

struct ExecFlags {
    std::optional<std::size_t> partitions;
    std::optional<std::string> memory_budget;
    std::optional<std::string> spill_dir;
    std::optional<std::size_t> parallelism;

    void apply(ExecConfig& cfg) const {
        apply_env_overrides(cfg);
        if (partitions) cfg.partitions = *partitions;
        if (memory_budget) cfg.memory_budget_bytes = parse_byte_size(*memory_budget);
        if (spill_dir) cfg.spill_dir = *spill_dir;
        if (parallelism) cfg.parallelism = *parallelism;
    }
};

KvReport exec_kv(const ExecConfig& cfg) {
    KvReport kv;
    kv.add("exec.partitions", cfg.partitions)
        .add("exec.memory_budget", cfg.memory_budget_bytes)
        .add("exec.spill_dir", cfg.spill_dir.string())
        .add("exec.parallelism", cfg.parallelism);
    return kv;
}

std::string one_line_message(std::string_view text) {
    std::string out;
    for (char c : text) out.push_back(c == '\n' || c == '\r' ? ' ' : c);
    return out;
}

void print_config(std::ostream& err, const KvReport& kv) { err << "config: " << kv.one_line() << '\n'; }

void print_report(std::ostream& out, const KvReport& kv, bool machine) {
    if (machine) {
        out << kv.multi_line();
    } else {
        out << kv.one_line() << '\n';
    }
}

std::string join_list(const std::vector<std::string>& items) {
    std::string s;
    for (const auto& i : items) {
        if (!s.empty()) s.push_back(',');
        s += i;
    }
    return s;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"flatlink: compile RDF dumps into self-contained entity and linkage files"};
    app.name(args.empty() ? "flatlink" : args.front());
    app.require_subcommand(1);
    app.fallthrough();

    ExecFlags exec_flags;
    bool machine = false;
    app.add_option("--partitions", exec_flags.partitions, "Shuffle partitions");
    app.add_option("--memory-budget", exec_flags.memory_budget, "Sort buffer budget (e.g. 256MiB)");
    app.add_option("--spill-dir", exec_flags.spill_dir, "Directory for spill files");
    app.add_option("--parallelism", exec_flags.parallelism, "Reduce workers");
    app.add_flag("--kv", machine, "Print reports as key=value lines");

    // compile
    auto* compile_cmd = app.add_subcommand("compile", "Compile N-Triples files into an entity file");
    KbSpec kb;
    std::vector<std::string> compile_inputs;
    std::string compile_out, compile_report;
    compile_cmd->add_option("--label", kb.label, "Knowledge base label")->required();
    compile_cmd->add_option("--in", compile_inputs, "Input files (comma-separated or repeated)")
        ->required()
        ->delimiter(',');
    compile_cmd->add_option("--out", compile_out, "Entity file")->required();
    compile_cmd->add_option("--report", compile_report, "Also write the report as key=value");

    // join2
    auto* join2_cmd = app.add_subcommand("join2", "Join two entity files with ground-truth pairs");
    std::string j2_left, j2_right, j2_gt, j2_format = "tsv-pairs", j2_out, j2_prefix;
    std::string j2_sameas = std::string(kOwlSameAs);
    std::vector<std::string> j2_labels;
    join2_cmd->add_option("--left", j2_left, "Left entity file")->required();
    join2_cmd->add_option("--right", j2_right, "Right entity file")->required();
    join2_cmd->add_option("--gt", j2_gt, "Ground truth file")->required();
    join2_cmd->add_option("--gt-format", j2_format, "tsv-pairs or ntriples-sameas");
    join2_cmd->add_option("--sameas-uri", j2_sameas, "Predicate of ground-truth triples");
    join2_cmd->add_option("--labels", j2_labels, "Left and right labels")->required()->delimiter(',')->expected(2);
    join2_cmd->add_option("--id-prefix", j2_prefix, "Link id prefix (default: label initials)");
    join2_cmd->add_option("--out", j2_out, "Linkage file")->required();

    // join3
    auto* join3_cmd = app.add_subcommand("join3", "Join two 2-way linkage files on a shared knowledge base");
    std::string j3_first, j3_second, j3_shared, j3_out;
    std::vector<std::string> j3_order;
    join3_cmd->add_option("--first", j3_first, "First 2-way file (ids first)")->required();
    join3_cmd->add_option("--second", j3_second, "Second 2-way file")->required();
    join3_cmd->add_option("--shared", j3_shared, "Label of the shared knowledge base")->required();
    join3_cmd->add_option("--order", j3_order, "Output slot order, 3 labels")->delimiter(',');
    join3_cmd->add_option("--out", j3_out, "3-way linkage file")->required();

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "Reservoir-sample lines");
    std::string sample_in, sample_out;
    SampleSpec sample_spec{0, 42};
    sample_cmd->add_option("--in", sample_in, "Input file")->required();
    sample_cmd->add_option("--n", sample_spec.n, "Lines to keep")->required();
    sample_cmd->add_option("--seed", sample_spec.seed, "Generator seed (default 42)");
    sample_cmd->add_option("--out", sample_out, "Output file")->required();

    // filter-type
    auto* filter_cmd = app.add_subcommand("filter-type", "Keep lines whose records have an rdf:type");
    std::string filter_in, filter_out, filter_mode = "link2", filter_side = "any";
    TypeFilterSpec filter_spec;
    filter_cmd->add_option("--in", filter_in, "Input file")->required();
    filter_cmd->add_option("--mode", filter_mode, "entity, link2 or link3");
    filter_cmd->add_option("--type", filter_spec.type_uri, "Type URI")->required();
    filter_cmd->add_option("--side", filter_side, "first, second, third, any or all");
    filter_cmd->add_option("--type-predicate", filter_spec.type_predicate, "Type predicate URI");
    filter_cmd->add_option("--out", filter_out, "Output file")->required();

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Line, byte, slot and type statistics");
    std::string stats_in, stats_mode = "link2";
    StatsOptions stats_opts;
    stats_cmd->add_option("--in", stats_in, "Input file")->required();
    stats_cmd->add_option("--mode", stats_mode, "entity, link2 or link3");
    stats_cmd->add_option("--top-k", stats_opts.top_k, "Type histogram size");
    stats_cmd->add_option("--type-predicate", stats_opts.type_predicate, "Type predicate URI");

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "Check a file line by line");
    std::string validate_in, validate_mode = "link2";
    std::size_t max_violations = 1000;
    validate_cmd->add_option("--in", validate_in, "Input file")->required();
    validate_cmd->add_option("--mode", validate_mode, "entity, link2 or link3");
    validate_cmd->add_option("--max-violations", max_violations, "Violations to list");

    // pipeline
    auto* pipeline_cmd = app.add_subcommand("pipeline", "Run compile, join2, join3 and sample from a config");
    std::string config_path;
    pipeline_cmd->add_option("--config", config_path, "key=value pipeline config")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        if (!reversed.empty()) reversed.pop_back();
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: code=usage message=" << one_line_message(e.what()) << '\n';
        return kExitError;
    }

    try {
        ExecConfig exec;
        if (*compile_cmd) {
            exec_flags.apply(exec);
            kb.input_paths.assign(compile_inputs.begin(), compile_inputs.end());
            kb.output_path = compile_out;
            auto kv = exec_kv(exec);
            kv.add("label", kb.label).add("inputs", join_list(compile_inputs)).add("output", compile_out);
            print_config(err, kv);
            auto report = compile_kb(kb, exec);
            print_report(out, report.to_kv(), machine);
            for (const auto& issue : report.parse.first_errors) {
                err << "skipped line " << issue.line << ": " << issue.reason << '\n';
            }
            if (!compile_report.empty()) report.to_kv().write_file(compile_report);
        } else if (*join2_cmd) {
            exec_flags.apply(exec);
            Join2Spec spec;
            spec.left_entities = j2_left;
            spec.right_entities = j2_right;
            spec.ground_truth = j2_gt;
            spec.gt_options.format = parse_ground_truth_format(j2_format);
            spec.gt_options.sameas_uri = j2_sameas;
            spec.left_label = j2_labels.at(0);
            spec.right_label = j2_labels.at(1);
            spec.id_prefix = j2_prefix;
            spec.output = j2_out;
            auto kv = exec_kv(exec);
            kv.add("left", j2_left).add("right", j2_right).add("gt", j2_gt).add("gt_format", j2_format)
                .add("labels", join_list(j2_labels))
                .add("id_prefix", j2_prefix.empty() ? default_link_prefix(spec.left_label, spec.right_label) : j2_prefix)
                .add("output", j2_out);
            print_config(err, kv);
            auto report = join2(spec, exec);
            print_report(out, report.to_kv(), machine);
            for (const auto& issue : report.ground_truth.first_errors) {
                err << "skipped ground truth line " << issue.line << ": " << issue.reason << '\n';
            }
        } else if (*join3_cmd) {
            exec_flags.apply(exec);
            Join3Spec spec{j3_first, j3_second, j3_shared, j3_order, j3_out};
            auto kv = exec_kv(exec);
            kv.add("first", j3_first).add("second", j3_second).add("shared", j3_shared)
                .add("order", join_list(j3_order)).add("output", j3_out);
            print_config(err, kv);
            print_report(out, join3(spec, exec).to_kv(), machine);
        } else if (*sample_cmd) {
            KvReport kv;
            kv.add("in", sample_in).add("n", sample_spec.n).add("seed", sample_spec.seed).add("out", sample_out);
            print_config(err, kv);
            auto written = sample_lines(sample_in, sample_spec, sample_out);
            KvReport r;
            r.add("stage", "sample").add("lines_written", written);
            print_report(out, r, machine);
        } else if (*filter_cmd) {
            auto mode = parse_file_mode(filter_mode);
            filter_spec.side = parse_side(filter_side);
            KvReport kv;
            kv.add("in", filter_in).add("mode", filter_mode).add("type", filter_spec.type_uri)
                .add("side", filter_side).add("type_predicate", filter_spec.type_predicate).add("out", filter_out);
            print_config(err, kv);
            auto report = filter_by_type(filter_in, mode, filter_spec, filter_out);
            print_report(out, report.to_kv(), machine);
            for (const auto& issue : report.first_errors) {
                err << "unparseable line " << issue.line << ": " << issue.reason << '\n';
            }
        } else if (*stats_cmd) {
            stats_opts.mode = parse_file_mode(stats_mode);
            KvReport kv;
            kv.add("in", stats_in).add("mode", stats_mode).add("top_k", stats_opts.top_k)
                .add("type_predicate", stats_opts.type_predicate);
            print_config(err, kv);
            auto report = compute_stats(stats_in, stats_opts);
            if (machine) {
                out << report.to_kv().multi_line();
            } else {
                for (const auto& [k, v] : report.to_kv().fields()) out << k << ": " << v << '\n';
            }
        } else if (*validate_cmd) {
            auto mode = parse_file_mode(validate_mode);
            KvReport kv;
            kv.add("in", validate_in).add("mode", validate_mode).add("max_violations", max_violations);
            print_config(err, kv);
            auto report = validate_file(validate_in, mode, max_violations);
            for (const auto& v : report.violations) {
                out << "violation line=" << v.line << " reason=" << one_line_message(v.reason) << '\n';
            }
            print_report(out, report.to_kv(), machine);
            return report.ok() ? kExitOk : kExitViolations;
        } else if (*pipeline_cmd) {
            auto cfg = load_pipeline_config(config_path);
            exec_flags.apply(cfg.exec);
            print_config(err, cfg.effective());
            run_pipeline(cfg, [&](const KvReport& kv) { print_report(out, kv, machine); });
        }
    } catch (const Error& e) {
        err << "error: code=" << to_string(e.code()) << " message=" << one_line_message(e.what()) << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: code=internal message=" << one_line_message(e.what()) << '\n';
        return kExitError;
    }
    return kExitOk;
}

} // namespace flatlink::cli
