#include "flatlink/pipeline.hpp"

#include "flatlink/error.hpp"
#include "flatlink/tools.hpp"

namespace flatlink {

PipelineReport run_pipeline(const PipelineConfig& cfg, const std::function<void(const KvReport&)>& progress) {
    cfg.validate();
    PipelineReport report;
    auto record = [&](KvReport kv) {
        if (progress) progress(kv);
        report.stages.push_back(std::move(kv));
    };
    std::vector<std::pair<std::filesystem::path, FileMode>> produced;

    for (const auto& kb : cfg.kbs) {
        record(compile_kb(kb, cfg.exec).to_kv());
        produced.emplace_back(kb.output_path, FileMode::entity);
    }
    for (const auto& j : cfg.joins) {
        Join2Spec spec;
        spec.left_entities = cfg.kb(j.left).output_path;
        spec.right_entities = cfg.kb(j.right).output_path;
        spec.ground_truth = j.ground_truth;
        spec.gt_options.format = j.gt_format;
        spec.gt_options.sameas_uri = j.sameas_uri;
        spec.left_label = j.left;
        spec.right_label = j.right;
        spec.id_prefix = j.id_prefix;
        spec.output = j.output;
        auto kv = join2(spec, cfg.exec).to_kv();
        kv.add("name", j.name);
        record(std::move(kv));
        produced.emplace_back(j.output, FileMode::link2);
    }
    if (cfg.join3) {
        Join3Spec spec{cfg.join(cfg.join3->first).output, cfg.join(cfg.join3->second).output,
                       cfg.join3->shared, cfg.join3->order, cfg.join3->output};
        record(join3(spec, cfg.exec).to_kv());
        produced.emplace_back(cfg.join3->output, FileMode::link3);
    }
    if (cfg.sample) {
        bool from_join3 = cfg.sample->source == "join3";
        auto source = from_join3 ? cfg.join3->output : cfg.join(cfg.sample->source).output;
        auto written = sample_lines(source, {cfg.sample->n, cfg.seed}, cfg.sample->output);
        KvReport kv;
        kv.add("stage", "sample").add("source", cfg.sample->source).add("lines_written", written);
        record(std::move(kv));
        produced.emplace_back(cfg.sample->output, from_join3 ? FileMode::link3 : FileMode::link2);
    }
    if (cfg.validate_outputs) {
        for (const auto& [path, mode] : produced) {
            auto v = validate_file(path, mode);
            auto kv = v.to_kv();
            kv.add("file", path.string());
            record(std::move(kv));
            if (!v.ok()) {
                throw FormatError(path.string() + ": " + std::to_string(v.violation_count)
                                  + " violations, first at line " + std::to_string(v.violations.front().line)
                                  + ": " + v.violations.front().reason);
            }
        }
    }
    return report;
}

} // namespace flatlink
