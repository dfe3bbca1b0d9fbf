#include "flatlink/config.hpp"

#include "flatlink/error.hpp"
#include "flatlink/flat_record.hpp"
#include "flatlink/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <set>

namespace flatlink {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ConfigError("invalid " + std::string(what) + " '" + std::string(text) + "'");
    }
    return v;
}

bool parse_bool(std::string_view text, std::string_view what) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("invalid " + std::string(what) + " '" + std::string(text) + "'");
}

} // namespace

KvConfig KvConfig::parse(std::string_view text, std::string origin) {
    KvConfig cfg;
    cfg.origin_ = std::move(origin);
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        auto eq = line.find('=');
        auto where = cfg.origin_ + ":" + std::to_string(line_no);
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (!cfg.entries_.emplace(std::string(key), std::string(value)).second) {
            throw ConfigError(where + ": key '" + std::string(key) + "' set twice");
        }
    }
    return cfg;
}

KvConfig KvConfig::load(const fs::path& path) {
    LineReader reader(path);
    std::string text, line;
    while (reader.next(line)) {
        text += line;
        text.push_back('\n');
    }
    return parse(text, path.string());
}

std::optional<std::string> KvConfig::get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::uint64_t parse_byte_size(std::string_view text) {
    text = trim(text);
    std::size_t digits = 0;
    while (digits < text.size() && text[digits] >= '0' && text[digits] <= '9') ++digits;
    std::uint64_t base = parse_u64(text.substr(0, digits), "byte size");
    std::string_view suffix = trim(text.substr(digits));
    std::uint64_t mult = 1;
    if (suffix.empty() || suffix == "B") mult = 1;
    else if (suffix == "K" || suffix == "KiB") mult = 1ull << 10;
    else if (suffix == "M" || suffix == "MiB") mult = 1ull << 20;
    else if (suffix == "G" || suffix == "GiB") mult = 1ull << 30;
    else throw ConfigError("invalid byte size suffix '" + std::string(suffix) + "'");
    return base * mult;
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    while (true) {
        auto comma = text.find(',');
        auto item = trim(text.substr(0, comma));
        if (!item.empty()) out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        text = text.substr(comma + 1);
    }
    return out;
}

void apply_env_overrides(ExecConfig& cfg) {
    if (const char* dir = std::getenv("FLATLINK_SPILL_DIR"); dir != nullptr && *dir != '\0') {
        cfg.spill_dir = dir;
    }
    if (const char* par = std::getenv("FLATLINK_PARALLELISM"); par != nullptr && *par != '\0') {
        cfg.parallelism = parse_u64(par, "FLATLINK_PARALLELISM");
    }
}

// ---------------------------------------------------------------------------

const KbSpec& PipelineConfig::kb(std::string_view label) const {
    for (const auto& k : kbs) {
        if (k.label == label) return k;
    }
    throw ConfigError("unknown knowledge base '" + std::string(label) + "'");
}

const Join2Entry& PipelineConfig::join(std::string_view name) const {
    for (const auto& j : joins) {
        if (j.name == name) return j;
    }
    throw ConfigError("unknown join '" + std::string(name) + "'");
}

void PipelineConfig::validate() const {
    exec.validate();
    if (kbs.empty()) throw ConfigError("pipeline defines no knowledge bases");
    std::set<std::string> labels;
    std::vector<fs::path> outputs;
    std::set<fs::path> inputs;
    for (const auto& k : kbs) {
        k.validate();
        if (!labels.insert(k.label).second) throw ConfigError("duplicate label '" + k.label + "'");
        outputs.push_back(k.output_path);
        inputs.insert(k.input_paths.begin(), k.input_paths.end());
    }
    std::set<std::string> names;
    for (const auto& j : joins) {
        if (!is_valid_kb_label(j.name)) throw ConfigError("invalid join name '" + j.name + "'");
        if (!names.insert(j.name).second) throw ConfigError("duplicate join '" + j.name + "'");
        kb(j.left);
        kb(j.right);
        if (j.left == j.right) throw ConfigError("join '" + j.name + "' joins a label with itself");
        if (j.ground_truth.empty()) throw ConfigError("join '" + j.name + "' has no ground truth");
        if (j.output.empty()) throw ConfigError("join '" + j.name + "' has no output");
        inputs.insert(j.ground_truth);
        outputs.push_back(j.output);
    }
    if (join3) {
        const auto& a = join(join3->first);
        const auto& b = join(join3->second);
        if (a.name == b.name) throw ConfigError("join3 needs two different joins");
        auto in_join = [](const Join2Entry& j, const std::string& l) { return j.left == l || j.right == l; };
        if (!in_join(a, join3->shared) || !in_join(b, join3->shared)) {
            throw ConfigError("join3 shared label '" + join3->shared + "' is not in both joins");
        }
        if (join3->output.empty()) throw ConfigError("join3 has no output");
        Join3Spec{a.output, b.output, join3->shared, join3->order, join3->output}.validate();
        outputs.push_back(join3->output);
    }
    if (sample) {
        if (sample->source != "join3") join(sample->source);
        else if (!join3) throw ConfigError("sample source 'join3' but no join3 is configured");
        if (sample->output.empty()) throw ConfigError("sample has no output");
        outputs.push_back(sample->output);
    }
    std::set<fs::path> seen;
    for (const auto& o : outputs) {
        if (!seen.insert(o).second) throw ConfigError("output path " + o.string() + " used twice");
        if (inputs.contains(o)) throw ConfigError("output path " + o.string() + " is also an input");
    }
}

KvReport PipelineConfig::effective() const {
    KvReport kv;
    kv.add("exec.partitions", exec.partitions)
        .add("exec.memory_budget", exec.memory_budget_bytes)
        .add("exec.spill_dir", exec.spill_dir.string())
        .add("exec.parallelism", exec.parallelism)
        .add("exec.merge_fan_in", exec.merge_fan_in)
        .add("seed", seed)
        .add("validate", validate_outputs ? "true" : "false");
    for (const auto& k : kbs) {
        std::string inputs;
        for (const auto& p : k.input_paths) {
            if (!inputs.empty()) inputs.push_back(',');
            inputs += p.string();
        }
        kv.add("kb." + k.label + ".inputs", inputs).add("kb." + k.label + ".output", k.output_path.string());
    }
    for (const auto& j : joins) {
        std::string p = "join2." + j.name + ".";
        kv.add(p + "left", j.left)
            .add(p + "right", j.right)
            .add(p + "gt", j.ground_truth.string())
            .add(p + "gt_format", std::string(to_string(j.gt_format)))
            .add(p + "sameas_uri", j.sameas_uri)
            .add(p + "id_prefix", j.id_prefix.empty() ? default_link_prefix(j.left, j.right) : j.id_prefix)
            .add(p + "output", j.output.string());
    }
    if (join3) {
        std::string order;
        for (const auto& l : join3->order) {
            if (!order.empty()) order.push_back(',');
            order += l;
        }
        kv.add("join3.first", join3->first)
            .add("join3.second", join3->second)
            .add("join3.shared", join3->shared)
            .add("join3.order", order)
            .add("join3.output", join3->output.string());
    }
    if (sample) {
        kv.add("sample.source", sample->source).add("sample.n", sample->n).add("sample.output", sample->output.string());
    }
    return kv;
}

PipelineConfig pipeline_config_from(const KvConfig& kv, const fs::path& base_dir) {
    auto resolve = [&](std::string_view p) -> fs::path {
        fs::path path{std::string(p)};
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    PipelineConfig cfg;
    std::map<std::string, KbSpec> kbs;
    std::map<std::string, Join2Entry> joins;

    for (const auto& [key, value] : kv.entries()) {
        auto bad_key = [&] { return ConfigError(kv.origin() + ": unknown key '" + key + "'"); };
        if (key == "exec.partitions") cfg.exec.partitions = parse_u64(value, key);
        else if (key == "exec.memory_budget") cfg.exec.memory_budget_bytes = parse_byte_size(value);
        else if (key == "exec.spill_dir") cfg.exec.spill_dir = resolve(value);
        else if (key == "exec.parallelism") cfg.exec.parallelism = parse_u64(value, key);
        else if (key == "exec.merge_fan_in") cfg.exec.merge_fan_in = parse_u64(value, key);
        else if (key == "seed") cfg.seed = parse_u64(value, key);
        else if (key == "validate") cfg.validate_outputs = parse_bool(value, key);
        else if (key.starts_with("kb.")) {
            auto dot = key.rfind('.');
            if (dot <= 3) throw bad_key();
            std::string label = key.substr(3, dot - 3);
            std::string field = key.substr(dot + 1);
            auto& spec = kbs[label];
            spec.label = label;
            if (field == "inputs") {
                for (const auto& p : split_list(value)) spec.input_paths.push_back(resolve(p));
            } else if (field == "output") {
                spec.output_path = resolve(value);
            } else {
                throw bad_key();
            }
        } else if (key.starts_with("join2.")) {
            auto dot = key.rfind('.');
            if (dot <= 6) throw bad_key();
            std::string name = key.substr(6, dot - 6);
            std::string field = key.substr(dot + 1);
            auto& j = joins[name];
            j.name = name;
            if (field == "left") j.left = value;
            else if (field == "right") j.right = value;
            else if (field == "gt") j.ground_truth = resolve(value);
            else if (field == "gt_format") j.gt_format = parse_ground_truth_format(value);
            else if (field == "sameas_uri") j.sameas_uri = value;
            else if (field == "id_prefix") j.id_prefix = value;
            else if (field == "output") j.output = resolve(value);
            else throw bad_key();
        } else if (key.starts_with("join3.")) {
            if (!cfg.join3) cfg.join3.emplace();
            std::string field = key.substr(6);
            if (field == "first") cfg.join3->first = value;
            else if (field == "second") cfg.join3->second = value;
            else if (field == "shared") cfg.join3->shared = value;
            else if (field == "order") cfg.join3->order = split_list(value);
            else if (field == "output") cfg.join3->output = resolve(value);
            else throw bad_key();
        } else if (key.starts_with("sample.")) {
            if (!cfg.sample) cfg.sample.emplace();
            std::string field = key.substr(7);
            if (field == "source") cfg.sample->source = value;
            else if (field == "n") cfg.sample->n = parse_u64(value, key);
            else if (field == "output") cfg.sample->output = resolve(value);
            else throw bad_key();
        } else {
            throw bad_key();
        }
    }
    for (auto& [label, spec] : kbs) cfg.kbs.push_back(std::move(spec));
    for (auto& [name, j] : joins) cfg.joins.push_back(std::move(j));
    cfg.validate();
    return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    auto kv = KvConfig::load(path);
    return pipeline_config_from(kv, path.parent_path());
}

} // namespace flatlink
