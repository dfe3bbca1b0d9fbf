#pragma once

#include "flatlink/compile.hpp"
#include "flatlink/exec.hpp"
#include "flatlink/link_join.hpp"
#include "flatlink/report.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flatlink {

/// Flat `key = value` text. Blank lines and lines starting with `#` are
/// ignored; whitespace around keys and values is trimmed; a repeated key is
/// an error.
class KvConfig {
public:
    static KvConfig parse(std::string_view text, std::string origin = "<config>");
    static KvConfig load(const std::filesystem::path& path);

    std::optional<std::string> get(const std::string& key) const;
    const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
    const std::string& origin() const noexcept { return origin_; }

private:
    std::map<std::string, std::string> entries_;
    std::string origin_;
};

/// Accepts plain bytes or a K/KiB/M/MiB/G/GiB suffix (all powers of 1024).
std::uint64_t parse_byte_size(std::string_view text);

/// Comma-separated list, entries trimmed, empty entries dropped.
std::vector<std::string> split_list(std::string_view text);

/// FLATLINK_SPILL_DIR and FLATLINK_PARALLELISM, when set.
void apply_env_overrides(ExecConfig& cfg);

struct Join2Entry {
    std::string name;
    std::string left;  // KB label
    std::string right; // KB label
    std::filesystem::path ground_truth;
    GroundTruthFormat gt_format = GroundTruthFormat::tsv_pairs;
    std::string sameas_uri = std::string(kOwlSameAs);
    std::string id_prefix;
    std::filesystem::path output;
};

struct Join3Entry {
    std::string first;  // join2 name
    std::string second; // join2 name
    std::string shared; // KB label
    std::vector<std::string> order;
    std::filesystem::path output;
};

struct SampleEntry {
    std::string source; // join2 name or "join3"
    std::uint64_t n = 0;
    std::filesystem::path output;
};

/// Everything one `pipeline` run needs. Relative paths in a config file are
/// resolved against the file's directory.
struct PipelineConfig {
    ExecConfig exec;
    std::vector<KbSpec> kbs;
    std::vector<Join2Entry> joins;
    std::optional<Join3Entry> join3;
    std::optional<SampleEntry> sample;
    std::uint64_t seed = 42;
    bool validate_outputs = true;

    /// Throws ConfigError: labels unique, references resolve, every path
    /// distinct.
    void validate() const;

    const KbSpec& kb(std::string_view label) const;
    const Join2Entry& join(std::string_view name) const;

    /// Effective settings, one key per field, for reproducibility logs.
    KvReport effective() const;
};

PipelineConfig pipeline_config_from(const KvConfig& kv, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

} // namespace flatlink
