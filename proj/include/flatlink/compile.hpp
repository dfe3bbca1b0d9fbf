#pragma once

#include "flatlink/exec.hpp"
#include "flatlink/ntriples.hpp"
#include "flatlink/report.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace flatlink {

/// One knowledge base to compile: every input file contributes triples to a
/// single entity file.
struct KbSpec {
    std::string label;
    std::vector<std::filesystem::path> input_paths;
    std::filesystem::path output_path;

    /// Throws ConfigError.
    void validate() const;
};

struct CompileReport {
    std::string label;
    std::uint64_t entities = 0;
    std::uint64_t triples = 0;
    std::uint64_t duplicate_triples = 0;
    std::uint64_t skipped_lines = 0;
    ParseReport parse;
    JobStats job;

    KvReport to_kv() const;
};

/// Writes one line per distinct subject, ascending by subject bytes, each
/// line being the serialized record of all that subject's triples across
/// every input file. Throws FormatError when no triple parses.
CompileReport compile_kb(const KbSpec& spec, const ExecConfig& cfg);

} // namespace flatlink
