#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace flatlink {

/// Ordered key=value pairs; the machine-readable form of every report.
class KvReport {
public:
    KvReport& add(std::string key, std::string value);
    KvReport& add(std::string key, std::uint64_t value);

    const std::vector<std::pair<std::string, std::string>>& fields() const noexcept { return fields_; }

    /// `key=value` pairs joined by single spaces, on one line.
    std::string one_line() const;
    /// One `key=value` per line, `\n`-terminated.
    std::string multi_line() const;
    void write_file(const std::filesystem::path& path) const;

private:
    std::vector<std::pair<std::string, std::string>> fields_;
};

} // namespace flatlink
