#include "flatlink/report.hpp"

#include "flatlink/io.hpp"

namespace flatlink {

KvReport& KvReport::add(std::string key, std::string value) {
    fields_.emplace_back(std::move(key), std::move(value));
    return *this;
}

KvReport& KvReport::add(std::string key, std::uint64_t value) {
    return add(std::move(key), std::to_string(value));
}

std::string KvReport::one_line() const {
    std::string out;
    for (const auto& [k, v] : fields_) {
        if (!out.empty()) out.push_back(' ');
        out += k;
        out.push_back('=');
        out += v;
    }
    return out;
}

std::string KvReport::multi_line() const {
    std::string out;
    for (const auto& [k, v] : fields_) {
        out += k;
        out.push_back('=');
        out += v;
        out.push_back('\n');
    }
    return out;
}

void KvReport::write_file(const std::filesystem::path& path) const {
    LineWriter w(path);
    for (const auto& [k, v] : fields_) w.write_line(k + "=" + v);
    w.close();
}

} // namespace flatlink
