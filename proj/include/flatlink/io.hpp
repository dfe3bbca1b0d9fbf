#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <istream>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace flatlink {

/// Sequential line source. Reads plain or gzip-compressed files (detected
/// from the content, not the extension) or an arbitrary std::istream.
/// Lines are returned without their `\n` terminator; a trailing `\r` is kept
/// so that callers decide how strict to be.
class LineReader {
public:
    explicit LineReader(const std::filesystem::path& path);
    explicit LineReader(std::istream& in);
    ~LineReader();

    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;

    /// False at end of input. Throws IoError on read failure.
    bool next(std::string& line);

    /// Physical lines returned so far.
    std::uint64_t line_number() const noexcept { return line_no_; }
    /// Bytes consumed from the decompressed stream, terminators included.
    std::uint64_t bytes_read() const noexcept { return bytes_; }

    const std::string& name() const noexcept { return name_; }

private:
    bool fill();

    struct GzHandle;
    std::unique_ptr<GzHandle> gz_;
    std::istream* stream_ = nullptr;
    std::string name_;
    std::vector<char> buf_;
    std::size_t pos_ = 0;
    std::size_t end_ = 0;
    bool eof_ = false;
    std::uint64_t line_no_ = 0;
    std::uint64_t bytes_ = 0;
};

/// Buffered, `\n`-terminated line output to a file. close() reports write
/// errors; the destructor closes silently.
class LineWriter {
public:
    explicit LineWriter(const std::filesystem::path& path);
    ~LineWriter();

    LineWriter(const LineWriter&) = delete;
    LineWriter& operator=(const LineWriter&) = delete;

    void write_line(std::string_view line);
    void close();

    std::uint64_t lines_written() const noexcept { return lines_; }

private:
    std::FILE* file_ = nullptr;
    std::string path_;
    std::uint64_t lines_ = 0;
};

/// Writes to `<path>.partial` and renames over `path` on commit(); an
/// uncommitted file is removed on destruction.
class AtomicLineWriter {
public:
    explicit AtomicLineWriter(const std::filesystem::path& path);
    ~AtomicLineWriter();

    void write_line(std::string_view line) { writer_.write_line(line); }
    void commit();

    std::uint64_t lines_written() const noexcept { return writer_.lines_written(); }

private:
    std::filesystem::path final_;
    std::filesystem::path partial_;
    LineWriter writer_;
    bool committed_ = false;
};

struct FileCloser {
    void operator()(std::FILE* f) const noexcept;
};
using UniqueFile = std::unique_ptr<std::FILE, FileCloser>;

/// fopen with a large stdio buffer; throws IoError on failure.
UniqueFile open_file(const std::filesystem::path& path, const char* mode);

/// A uniquely named directory, removed recursively on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::filesystem::path& parent, std::string_view tag = "flatlink");
    ~ScratchDir();

    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    /// A fresh file name inside the directory (the file is not created).
    std::filesystem::path next_file(std::string_view stem);

private:
    std::filesystem::path path_;
    std::uint64_t counter_ = 0;
};

/// Default spill location: $TMPDIR or /tmp.
std::filesystem::path default_temp_dir();

} // namespace flatlink
