#include "flatlink/io.hpp"

#include "flatlink/error.hpp"

#include <zlib.h>

#include <atomic>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <unistd.h>

namespace flatlink {

namespace fs = std::filesystem;

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::io: return "io";
    case ErrorCode::format: return "format";
    case ErrorCode::config: return "config";
    case ErrorCode::usage: return "usage";
    case ErrorCode::exec: return "exec";
    }
    return "unknown";
}

void throw_error(ErrorCode code, const std::string& what) {
    switch (code) {
    case ErrorCode::io: throw IoError(what);
    case ErrorCode::format: throw FormatError(what);
    case ErrorCode::config: throw ConfigError(what);
    default: throw Error(code, what);
    }
}

namespace {
constexpr std::size_t kReadChunk = 1 << 18;
constexpr std::size_t kStdioBuffer = 1 << 18;
} // namespace

struct LineReader::GzHandle {
    gzFile file = nullptr;
    ~GzHandle() {
        if (file != nullptr) gzclose(file);
    }
};

LineReader::LineReader(const fs::path& path)
    : gz_(std::make_unique<GzHandle>()), name_(path.string()), buf_(kReadChunk) {
    if (name_ == "-") {
        gz_->file = gzdopen(dup(STDIN_FILENO), "rb");
    } else {
        gz_->file = gzopen(name_.c_str(), "rb");
    }
    if (gz_->file == nullptr) {
        throw IoError("cannot open " + name_ + ": " + std::strerror(errno));
    }
    gzbuffer(gz_->file, kReadChunk);
}

LineReader::LineReader(std::istream& in)
    : stream_(&in), name_("<stream>"), buf_(kReadChunk) {}

LineReader::~LineReader() = default;

bool LineReader::fill() {
    if (eof_) return false;
    if (pos_ > 0) {
        std::memmove(buf_.data(), buf_.data() + pos_, end_ - pos_);
        end_ -= pos_;
        pos_ = 0;
    }
    if (end_ == buf_.size()) buf_.resize(buf_.size() * 2);
    std::size_t want = buf_.size() - end_;
    std::size_t got = 0;
    if (gz_) {
        int n = gzread(gz_->file, buf_.data() + end_, static_cast<unsigned>(want));
        if (n < 0) {
            int errnum = 0;
            const char* msg = gzerror(gz_->file, &errnum);
            throw IoError("read error on " + name_ + ": " + (msg ? msg : "unknown"));
        }
        got = static_cast<std::size_t>(n);
    } else {
        stream_->read(buf_.data() + end_, static_cast<std::streamsize>(want));
        got = static_cast<std::size_t>(stream_->gcount());
        if (stream_->bad()) throw IoError("read error on " + name_);
    }
    if (got == 0) {
        eof_ = true;
        return false;
    }
    end_ += got;
    return true;
}

bool LineReader::next(std::string& line) {
    std::size_t scanned = pos_;
    for (;;) {
        const char* begin = buf_.data() + scanned;
        const void* nl = std::memchr(begin, '\n', end_ - scanned);
        if (nl != nullptr) {
            auto at = static_cast<std::size_t>(static_cast<const char*>(nl) - buf_.data());
            line.assign(buf_.data() + pos_, at - pos_);
            bytes_ += at - pos_ + 1;
            pos_ = at + 1;
            ++line_no_;
            return true;
        }
        std::size_t consumed = end_ - pos_;
        if (!fill()) {
            if (end_ == pos_) return false;
            line.assign(buf_.data() + pos_, end_ - pos_);
            bytes_ += end_ - pos_;
            pos_ = end_;
            ++line_no_;
            return true;
        }
        // fill() moved the unread tail to the front of the buffer.
        scanned = pos_ + consumed;
    }
}

LineWriter::LineWriter(const fs::path& path) : path_(path.string()) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    file_ = std::fopen(path_.c_str(), "wb");
    if (file_ == nullptr) {
        throw IoError("cannot create " + path_ + ": " + std::strerror(errno));
    }
    std::setvbuf(file_, nullptr, _IOFBF, kStdioBuffer);
}

LineWriter::~LineWriter() {
    if (file_ != nullptr) std::fclose(file_);
}

void LineWriter::write_line(std::string_view line) {
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size()
        || std::fputc('\n', file_) == EOF) {
        throw IoError("write error on " + path_);
    }
    ++lines_;
}

void LineWriter::close() {
    if (file_ == nullptr) return;
    std::FILE* f = file_;
    file_ = nullptr;
    if (std::fclose(f) != 0) throw IoError("close failed on " + path_);
}

AtomicLineWriter::AtomicLineWriter(const fs::path& path)
    : final_(path), partial_(path.string() + ".partial"), writer_(partial_) {}

AtomicLineWriter::~AtomicLineWriter() {
    if (!committed_) {
        try {
            writer_.close();
        } catch (...) {
        }
        std::error_code ec;
        fs::remove(partial_, ec);
    }
}

void AtomicLineWriter::commit() {
    writer_.close();
    std::error_code ec;
    fs::rename(partial_, final_, ec);
    if (ec) throw IoError("cannot rename " + partial_.string() + ": " + ec.message());
    committed_ = true;
}

void FileCloser::operator()(std::FILE* f) const noexcept {
    if (f != nullptr) std::fclose(f);
}

UniqueFile open_file(const fs::path& path, const char* mode) {
    UniqueFile f(std::fopen(path.c_str(), mode));
    if (!f) {
        throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    }
    std::setvbuf(f.get(), nullptr, _IOFBF, kStdioBuffer);
    return f;
}

ScratchDir::ScratchDir(const fs::path& parent, std::string_view tag) {
    static std::atomic<std::uint64_t> sequence{0};
    std::error_code ec;
    fs::create_directories(parent, ec);
    for (int attempt = 0; attempt < 100; ++attempt) {
        auto candidate = parent / (std::string(tag) + "-" + std::to_string(::getpid()) + "-"
                                   + std::to_string(sequence.fetch_add(1)));
        if (fs::create_directory(candidate, ec)) {
            path_ = candidate;
            return;
        }
    }
    throw IoError("cannot create scratch directory under " + parent.string());
}

ScratchDir::~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

fs::path ScratchDir::next_file(std::string_view stem) {
    return path_ / (std::string(stem) + "-" + std::to_string(counter_++));
}

fs::path default_temp_dir() {
    if (const char* tmp = std::getenv("TMPDIR"); tmp != nullptr && *tmp != '\0') return tmp;
    return "/tmp";
}

} // namespace flatlink
