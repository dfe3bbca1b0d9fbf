#include "flatlink/exec.hpp"

#include "flatlink/error.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <queue>
#include <thread>

namespace flatlink {

namespace fs = std::filesystem;

void ExecConfig::validate() const {
    if (partitions < 1) throw ConfigError("partitions must be >= 1");
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (memory_budget_bytes < 4096) throw ConfigError("memory_budget_bytes must be >= 4096");
    if (merge_fan_in < 2) throw ConfigError("merge_fan_in must be >= 2");
    if (spill_dir.empty()) throw ConfigError("spill_dir must not be empty");
}

namespace {

int compare_items(std::string_view ak, std::uint32_t at, std::string_view av,
                  std::string_view bk, std::uint32_t bt, std::string_view bv) {
    if (int c = ak.compare(bk); c != 0) return c;
    if (at != bt) return at < bt ? -1 : 1;
    return av.compare(bv);
}

void put_u32(std::FILE* f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    if (std::fwrite(b, 1, 4, f) != 4) throw IoError("spill write failed");
}

void put_bytes(std::FILE* f, std::string_view s) {
    if (!s.empty() && std::fwrite(s.data(), 1, s.size(), f) != s.size()) {
        throw IoError("spill write failed");
    }
}

/// Returns false on clean EOF before the first byte.
bool get_u32(std::FILE* f, std::uint32_t& v) {
    unsigned char b[4];
    std::size_t n = std::fread(b, 1, 4, f);
    if (n == 0 && std::feof(f)) return false;
    if (n != 4) throw IoError("truncated spill file");
    v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8)
        | (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}

void get_bytes(std::FILE* f, std::string& s, std::uint32_t n) {
    s.resize(n);
    if (n != 0 && std::fread(s.data(), 1, n, f) != n) throw IoError("truncated spill file");
}

std::uint32_t checked_len(std::size_t n) {
    if (n > 0xFFFFFFFFu) throw Error(ErrorCode::exec, "item larger than 4 GiB");
    return static_cast<std::uint32_t>(n);
}

} // namespace

bool item_less(const KeyedItem& a, const KeyedItem& b) {
    return compare_items(a.key, a.tag, a.value, b.key, b.tag, b.value) < 0;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::size_t partition_of(std::string_view key, std::size_t partitions) {
    if (partitions == 0) throw ConfigError("partitions must be >= 1");
    return static_cast<std::size_t>(fnv1a64(key) % partitions);
}

namespace detail {

/// Sorted-source interface used by the merger.
class ItemSource {
public:
    virtual ~ItemSource() = default;
    virtual bool advance() = 0;
    virtual std::string_view key() const = 0;
    virtual std::uint32_t tag() const = 0;
    virtual std::string_view value() const = 0;
};

/// Items packed into one byte arena; refs are sorted, not the bytes.
class SortBuffer {
public:
    struct Ref {
        std::uint64_t offset;
        std::uint32_t key_len;
        std::uint32_t value_len;
        std::uint32_t tag;
    };

    void add(std::string_view key, std::uint32_t tag, std::string_view value) {
        refs_.push_back({arena_.size(), checked_len(key.size()), checked_len(value.size()), tag});
        arena_.append(key);
        arena_.append(value);
    }

    std::uint64_t bytes() const { return arena_.size() + refs_.size() * sizeof(Ref); }
    static std::uint64_t cost(std::string_view key, std::string_view value) {
        return key.size() + value.size() + sizeof(Ref);
    }
    bool empty() const { return refs_.empty(); }
    std::size_t size() const { return refs_.size(); }

    std::string_view key(const Ref& r) const { return {arena_.data() + r.offset, r.key_len}; }
    std::string_view value(const Ref& r) const {
        return {arena_.data() + r.offset + r.key_len, r.value_len};
    }
    const Ref& at(std::size_t i) const { return refs_[i]; }

    void sort() {
        std::sort(refs_.begin(), refs_.end(), [this](const Ref& a, const Ref& b) {
            return compare_items(key(a), a.tag, value(a), key(b), b.tag, value(b)) < 0;
        });
    }

    void write_run(std::FILE* f) const {
        for (const auto& r : refs_) {
            put_u32(f, r.key_len);
            put_bytes(f, key(r));
            put_u32(f, r.tag);
            put_u32(f, r.value_len);
            put_bytes(f, value(r));
        }
    }

    void clear() {
        arena_.clear();
        refs_.clear();
    }

private:
    std::string arena_;
    std::vector<Ref> refs_;
};

class BufferSource final : public ItemSource {
public:
    explicit BufferSource(const SortBuffer& buf) : buf_(buf) {}
    bool advance() override {
        if (started_) ++pos_;
        started_ = true;
        return pos_ < buf_.size();
    }
    std::string_view key() const override { return buf_.key(buf_.at(pos_)); }
    std::uint32_t tag() const override { return buf_.at(pos_).tag; }
    std::string_view value() const override { return buf_.value(buf_.at(pos_)); }

private:
    const SortBuffer& buf_;
    std::size_t pos_ = 0;
    bool started_ = false;
};

class RunSource final : public ItemSource {
public:
    explicit RunSource(const fs::path& path) : file_(open_file(path, "rb")) {}
    bool advance() override {
        std::uint32_t n = 0;
        if (!get_u32(file_.get(), n)) return false;
        get_bytes(file_.get(), key_, n);
        if (!get_u32(file_.get(), tag_)) throw IoError("truncated spill file");
        if (!get_u32(file_.get(), n)) throw IoError("truncated spill file");
        get_bytes(file_.get(), value_, n);
        return true;
    }
    std::string_view key() const override { return key_; }
    std::uint32_t tag() const override { return tag_; }
    std::string_view value() const override { return value_; }

private:
    UniqueFile file_;
    std::string key_;
    std::uint32_t tag_ = 0;
    std::string value_;
};

/// k-way merge over sorted sources.
class MergeReader {
public:
    explicit MergeReader(std::vector<std::unique_ptr<ItemSource>> sources)
        : sources_(std::move(sources)), heap_(Greater{}) {
        for (auto& s : sources_) {
            if (s->advance()) heap_.push(s.get());
        }
    }

    bool next() {
        if (current_ != nullptr && current_->advance()) heap_.push(current_);
        current_ = nullptr;
        if (heap_.empty()) return false;
        current_ = heap_.top();
        heap_.pop();
        return true;
    }

    bool valid() const { return current_ != nullptr; }
    std::string_view key() const { return current_->key(); }
    std::uint32_t tag() const { return current_->tag(); }
    std::string_view value() const { return current_->value(); }

private:
    struct Greater {
        bool operator()(const ItemSource* a, const ItemSource* b) const {
            return compare_items(a->key(), a->tag(), a->value(), b->key(), b->tag(), b->value()) > 0;
        }
    };

    std::vector<std::unique_ptr<ItemSource>> sources_;
    std::priority_queue<ItemSource*, std::vector<ItemSource*>, Greater> heap_;
    ItemSource* current_ = nullptr;
};

/// Per-partition buffers under one shared memory budget.
class PartitionedSorter {
public:
    PartitionedSorter(std::size_t partitions, std::uint64_t budget, const fs::path& spill_dir,
                      std::size_t fan_in)
        : dir_(spill_dir, "flatlink-sort"), budget_(budget), fan_in_(fan_in),
          buffers_(partitions), runs_(partitions) {}

    void add(std::size_t p, std::string_view key, std::uint32_t tag, std::string_view value) {
        if (key.empty()) throw Error(ErrorCode::exec, "empty shuffle key");
        auto cost = SortBuffer::cost(key, value);
        if (buffered_ + cost > budget_ && buffered_ > 0) spill_all();
        buffers_[p].add(key, tag, value);
        buffered_ += cost;
        ++stats_.items;
        stats_.peak_buffer_bytes = std::max(stats_.peak_buffer_bytes, buffered_);
    }

    void seal() {
        for (auto& b : buffers_) b.sort();
    }

    /// Safe to call concurrently for distinct partitions after seal().
    std::unique_ptr<MergeReader> open(std::size_t p) {
        auto& runs = runs_[p];
        while (runs.size() > fan_in_) {
            std::vector<fs::path> group(runs.begin(), runs.begin() + static_cast<std::ptrdiff_t>(fan_in_));
            runs.erase(runs.begin(), runs.begin() + static_cast<std::ptrdiff_t>(fan_in_));
            std::vector<std::unique_ptr<ItemSource>> sources;
            for (const auto& r : group) sources.push_back(std::make_unique<RunSource>(r));
            MergeReader merged(std::move(sources));
            auto out_path = next_file("merge");
            {
                auto out = open_file(out_path, "wb");
                while (merged.next()) {
                    put_u32(out.get(), checked_len(merged.key().size()));
                    put_bytes(out.get(), merged.key());
                    put_u32(out.get(), merged.tag());
                    put_u32(out.get(), checked_len(merged.value().size()));
                    put_bytes(out.get(), merged.value());
                }
                if (std::fflush(out.get()) != 0) throw IoError("spill write failed");
            }
            for (const auto& r : group) {
                std::error_code ec;
                fs::remove(r, ec);
            }
            runs.push_back(out_path);
            std::lock_guard lock(mu_);
            ++stats_.merge_passes;
        }
        std::vector<std::unique_ptr<ItemSource>> sources;
        for (const auto& r : runs) sources.push_back(std::make_unique<RunSource>(r));
        if (!buffers_[p].empty()) sources.push_back(std::make_unique<BufferSource>(buffers_[p]));
        return std::make_unique<MergeReader>(std::move(sources));
    }

    fs::path next_file(std::string_view stem) {
        std::lock_guard lock(mu_);
        return dir_.next_file(stem);
    }

    const SortStats& stats() const { return stats_; }

private:
    void spill_all() {
        for (std::size_t p = 0; p < buffers_.size(); ++p) {
            auto& buf = buffers_[p];
            if (buf.empty()) continue;
            buf.sort();
            auto path = dir_.next_file("run");
            auto f = open_file(path, "wb");
            buf.write_run(f.get());
            if (std::fflush(f.get()) != 0) throw IoError("spill write failed on " + path.string());
            stats_.spilled_bytes += static_cast<std::uint64_t>(std::ftell(f.get()));
            ++stats_.spill_runs;
            runs_[p].push_back(path);
            buf.clear();
        }
        buffered_ = 0;
    }

    ScratchDir dir_;
    std::uint64_t budget_;
    std::size_t fan_in_;
    std::vector<SortBuffer> buffers_;
    std::vector<std::vector<fs::path>> runs_;
    std::uint64_t buffered_ = 0;
    SortStats stats_;
    std::mutex mu_;
};

} // namespace detail

// ---------------------------------------------------------------------------

SortedStream::SortedStream(std::shared_ptr<detail::PartitionedSorter> owner,
                           std::unique_ptr<detail::MergeReader> reader)
    : owner_(std::move(owner)), reader_(std::move(reader)) {}
SortedStream::SortedStream(SortedStream&&) noexcept = default;
SortedStream& SortedStream::operator=(SortedStream&&) noexcept = default;
SortedStream::~SortedStream() {
    reader_.reset();
    owner_.reset();
}

bool SortedStream::next() { return reader_->next(); }
std::string_view SortedStream::key() const { return reader_->key(); }
std::uint32_t SortedStream::tag() const { return reader_->tag(); }
std::string_view SortedStream::value() const { return reader_->value(); }

ExternalSorter::ExternalSorter(std::uint64_t memory_budget_bytes, const fs::path& spill_dir,
                               std::size_t merge_fan_in)
    : sorter_(std::make_shared<detail::PartitionedSorter>(1, memory_budget_bytes, spill_dir,
                                                          std::max<std::size_t>(2, merge_fan_in))) {}

ExternalSorter::~ExternalSorter() = default;

void ExternalSorter::add(std::string_view key, std::uint32_t tag, std::string_view value) {
    sorter_->add(0, key, tag, value);
}

SortedStream ExternalSorter::finish() {
    sorter_->seal();
    auto reader = sorter_->open(0);
    return SortedStream(sorter_, std::move(reader));
}

const SortStats& ExternalSorter::stats() const { return sorter_->stats(); }

// ---------------------------------------------------------------------------

KeyGroup::KeyGroup(detail::MergeReader& reader, std::string key)
    : reader_(&reader), key_(std::move(key)) {}

bool KeyGroup::next() {
    if (done_) return false;
    if (pending_) {
        pending_ = false;
        ++consumed_;
        return true;
    }
    if (!reader_->next() || reader_->key() != key_) {
        done_ = true;
        return false;
    }
    ++consumed_;
    return true;
}

std::uint32_t KeyGroup::tag() const { return reader_->tag(); }
std::string_view KeyGroup::value() const { return reader_->value(); }

void KeyGroup::drain() {
    while (next()) {
    }
}

namespace {

class ShuffleEmitter final : public MapEmitter {
public:
    ShuffleEmitter(detail::PartitionedSorter& sorter, std::vector<std::uint64_t>& counts,
                   std::uint32_t tag)
        : sorter_(sorter), counts_(counts), tag_(tag) {}
    void emit(std::string_view key, std::string_view value) override {
        auto p = partition_of(key, counts_.size());
        sorter_.add(p, key, tag_, value);
        ++counts_[p];
    }

private:
    detail::PartitionedSorter& sorter_;
    std::vector<std::uint64_t>& counts_;
    std::uint32_t tag_;
};

class SinkEmitter final : public LineEmitter {
public:
    explicit SinkEmitter(const LineSink& sink) : sink_(sink) {}
    void emit(std::string_view line) override {
        sink_(line);
        ++lines;
    }
    std::uint64_t lines = 0;

private:
    const LineSink& sink_;
};

/// Reducer output for one partition: (u32 key_len, key, u32 line_len, line)*.
class SpoolEmitter final : public LineEmitter {
public:
    explicit SpoolEmitter(const fs::path& path) : file_(open_file(path, "wb")) {}
    void emit(std::string_view line) override {
        put_u32(file_.get(), checked_len(key.size()));
        put_bytes(file_.get(), key);
        put_u32(file_.get(), checked_len(line.size()));
        put_bytes(file_.get(), line);
        ++lines;
    }
    void close() {
        if (std::fflush(file_.get()) != 0) throw IoError("spool write failed");
        file_.reset();
    }
    std::string_view key;
    std::uint64_t lines = 0;

private:
    UniqueFile file_;
};

class SpoolReader {
public:
    explicit SpoolReader(const fs::path& path) : file_(open_file(path, "rb")) {}
    bool advance() {
        std::uint32_t n = 0;
        if (!get_u32(file_.get(), n)) return false;
        get_bytes(file_.get(), key, n);
        if (!get_u32(file_.get(), n)) throw IoError("truncated spool file");
        get_bytes(file_.get(), line, n);
        return true;
    }
    std::string key;
    std::string line;

private:
    UniqueFile file_;
};

std::string printable_key(std::string_view key) {
    std::string out;
    for (char c : key.substr(0, 200)) {
        out.push_back(static_cast<unsigned char>(c) < 0x20 ? '?' : c);
    }
    if (key.size() > 200) out += "...";
    return out;
}

} // namespace

class GroupDriver {
public:
    /// Reduces one partition; returns the number of keys.
    static std::uint64_t run(detail::MergeReader& reader, const ReduceFn& reduce,
                             LineEmitter& out, SpoolEmitter* spool) {
        std::uint64_t keys = 0;
        if (!reader.next()) return 0;
        while (reader.valid()) {
            KeyGroup group(reader, std::string(reader.key()));
            if (spool != nullptr) spool->key = group.key();
            ++keys;
            try {
                reduce(group, out);
            } catch (const Error& e) {
                throw_error(e.code(),
                            "reduce failed for key '" + printable_key(group.key()) + "': " + e.what());
            } catch (const std::exception& e) {
                throw Error(ErrorCode::exec,
                            "reduce failed for key '" + printable_key(group.key()) + "': " + e.what());
            }
            group.drain();
        }
        return keys;
    }
};

JobStats run_map_reduce(const std::vector<MapInput>& inputs, const ReduceFn& reduce,
                        const ExecConfig& cfg, const LineSink& sink, OutputOrder order) {
    cfg.validate();
    JobStats stats;
    stats.partition_items.assign(cfg.partitions, 0);
    detail::PartitionedSorter sorter(cfg.partitions, cfg.memory_budget_bytes, cfg.spill_dir,
                                     cfg.merge_fan_in);

    for (const auto& input : inputs) {
        ShuffleEmitter emitter(sorter, stats.partition_items, input.tag);
        input.run(emitter);
    }
    sorter.seal();

    const std::size_t workers = std::min(cfg.parallelism, cfg.partitions);
    if (workers == 1 && order == OutputOrder::partition_then_key) {
        SinkEmitter out(sink);
        for (std::size_t p = 0; p < cfg.partitions; ++p) {
            auto reader = sorter.open(p);
            stats.keys += GroupDriver::run(*reader, reduce, out, nullptr);
        }
        stats.output_lines = out.lines;
        stats.sort = sorter.stats();
        return stats;
    }

    std::vector<fs::path> spools(cfg.partitions);
    for (auto& s : spools) s = sorter.next_file("spool");
    std::vector<std::uint64_t> keys(cfg.partitions, 0);
    std::vector<std::uint64_t> lines(cfg.partitions, 0);
    std::vector<std::exception_ptr> errors(cfg.partitions);
    std::atomic<std::size_t> next_partition{0};

    auto worker = [&] {
        for (;;) {
            std::size_t p = next_partition.fetch_add(1);
            if (p >= cfg.partitions) return;
            try {
                SpoolEmitter spool(spools[p]);
                auto reader = sorter.open(p);
                keys[p] = GroupDriver::run(*reader, reduce, spool, &spool);
                spool.close();
                lines[p] = spool.lines;
            } catch (...) {
                errors[p] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    // Lowest failing partition wins so the reported error is deterministic.
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    if (order == OutputOrder::partition_then_key) {
        for (const auto& path : spools) {
            SpoolReader r(path);
            while (r.advance()) sink(r.line);
        }
    } else {
        std::vector<std::unique_ptr<SpoolReader>> readers;
        auto greater = [](const SpoolReader* a, const SpoolReader* b) { return a->key > b->key; };
        std::priority_queue<SpoolReader*, std::vector<SpoolReader*>, decltype(greater)> heap(greater);
        for (const auto& path : spools) {
            readers.push_back(std::make_unique<SpoolReader>(path));
            if (readers.back()->advance()) heap.push(readers.back().get());
        }
        while (!heap.empty()) {
            SpoolReader* r = heap.top();
            heap.pop();
            sink(r->line);
            if (r->advance()) heap.push(r);
        }
    }
    for (std::size_t p = 0; p < cfg.partitions; ++p) {
        stats.keys += keys[p];
        stats.output_lines += lines[p];
    }
    stats.sort = sorter.stats();
    return stats;
}

JobStats run_group_by(const std::vector<TaggedItems>& inputs, const KeyFn& key_fn,
                      const ReduceFn& reduce, const ExecConfig& cfg, const LineSink& sink,
                      OutputOrder order) {
    std::vector<MapInput> maps;
    maps.reserve(inputs.size());
    for (const auto& in : inputs) {
        maps.push_back({in.tag, [&in, &key_fn](MapEmitter& emit) {
                            in.produce([&](std::string_view item) {
                                emit.emit(key_fn(in.tag, item), item);
                            });
                        }});
    }
    return run_map_reduce(maps, reduce, cfg, sink, order);
}

} // namespace flatlink
