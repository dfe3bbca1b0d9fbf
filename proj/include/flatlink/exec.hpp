#pragma once

#include "flatlink/io.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace flatlink {

/// Local map / shuffle / reduce engine.
///
/// Map output is hash-partitioned on the key, buffered in memory up to
/// `memory_budget_bytes` (shared by all partitions) and spilled to sorted run
/// files when the buffer is full. Each partition is then k-way merged in
/// (key, tag, value) byte order and fed to the reducer one key at a time.
/// Item order, hash function and output order are all fixed, so two runs on
/// the same input and config produce identical bytes.
///
/// Run file layout (little-endian), repeated until EOF:
///   u32 key_len | key bytes | u32 tag | u32 value_len | value bytes
struct ExecConfig {
    std::size_t partitions = 16;
    std::uint64_t memory_budget_bytes = 256ull << 20;
    std::filesystem::path spill_dir = default_temp_dir();
    std::size_t parallelism = 1;
    /// Maximum runs merged at once; more runs trigger intermediate passes.
    std::size_t merge_fan_in = 64;

    /// Throws ConfigError.
    void validate() const;
};

struct KeyedItem {
    std::string key;
    std::string value;
    std::uint32_t tag = 0;

    friend bool operator==(const KeyedItem&, const KeyedItem&) = default;
};

/// Sort order of the shuffle: key, then tag, then value, bytewise.
bool item_less(const KeyedItem& a, const KeyedItem& b);

/// 64-bit FNV-1a (offset basis 0xcbf29ce484222325, prime 0x100000001b3).
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// fnv1a64(key) mod partitions.
std::size_t partition_of(std::string_view key, std::size_t partitions);

struct SortStats {
    std::uint64_t items = 0;
    std::uint64_t spill_runs = 0;
    std::uint64_t spilled_bytes = 0;
    /// High-water mark of the accounted in-memory buffer.
    std::uint64_t peak_buffer_bytes = 0;
    std::uint64_t merge_passes = 0;
};

namespace detail {
class PartitionedSorter;
class MergeReader;
} // namespace detail

/// Stream of items in shuffle order.
class SortedStream {
public:
    SortedStream(SortedStream&&) noexcept;
    SortedStream& operator=(SortedStream&&) noexcept;
    ~SortedStream();

    /// Moves to the next item; false at end.
    bool next();
    std::string_view key() const;
    std::uint32_t tag() const;
    std::string_view value() const;

private:
    friend class ExternalSorter;
    SortedStream(std::shared_ptr<detail::PartitionedSorter> owner,
                 std::unique_ptr<detail::MergeReader> reader);

    std::shared_ptr<detail::PartitionedSorter> owner_;
    std::unique_ptr<detail::MergeReader> reader_;
};

/// Sorts an unbounded item stream with a bounded buffer.
class ExternalSorter {
public:
    ExternalSorter(std::uint64_t memory_budget_bytes, const std::filesystem::path& spill_dir,
                   std::size_t merge_fan_in = 64);
    ~ExternalSorter();

    void add(std::string_view key, std::uint32_t tag, std::string_view value);
    void add(const KeyedItem& item) { add(item.key, item.tag, item.value); }

    /// Ends input. Only stats() may be called afterwards.
    SortedStream finish();

    const SortStats& stats() const;

private:
    std::shared_ptr<detail::PartitionedSorter> sorter_;
};

/// All items sharing one key, visited in (tag, value) order. Items are
/// streamed from the merge; nothing beyond the current item is held.
class KeyGroup {
public:
    std::string_view key() const noexcept { return key_; }

    /// Advances to the next item of this key. Must be called before the
    /// first item is read.
    bool next();
    std::uint32_t tag() const;
    std::string_view value() const;

    /// Items consumed so far.
    std::uint64_t consumed() const noexcept { return consumed_; }

private:
    friend class GroupDriver;
    KeyGroup(detail::MergeReader& reader, std::string key);
    void drain();

    detail::MergeReader* reader_;
    std::string key_;
    bool pending_ = true;
    bool done_ = false;
    std::uint64_t consumed_ = 0;
};

/// Map side: emits (key, value) for the input's tag.
class MapEmitter {
public:
    virtual ~MapEmitter() = default;
    virtual void emit(std::string_view key, std::string_view value) = 0;
};

/// Reduce side: emits output lines (no terminator).
class LineEmitter {
public:
    virtual ~LineEmitter() = default;
    virtual void emit(std::string_view line) = 0;
};

struct MapInput {
    std::uint32_t tag = 0;
    std::function<void(MapEmitter&)> run;
};

using ReduceFn = std::function<void(KeyGroup&, LineEmitter&)>;
using LineSink = std::function<void(std::string_view)>;

enum class OutputOrder {
    /// Partitions in ascending id, keys ascending within each.
    partition_then_key,
    /// Partition outputs merged so keys ascend globally.
    key,
};

struct JobStats {
    SortStats sort;
    std::uint64_t keys = 0;
    std::uint64_t output_lines = 0;
    std::vector<std::uint64_t> partition_items;
};

/// Runs every map input in list order, shuffles, then reduces each distinct
/// key exactly once. Exceptions from reduce abort the job as exec errors
/// naming the key. Scratch files live in a private directory under
/// cfg.spill_dir that is removed when the job ends.
JobStats run_map_reduce(const std::vector<MapInput>& inputs, const ReduceFn& reduce,
                        const ExecConfig& cfg, const LineSink& sink,
                        OutputOrder order = OutputOrder::partition_then_key);

/// Item-level convenience over run_map_reduce: each input yields opaque items,
/// key_fn derives the shuffle key and the item itself is the value.
struct TaggedItems {
    std::uint32_t tag = 0;
    std::function<void(const std::function<void(std::string_view)>&)> produce;
};

using KeyFn = std::function<std::string(std::uint32_t tag, std::string_view item)>;

JobStats run_group_by(const std::vector<TaggedItems>& inputs, const KeyFn& key_fn,
                      const ReduceFn& reduce, const ExecConfig& cfg, const LineSink& sink,
                      OutputOrder order = OutputOrder::partition_then_key);

} // namespace flatlink
