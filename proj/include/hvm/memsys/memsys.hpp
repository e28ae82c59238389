#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hvm/core/address.hpp"

namespace hvm::memsys {

/// Classification of a cache block; Invalid marks an empty way.
enum class BlockKind : std::uint8_t { Invalid = 0, Data = 1, PtNode = 2, TarLine = 3, SfLine = 4 };
inline constexpr int kBlockKinds = 5;

constexpr bool is_metadata(BlockKind k) { return k != BlockKind::Data && k != BlockKind::Invalid; }
const char* to_string(BlockKind k);

enum class Level : std::uint8_t { L1D = 0, L2 = 1, LLC = 2, Dram = 3 };
inline constexpr int kLevels = 4;
const char* to_string(Level level);

enum class Replacement : std::uint8_t { Lru, Srrip };

struct CacheConfig {
    std::uint64_t bytes = 0;
    unsigned ways = 1;
    Cycles latency = 1;
    Replacement replacement = Replacement::Lru;
};

/// Set-associative array of 64-byte blocks, tagged by physical line number.
class CacheLevel {
public:
    CacheLevel(std::string name, const CacheConfig& cfg);

    /// Looks up a line; on a hit updates replacement state (and dirtiness).
    bool probe(std::uint64_t line, bool is_write);
    /// Installs a line, evicting if the set is full. A resident line is
    /// re-tagged with the new kind instead.
    void fill(std::uint64_t line, BlockKind kind, bool dirty);
    /// Drops a line. Returns true if it was resident and dirty.
    bool invalidate(std::uint64_t line, bool* was_present = nullptr);
    bool contains(std::uint64_t line) const;
    BlockKind kind_of(std::uint64_t line) const;

    std::size_t valid_blocks() const;
    std::size_t metadata_blocks() const;
    /// Metadata blocks over valid blocks; 0 when empty.
    double metadata_fraction() const;

    const std::string& name() const { return name_; }
    Cycles latency() const { return cfg_.latency; }
    std::uint64_t sets() const { return sets_; }
    unsigned ways() const { return cfg_.ways; }
    std::span<const std::uint8_t> kinds() const { return kinds_; }

private:
    int find_way(std::uint64_t set, std::uint64_t line) const;
    unsigned pick_victim(std::uint64_t set);
    void touch(std::size_t slot);

    std::string name_;
    CacheConfig cfg_;
    std::uint64_t sets_;
    std::vector<std::uint64_t> tags_;
    std::vector<std::uint8_t> kinds_;
    std::vector<std::uint8_t> dirty_;
    std::vector<std::uint8_t> rrpv_;
    std::vector<std::uint64_t> stamps_;
    std::uint64_t clock_ = 0;
};

struct DramConfig {
    unsigned banks = 16;
    std::uint64_t row_bytes = 8192;
    Cycles row_hit = 33;
    Cycles row_conflict = 73;
    Cycles row_idle = 66;
};

/// Hit: row already open. Conflict: another row open. Activate: bank idle.
enum class RowOutcome : std::uint8_t { None = 0, Hit = 1, Conflict = 2, Activate = 3 };
const char* to_string(RowOutcome r);

/// Banked DRAM with an open-row policy; one open row per bank.
class Dram {
public:
    explicit Dram(const DramConfig& cfg);

    RowOutcome access(PhysAddr paddr);
    Cycles latency_of(RowOutcome r) const;
    std::uint64_t row_of(PhysAddr paddr) const { return paddr / cfg_.row_bytes; }
    unsigned bank_of(PhysAddr paddr) const { return static_cast<unsigned>(row_of(paddr) % cfg_.banks); }
    std::int64_t open_row(unsigned bank) const { return open_[bank]; }

    const DramConfig& config() const { return cfg_; }

private:
    DramConfig cfg_;
    std::vector<std::int64_t> open_;
};

struct AccessResult {
    Cycles latency = 0;
    Level serviced_at = Level::L1D;
    RowOutcome row = RowOutcome::None;
};

struct MemoryConfig {
    CacheConfig l1d{32 * 1024, 8, 4, Replacement::Lru};
    CacheConfig l2{2 * 1024 * 1024, 16, 16, Replacement::Srrip};
    CacheConfig llc{2 * 1024 * 1024, 16, 35, Replacement::Srrip};
    DramConfig dram;
};

struct MemStats {
    /// accesses[kind][level]: where requests of each kind were serviced.
    std::array<std::array<std::uint64_t, kLevels>, kBlockKinds> serviced{};
    /// rows[metadata ? 1 : 0][outcome]
    std::array<std::array<std::uint64_t, 4>, 2> rows{};
    std::uint64_t flushed_dirty_lines = 0;
};

struct Occupancy {
    std::array<double, 3> metadata_fraction{};  // L1D, L2, LLC
};

/// Physically addressed L1D -> L2 -> LLC -> DRAM. Program data enters at L1D;
/// translation metadata enters at L2. Misses fill every level probed.
class MemorySystem {
public:
    MemorySystem(const MemoryConfig& cfg, PhysAddr addressable_bytes);

    /// Throws hvm::Error for an address beyond the addressable range.
    AccessResult access(PhysAddr paddr, BlockKind kind, bool is_write);

    /// Invalidates every line of [base, base + bytes) at all levels and
    /// returns how many of them were dirty.
    unsigned flush_range(PhysAddr base, std::uint64_t bytes);

    Occupancy occupancy_sample() const;

    const CacheLevel& level(Level l) const { return levels_[static_cast<int>(l)]; }
    const Dram& dram() const { return dram_; }
    const MemStats& stats() const { return stats_; }
    PhysAddr addressable_bytes() const { return limit_; }

private:
    std::array<CacheLevel, 3> levels_;
    Dram dram_;
    PhysAddr limit_;
    MemStats stats_;
};

}  // namespace hvm::memsys
