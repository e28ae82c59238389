#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hvm/core/address.hpp"
#include "hvm/core/trace.hpp"
#include "hvm/flexseg/flexseg.hpp"
#include "hvm/memsys/memsys.hpp"
#include "hvm/mmu/mmu.hpp"
#include "hvm/restseg/restseg.hpp"

namespace hvm::os {

enum class MappingMode : std::uint8_t { RadixOnly, RestrictiveOnly, Hybrid, PerfectTlb };

std::string_view to_string(MappingMode mode);
/// Accepts radix, restrictive, hybrid, perfect.
MappingMode parse_mapping_mode(std::string_view name);

struct SegmentSpec {
    std::uint64_t bytes = 0;
    PageSize page_size = PageSize::Small;
};

inline constexpr std::uint64_t kMiB = 1024ull * 1024;
inline constexpr std::uint64_t kGiB = 1024 * kMiB;

struct OsConfig {
    MappingMode mode = MappingMode::Hybrid;
    std::uint64_t memory_bytes = 32 * kGiB;
    std::uint64_t swap_bytes = 64 * kGiB;
    /// Kernel memory above the user frames holding tag-array and filter images.
    std::uint64_t kernel_bytes = 1 * kGiB;
    /// Hybrid mode only; restrictive-only mode maps all memory as one segment.
    std::vector<SegmentSpec> segments{{512 * kMiB, PageSize::Small}, {512 * kMiB, PageSize::Large}};
    unsigned associativity = 16;
    restseg::HashFn hash = restseg::HashFn::Mod;
    flexseg::PtwThresholds thresholds;
    bool migrations = true;
    Cycles page_fault_latency = 2000;
    Cycles swap_latency = 100000;
    Cycles migration_copy_latency = 1000;
    /// Charged per dirty line written back before a copy.
    Cycles flush_line_latency = 35;

    void validate() const;
};

enum class Direction : std::uint8_t { FlexToRest, RestToFlex };
std::string_view to_string(Direction d);

struct MigrationEvent {
    Vpn vpn;
    Direction direction = Direction::FlexToRest;
    Cycles start_cycle = 0;
    Cycles end_cycle = 0;
    std::uint64_t stalled_accesses = 0;
    unsigned flushed_lines = 0;
};

enum class Residence : std::uint8_t { Unmapped, RestSeg, FlexSeg, Swapped };
std::string_view to_string(Residence r);

/// Reuse bucket of a RestSeg page by its translation hits: 0, 1-5, 6-20, >20.
unsigned reuse_bucket(std::uint64_t hits);
inline constexpr unsigned kReuseBuckets = 4;

struct OsStats {
    std::uint64_t page_faults = 0;
    std::uint64_t restseg_allocations = 0;
    std::uint64_t flexseg_allocations = 0;
    std::uint64_t restseg_swap_evictions = 0;
    std::uint64_t migrations_flex_to_rest = 0;
    std::uint64_t migrations_rest_to_flex = 0;
    std::uint64_t stalled_accesses = 0;
    std::uint64_t stall_cycles = 0;
    std::array<std::uint64_t, kReuseBuckets> reuse{};
};

/// Policy layer: owns the segments, page tables, swap and migration state and
/// answers the MMU's fault and walk callbacks.
class Os final : public mmu::TranslationHost {
public:
    Os(const OsConfig& cfg, memsys::MemorySystem& memory);
    Os(const Os&) = delete;
    Os& operator=(const Os&) = delete;

    /// Physical addresses the memory system must accept: user frames plus the
    /// kernel metadata region.
    static PhysAddr addressable_bytes(const OsConfig& cfg) { return cfg.memory_bytes + cfg.kernel_bytes; }

    /// Segments in MMU order.
    std::vector<restseg::Segment*> segments();
    std::size_t segment_count() const { return segments_.size(); }
    const restseg::Segment& segment(std::size_t i) const { return *segments_[i]; }

    /// Must precede add_process; shootdowns are delivered to this MMU.
    void attach(mmu::Mmu& mmu) { mmu_ = &mmu; }
    /// Creates the process's translation structures and loads them into the MMU.
    void add_process(Pid pid, std::vector<HugeRegion> huge = {});
    bool has_process(Pid pid) const { return processes_.contains(pid); }

    PageSize page_size_for(Pid pid, VirtAddr va) const;
    Residence residence(const Vpn& vpn) const;
    /// Current mapping of `va` straight from the OS tables.
    std::optional<Pfn> lookup(Pid pid, VirtAddr va) const;

    /// Maps an unmapped or swapped page. Throws OutOfMemoryError when neither
    /// memory nor swap can take it.
    mmu::FaultResolution handle_page_fault(const Vpn& vpn, Cycles now);

    /// Accounts a FlexSeg walk and queues migrations once the page turns
    /// costly. Returns the events queued.
    std::vector<MigrationEvent> maybe_migrate(const Vpn& vpn, unsigned walk_dram_accesses, Cycles now);
    /// Queues moving `vpn` to the other segment type (plus a victim when the
    /// target set is full). Returns the events queued.
    std::vector<MigrationEvent> request_migration(const Vpn& vpn);
    /// Runs one migration starting at `now` and fills in its timing. Returns
    /// false, doing nothing, when the page has left the source segment.
    bool perform_migration(MigrationEvent& event, Cycles now);
    /// Runs every queued migration back to back. Returns how many ran.
    std::size_t run_pending_migrations(Cycles now);
    std::size_t pending_migrations() const { return pending_.size(); }
    bool locked(const Vpn& vpn, Cycles now) const;

    /// Throws StateError describing the first broken invariant.
    void check_invariants() const;
    /// Adds every page still in a RestSeg to the reuse histogram.
    void finalize_reuse();

    const OsConfig& config() const { return cfg_; }
    const OsStats& stats() const { return stats_; }
    const std::vector<MigrationEvent>& migrations() const { return history_; }
    const flexseg::FlexSegment& flex() const { return flex_; }
    const flexseg::SwapSpace& swap() const { return flex_.swap(); }
    const restseg::ProcessTables& tables(Pid pid, std::size_t segment) const;

    // TranslationHost
    Cycles migration_stall(Pid pid, VirtAddr va, Cycles now) override;
    mmu::FaultResolution handle_fault(Pid pid, VirtAddr va, AccessOp op, Cycles now) override;
    void flex_walk_completed(Pid pid, VirtAddr va, PageSize size, unsigned dram_accesses,
                             Cycles now) override;
    Pfn resolve_untimed(Pid pid, VirtAddr va, AccessOp op, Cycles now) override;

private:
    struct Place {
        Residence kind = Residence::Unmapped;
        std::uint8_t segment = 0;
        std::uint64_t set = 0;
        unsigned way = 0;
    };
    struct Process {
        std::vector<std::unique_ptr<restseg::ProcessTables>> tables;
        std::vector<HugeRegion> huge;
    };

    bool uses_flex() const { return cfg_.mode != MappingMode::RestrictiveOnly; }
    std::optional<std::size_t> segment_for(PageSize size) const;
    PhysAddr kernel_alloc(std::uint64_t bytes);
    const Place* place(const Vpn& vpn) const;
    Process& process(Pid pid);
    const Process& process(Pid pid) const;

    void on_flex_evicted(const Vpn& victim);
    void shootdown(const Vpn& vpn);
    Pfn place_in_restseg(const Vpn& vpn, std::size_t segment, std::uint64_t set, unsigned way);
    void remove_from_restseg(const Vpn& vpn, const Place& where);
    Pfn place_in_flexseg(const Vpn& vpn, bool from_swap);
    Pfn page_frame(const Vpn& vpn, const Place& where) const;

    OsConfig cfg_;
    memsys::MemorySystem& memory_;
    mmu::Mmu* mmu_ = nullptr;
    std::vector<std::unique_ptr<restseg::Segment>> segments_;
    flexseg::FlexSegment flex_;
    flexseg::EvictionSink sink_;
    PhysAddr kernel_next_;
    std::map<Pid, Process> processes_;
    std::unordered_map<std::uint64_t, Place> places_;
    std::deque<MigrationEvent> pending_;
    std::vector<MigrationEvent> history_;
    /// Packed vpn -> index into history_ of the migration holding its lock.
    std::unordered_map<std::uint64_t, std::size_t> locks_;
    OsStats stats_;
    bool reuse_finalized_ = false;
};

}  // namespace hvm::os
