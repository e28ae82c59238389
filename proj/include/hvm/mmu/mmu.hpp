#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "hvm/core/address.hpp"
#include "hvm/core/trace.hpp"
#include "hvm/flexseg/radix_table.hpp"
#include "hvm/memsys/memsys.hpp"
#include "hvm/mmu/assoc_table.hpp"
#include "hvm/restseg/restseg.hpp"

namespace hvm::mmu {

enum class ResolvedBy : std::uint8_t { L1Tlb, L2Tlb, Rsw, Fsw, PageFault };
const char* to_string(ResolvedBy r);

struct MetadataAccess {
    PhysAddr paddr = 0;
    memsys::BlockKind kind = memsys::BlockKind::PtNode;
    memsys::Level serviced_at = memsys::Level::L2;
    memsys::RowOutcome row = memsys::RowOutcome::None;
};

struct TranslationOutcome {
    Pfn pfn;
    Cycles latency = 0;
    ResolvedBy resolved_by = ResolvedBy::L1Tlb;
    std::vector<MetadataAccess> metadata_accesses;

    bool l1_hit = false;
    bool l2_probed = false;
    bool l2_hit = false;
    unsigned rsw_walks = 0;
    unsigned rsw_tar_probes = 0;
    bool fsw = false;
    /// Part of `latency` spent waiting on a migration lock.
    Cycles stall_cycles = 0;
    /// Part of `latency` spent in the OS fault handler.
    Cycles fault_cycles = 0;
};

struct FaultResolution {
    Pfn pfn;
    Cycles latency = 0;
};

/// OS-side services the pipeline calls into.
class TranslationHost {
public:
    virtual ~TranslationHost() = default;

    /// Cycles a translation issued at `now` must wait for a migration lock
    /// covering `va`; 0 when the page is not being migrated.
    virtual Cycles migration_stall(Pid pid, VirtAddr va, Cycles now) = 0;
    /// Resolves a missing or swapped page and returns where it now lives.
    virtual FaultResolution handle_fault(Pid pid, VirtAddr va, AccessOp op, Cycles now) = 0;
    /// A FlexSeg walk found a present leaf after an L2 TLB miss.
    virtual void flex_walk_completed(Pid pid, VirtAddr va, PageSize size, unsigned dram_accesses,
                                     Cycles now) = 0;
    /// Untimed translation used when every lookup is assumed to hit.
    virtual Pfn resolve_untimed(Pid pid, VirtAddr va, AccessOp op, Cycles now) = 0;
};

struct MmuConfig {
    TableConfig l1i{128, 8, 1};
    TableConfig l1d_small{64, 4, 1};
    TableConfig l1d_large{32, 4, 1};
    TableConfig l2{1536, 12, 12};
    TableConfig pwc{32, 4, 2};
    /// 2KB of 64B lines, 8-way.
    TableConfig tar_cache{32, 8, 2};
    TableConfig sf_cache{32, 8, 2};
    bool walk_parallel = true;
    bool perfect_tlb = false;
    /// False when no radix table backs translations (restrictive-only).
    bool flex_walks = true;
    Cycles context_switch_cost = 0;
};

/// Translation structures the OS loads into the MMU registers for a process.
struct ProcessContext {
    const flexseg::RadixPageTable* page_table = nullptr;
    /// One entry per segment, in segment order.
    std::vector<const restseg::ProcessTables*> restsegs;
};

struct MmuStats {
    std::uint64_t pwc_hits = 0;
    std::uint64_t pwc_lookups = 0;
    std::vector<std::uint64_t> tar_cache_hits, tar_cache_lookups;
    std::vector<std::uint64_t> sf_cache_hits, sf_cache_lookups;
    std::uint64_t context_switches = 0;
};

class Mmu {
public:
    Mmu(const MmuConfig& cfg, memsys::MemorySystem& memory, std::vector<restseg::Segment*> segments,
        TranslationHost& host);

    void register_process(Pid pid, ProcessContext ctx);
    bool has_process(Pid pid) const { return contexts_.contains(pid); }

    /// Throws StateError when `pid` is not the loaded process.
    TranslationOutcome translate(VirtAddr va, Pid pid, AccessOp op, Cycles now);

    void tlb_invalidate(const Vpn& vpn);
    void metadata_cache_shootdown(const Vpn& vpn);

    /// Loads `pid`'s registers. Returns the cycles charged (0 when already loaded).
    Cycles context_switch(Pid pid);
    Pid current() const { return current_; }

    const Tlb& l1i() const { return l1i_; }
    const Tlb& l1d(PageSize size) const { return size == PageSize::Small ? l1d_small_ : l1d_large_; }
    const Tlb& l2() const { return l2_; }
    const AssocTable& tar_cache(std::size_t segment) const { return tar_caches_[segment]; }
    const AssocTable& sf_cache(std::size_t segment) const { return sf_caches_[segment]; }
    const MmuStats& stats() const { return stats_; }
    const MmuConfig& config() const { return cfg_; }
    std::size_t segment_count() const { return segments_.size(); }

private:
    struct RswLeg {
        Cycles latency = 0;
        restseg::RswResult result;
    };
    struct FswLeg {
        Cycles latency = 0;
        flexseg::WalkResult walk;
        unsigned dram_accesses = 0;
    };

    const ProcessContext& context(Pid pid) const;
    bool l1_lookup(Pid pid, VirtAddr va, AccessOp op, Pfn& pfn);
    bool l2_lookup(Pid pid, VirtAddr va, Pfn& pfn);
    RswLeg rsw_leg(std::size_t segment, Pid pid, VirtAddr va, TranslationOutcome& out);
    FswLeg fsw_leg(Pid pid, VirtAddr va, TranslationOutcome& out);
    void record(TranslationOutcome& out, PhysAddr paddr, memsys::BlockKind kind,
                const memsys::AccessResult& r);
    void fill_tlbs(Pid pid, VirtAddr va, AccessOp op, Pfn pfn, bool include_l2);

    MmuConfig cfg_;
    memsys::MemorySystem& memory_;
    std::vector<restseg::Segment*> segments_;
    TranslationHost& host_;

    Tlb l1i_;
    Tlb l1d_small_;
    Tlb l1d_large_;
    Tlb l2_;
    std::array<AssocTable, 3> pwc_;
    std::vector<AssocTable> tar_caches_;
    std::vector<AssocTable> sf_caches_;

    std::map<Pid, ProcessContext> contexts_;
    Pid current_ = 0;
    bool loaded_ = false;
    MmuStats stats_;
};

}  // namespace hvm::mmu
