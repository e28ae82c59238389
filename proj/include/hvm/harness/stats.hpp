#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hvm/core/address.hpp"
#include "hvm/core/trace.hpp"
#include "hvm/memsys/memsys.hpp"
#include "hvm/mmu/mmu.hpp"

namespace hvm::harness {

/// Walk-latency histogram. Buckets are [0,300), [300,500), [500,1500),
/// [1500,3000) and [3000,inf): a latency equal to an edge belongs to the
/// bucket that starts there.
class LatencyHistogram {
public:
    static constexpr std::array<Cycles, 4> kEdges{300, 500, 1500, 3000};
    static constexpr std::size_t kBuckets = kEdges.size() + 1;

    static std::size_t bucket_of(Cycles latency);
    /// Report label of bucket i, e.g. "300_500" or "3000_inf".
    static std::string label(std::size_t bucket);

    void add(Cycles latency);
    void merge(const LatencyHistogram& other);

    const std::array<std::uint64_t, kBuckets>& counts() const { return counts_; }
    std::uint64_t total() const;

    friend bool operator==(const LatencyHistogram&, const LatencyHistogram&) = default;

private:
    std::array<std::uint64_t, kBuckets> counts_{};
};

struct RowCounts {
    std::uint64_t hits = 0;
    std::uint64_t conflicts = 0;
    std::uint64_t activations = 0;

    void add(memsys::RowOutcome row);
    friend bool operator==(const RowCounts&, const RowCounts&) = default;
};

/// Counters kept separately for each process and summed for the aggregate.
struct ProcessStats {
    std::uint64_t records = 0;
    std::uint64_t instructions = 0;
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;
    std::uint64_t fetches = 0;

    std::uint64_t l1_tlb_hits = 0;
    std::uint64_t l1_tlb_misses = 0;
    std::uint64_t l2_tlb_hits = 0;
    std::uint64_t l2_tlb_misses = 0;

    /// Translations by the structure that resolved them, indexed by ResolvedBy.
    std::array<std::uint64_t, 5> resolved{};
    std::uint64_t ptws = 0;
    std::uint64_t rsws = 0;
    std::uint64_t rsw_tar_probes = 0;
    std::uint64_t faults = 0;

    std::uint64_t translations = 0;
    std::uint64_t translation_cycles = 0;
    std::uint64_t stall_cycles = 0;
    std::uint64_t fault_cycles = 0;
    /// Translations that were not served by a TLB.
    LatencyHistogram walk_latency;
    std::uint64_t walk_cycles = 0;

    std::uint64_t metadata_accesses = 0;
    /// Metadata requests by where they were serviced: L2, LLC, DRAM.
    std::array<std::uint64_t, 3> metadata_serviced{};
    /// Metadata requests reaching DRAM: page-table nodes, tag array, set filter.
    std::array<std::uint64_t, 3> metadata_dram_by_kind{};
    RowCounts metadata_rows;

    std::uint64_t data_cycles = 0;
    /// Data requests by where they were serviced: L1D, L2, LLC, DRAM.
    std::array<std::uint64_t, 4> data_serviced{};
    RowCounts data_rows;

    std::uint64_t context_switch_cycles = 0;

    /// Accounts one record: its translation followed by its data access.
    void account(const TraceRecord& rec, const mmu::TranslationOutcome& t, const memsys::AccessResult& data);
    void merge(const ProcessStats& other);

    double l1_tlb_mpki() const;
    double l2_tlb_mpki() const;
    double mean_translation_latency() const;

    friend bool operator==(const ProcessStats&, const ProcessStats&) = default;
};

/// Whole-system counters that are not attributable to one process.
struct SystemStats {
    Cycles cycles = 0;
    std::uint64_t epochs_sampled = 0;
    /// Mean share of valid blocks holding translation metadata: L1D, L2, LLC.
    std::array<double, 3> metadata_occupancy{};

    std::uint64_t swap_ins = 0;
    std::uint64_t swap_outs = 0;
    std::uint64_t page_faults = 0;
    std::uint64_t restseg_allocations = 0;
    std::uint64_t flexseg_allocations = 0;
    std::uint64_t restseg_swap_evictions = 0;

    std::uint64_t migrations_flex_to_rest = 0;
    std::uint64_t migrations_rest_to_flex = 0;
    std::uint64_t migration_stalled_accesses = 0;
    std::uint64_t migration_stall_cycles = 0;
    std::uint64_t migration_flushed_lines = 0;
    /// RestSeg pages by translation hits before leaving: 0, 1-5, 6-20, >20.
    std::array<std::uint64_t, 4> restseg_reuse{};

    std::uint64_t context_switches = 0;
    std::uint64_t quantum_expiries = 0;
    std::uint64_t pwc_hits = 0;
    std::uint64_t pwc_lookups = 0;
    std::uint64_t tar_cache_hits = 0;
    std::uint64_t tar_cache_lookups = 0;
    std::uint64_t sf_cache_hits = 0;
    std::uint64_t sf_cache_lookups = 0;
    std::uint64_t dirty_lines_flushed = 0;

    friend bool operator==(const SystemStats&, const SystemStats&) = default;
};

struct StatsReport {
    std::string mode;
    std::uint64_t trace_id = 0;
    /// Every config key with its canonical value.
    std::vector<std::pair<std::string, std::string>> config;
    std::map<Pid, ProcessStats> processes;
    ProcessStats aggregate;
    SystemStats system;

    std::uint64_t swap_accesses() const { return system.swap_ins + system.swap_outs; }
    std::uint64_t metadata_dram_requests() const { return aggregate.metadata_serviced[2]; }
    /// Migration-stalled accesses over translations; 0 with no translations.
    double stalled_access_fraction() const;

    friend bool operator==(const StatsReport&, const StatsReport&) = default;
};

}  // namespace hvm::harness
