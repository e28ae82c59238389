#include "hvm/harness/stats.hpp"

#include "hvm/core/error.hpp"

namespace hvm::harness {
namespace {

double per_kilo(std::uint64_t events, std::uint64_t instructions) {
    return instructions == 0 ? 0.0 : static_cast<double>(events) * 1000.0 / static_cast<double>(instructions);
}

template <std::size_t N>
void add_all(std::array<std::uint64_t, N>& into, const std::array<std::uint64_t, N>& from) {
    for (std::size_t i = 0; i < N; ++i) into[i] += from[i];
}

}  // namespace

std::size_t LatencyHistogram::bucket_of(Cycles latency) {
    std::size_t b = 0;
    while (b < kEdges.size() && latency >= kEdges[b]) ++b;
    return b;
}

std::string LatencyHistogram::label(std::size_t bucket) {
    if (bucket >= kBuckets) throw Error("histogram bucket out of range");
    const std::string lo = bucket == 0 ? "0" : std::to_string(kEdges[bucket - 1]);
    const std::string hi = bucket == kEdges.size() ? "inf" : std::to_string(kEdges[bucket]);
    return lo + "_" + hi;
}

void LatencyHistogram::add(Cycles latency) { ++counts_[bucket_of(latency)]; }

void LatencyHistogram::merge(const LatencyHistogram& other) { add_all(counts_, other.counts_); }

std::uint64_t LatencyHistogram::total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
}

void RowCounts::add(memsys::RowOutcome row) {
    switch (row) {
        case memsys::RowOutcome::Hit: ++hits; break;
        case memsys::RowOutcome::Conflict: ++conflicts; break;
        case memsys::RowOutcome::Activate: ++activations; break;
        case memsys::RowOutcome::None: break;
    }
}

void ProcessStats::account(const TraceRecord& rec, const mmu::TranslationOutcome& t,
                           const memsys::AccessResult& data) {
    ++records;
    instructions += rec.icount;
    switch (rec.op) {
        case AccessOp::InstrFetch: ++fetches; break;
        case AccessOp::Read: ++reads; break;
        case AccessOp::Write: ++writes; break;
    }

    ++translations;
    translation_cycles += t.latency;
    stall_cycles += t.stall_cycles;
    fault_cycles += t.fault_cycles;
    if (t.l1_hit) {
        ++l1_tlb_hits;
    } else {
        ++l1_tlb_misses;
    }
    if (t.l2_probed) {
        if (t.l2_hit) {
            ++l2_tlb_hits;
        } else {
            ++l2_tlb_misses;
        }
    }
    ++resolved[static_cast<std::size_t>(t.resolved_by)];
    if (t.fsw) ++ptws;
    rsws += t.rsw_walks;
    rsw_tar_probes += t.rsw_tar_probes;
    if (t.resolved_by == mmu::ResolvedBy::PageFault) ++faults;

    if (t.resolved_by != mmu::ResolvedBy::L1Tlb && t.resolved_by != mmu::ResolvedBy::L2Tlb) {
        const Cycles walk = t.latency - t.stall_cycles - t.fault_cycles;
        walk_latency.add(walk);
        walk_cycles += walk;
    }

    for (const auto& m : t.metadata_accesses) {
        ++metadata_accesses;
        const auto level = static_cast<int>(m.serviced_at);
        if (level < static_cast<int>(memsys::Level::L2)) throw StateError("metadata serviced above the L2 cache");
        ++metadata_serviced[static_cast<std::size_t>(level - 1)];
        if (m.serviced_at == memsys::Level::Dram) {
            switch (m.kind) {
                case memsys::BlockKind::PtNode: ++metadata_dram_by_kind[0]; break;
                case memsys::BlockKind::TarLine: ++metadata_dram_by_kind[1]; break;
                case memsys::BlockKind::SfLine: ++metadata_dram_by_kind[2]; break;
                default: throw StateError("data block reported as a metadata access");
            }
        }
        metadata_rows.add(m.row);
    }

    data_cycles += data.latency;
    ++data_serviced[static_cast<std::size_t>(data.serviced_at)];
    data_rows.add(data.row);
}

void ProcessStats::merge(const ProcessStats& o) {
    records += o.records;
    instructions += o.instructions;
    reads += o.reads;
    writes += o.writes;
    fetches += o.fetches;
    l1_tlb_hits += o.l1_tlb_hits;
    l1_tlb_misses += o.l1_tlb_misses;
    l2_tlb_hits += o.l2_tlb_hits;
    l2_tlb_misses += o.l2_tlb_misses;
    add_all(resolved, o.resolved);
    ptws += o.ptws;
    rsws += o.rsws;
    rsw_tar_probes += o.rsw_tar_probes;
    faults += o.faults;
    translations += o.translations;
    translation_cycles += o.translation_cycles;
    stall_cycles += o.stall_cycles;
    fault_cycles += o.fault_cycles;
    walk_latency.merge(o.walk_latency);
    walk_cycles += o.walk_cycles;
    metadata_accesses += o.metadata_accesses;
    add_all(metadata_serviced, o.metadata_serviced);
    add_all(metadata_dram_by_kind, o.metadata_dram_by_kind);
    metadata_rows.hits += o.metadata_rows.hits;
    metadata_rows.conflicts += o.metadata_rows.conflicts;
    metadata_rows.activations += o.metadata_rows.activations;
    data_cycles += o.data_cycles;
    add_all(data_serviced, o.data_serviced);
    data_rows.hits += o.data_rows.hits;
    data_rows.conflicts += o.data_rows.conflicts;
    data_rows.activations += o.data_rows.activations;
    context_switch_cycles += o.context_switch_cycles;
}

double ProcessStats::l1_tlb_mpki() const { return per_kilo(l1_tlb_misses, instructions); }
double ProcessStats::l2_tlb_mpki() const { return per_kilo(l2_tlb_misses, instructions); }

double ProcessStats::mean_translation_latency() const {
    return translations == 0 ? 0.0 : static_cast<double>(translation_cycles) / static_cast<double>(translations);
}

double StatsReport::stalled_access_fraction() const {
    return aggregate.translations == 0 ? 0.0
                                       : static_cast<double>(system.migration_stalled_accesses) /
                                             static_cast<double>(aggregate.translations);
}

}  // namespace hvm::harness
