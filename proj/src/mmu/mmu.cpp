#include "hvm/mmu/mmu.hpp"

#include <algorithm>
#include <string>

#include "hvm/core/error.hpp"

namespace hvm::mmu {
namespace {

constexpr unsigned kPwcLevels = 3;

std::uint64_t pwc_prefix(const RadixIndices& idx, unsigned level) {
    std::uint64_t prefix = 0;
    for (unsigned i = 0; i <= level; ++i) prefix = (prefix << kRadixIndexBits) | idx.index[i];
    return prefix;
}

std::uint64_t pwc_key(std::uint64_t prefix, Pid pid) { return (prefix << 26) | (pid & kMaxPid); }

}  // namespace

const char* to_string(ResolvedBy r) {
    switch (r) {
        case ResolvedBy::L1Tlb: return "l1_tlb";
        case ResolvedBy::L2Tlb: return "l2_tlb";
        case ResolvedBy::Rsw: return "rsw";
        case ResolvedBy::Fsw: return "fsw";
        case ResolvedBy::PageFault: return "page_fault";
    }
    return "unknown";
}

Mmu::Mmu(const MmuConfig& cfg, memsys::MemorySystem& memory, std::vector<restseg::Segment*> segments,
         TranslationHost& host)
    : cfg_(cfg),
      memory_(memory),
      segments_(std::move(segments)),
      host_(host),
      l1i_("l1i_tlb", cfg.l1i),
      l1d_small_("l1d_tlb_4k", cfg.l1d_small),
      l1d_large_("l1d_tlb_2m", cfg.l1d_large),
      l2_("l2_tlb", cfg.l2),
      pwc_{AssocTable("pwc_pml4", cfg.pwc), AssocTable("pwc_pdp", cfg.pwc), AssocTable("pwc_pd", cfg.pwc)} {
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        tar_caches_.emplace_back("tar_cache" + std::to_string(i), cfg.tar_cache);
        sf_caches_.emplace_back("sf_cache" + std::to_string(i), cfg.sf_cache);
    }
    stats_.tar_cache_hits.assign(segments_.size(), 0);
    stats_.tar_cache_lookups.assign(segments_.size(), 0);
    stats_.sf_cache_hits.assign(segments_.size(), 0);
    stats_.sf_cache_lookups.assign(segments_.size(), 0);
}

void Mmu::register_process(Pid pid, ProcessContext ctx) {
    if (ctx.restsegs.size() != segments_.size()) {
        throw StateError("process " + std::to_string(pid) + " registered with " +
                         std::to_string(ctx.restsegs.size()) + " segment tables, expected " +
                         std::to_string(segments_.size()));
    }
    if (cfg_.flex_walks && ctx.page_table == nullptr) {
        throw StateError("process " + std::to_string(pid) + " registered without a page table");
    }
    contexts_[pid] = std::move(ctx);
}

const ProcessContext& Mmu::context(Pid pid) const {
    const auto it = contexts_.find(pid);
    if (it == contexts_.end()) throw StateError("unknown pid " + std::to_string(pid));
    return it->second;
}

Cycles Mmu::context_switch(Pid pid) {
    context(pid);
    if (!loaded_) {
        loaded_ = true;
        current_ = pid;
        return 0;
    }
    if (pid == current_) return 0;
    current_ = pid;
    ++stats_.context_switches;
    return cfg_.context_switch_cost;
}

bool Mmu::l1_lookup(Pid pid, VirtAddr va, AccessOp op, Pfn& pfn) {
    const Vpn small = vpn_of(pid, va, PageSize::Small);
    const Vpn large = vpn_of(pid, va, PageSize::Large);
    std::optional<Pfn> hit;
    if (op == AccessOp::InstrFetch) {
        hit = l1i_.lookup(small);
        if (!hit) hit = l1i_.lookup(large);
    } else {
        hit = l1d_small_.lookup(small);
        if (!hit) hit = l1d_large_.lookup(large);
    }
    if (hit) pfn = *hit;
    return hit.has_value();
}

bool Mmu::l2_lookup(Pid pid, VirtAddr va, Pfn& pfn) {
    std::optional<Pfn> hit = l2_.lookup(vpn_of(pid, va, PageSize::Small));
    if (!hit) hit = l2_.lookup(vpn_of(pid, va, PageSize::Large));
    if (hit) pfn = *hit;
    return hit.has_value();
}

void Mmu::record(TranslationOutcome& out, PhysAddr paddr, memsys::BlockKind kind,
                 const memsys::AccessResult& r) {
    out.metadata_accesses.push_back({paddr, kind, r.serviced_at, r.row});
}

Mmu::RswLeg Mmu::rsw_leg(std::size_t i, Pid pid, VirtAddr va, TranslationOutcome& out) {
    restseg::Segment& seg = *segments_[i];
    const restseg::ProcessTables& tables = *context(pid).restsegs[i];
    const Vpn vpn = vpn_of(pid, va, seg.cfg.page_size);
    const std::uint64_t set = seg.cfg.set_of(vpn.number);
    const PhysAddr sf_addr = restseg::sf_counter_addr(seg.cfg, tables.sf_base, set);
    const PhysAddr tar_addr = restseg::tar_row_addr(seg.cfg, tables.tar_base, set);
    const std::uint64_t sf_line = sf_addr / kLineBytes;
    const std::uint64_t tar_line = tar_addr / kLineBytes;
    AssocTable& sf_cache = sf_caches_[i];
    AssocTable& tar_cache = tar_caches_[i];

    RswLeg leg;
    ++out.rsw_walks;
    ++stats_.sf_cache_lookups[i];
    const bool sf_hit = sf_cache.lookup(sf_line, sf_line).has_value();
    stats_.sf_cache_hits[i] += sf_hit;
    const unsigned counter = tables.sf.count(set);

    if (sf_hit && counter == 0) {
        leg.latency = sf_cache.latency();
    } else {
        ++stats_.tar_cache_lookups[i];
        const bool tar_hit = tar_cache.lookup(tar_line, tar_line).has_value();
        stats_.tar_cache_hits[i] += tar_hit;
        Cycles sf_leg = sf_cache.latency();
        Cycles tar_leg = tar_cache.latency();
        if (!sf_hit) {
            const auto r = memory_.access(sf_line * kLineBytes, memsys::BlockKind::SfLine, false);
            record(out, sf_line * kLineBytes, memsys::BlockKind::SfLine, r);
            sf_leg += r.latency;
            sf_cache.insert(sf_line, sf_line, 0);
        }
        if (!tar_hit) {
            const auto r = memory_.access(tar_line * kLineBytes, memsys::BlockKind::TarLine, false);
            record(out, tar_line * kLineBytes, memsys::BlockKind::TarLine, r);
            tar_leg += r.latency;
            tar_cache.insert(tar_line, tar_line, 0);
        }
        // An empty set is known as soon as the filter arrives.
        leg.latency = counter == 0 ? sf_leg : std::max(sf_leg, tar_leg);
    }

    leg.result = restseg::rsw(tables.tar, tables.sf, seg.cfg, vpn);
    out.rsw_tar_probes += leg.result.probed_tar;
    if (leg.result.hit) restseg::touch(seg.global, leg.result.set, leg.result.way);
    return leg;
}

Mmu::FswLeg Mmu::fsw_leg(Pid pid, VirtAddr va, TranslationOutcome& out) {
    const flexseg::RadixPageTable& table = *context(pid).page_table;
    FswLeg leg;
    leg.walk = table.walk(va);
    out.fsw = true;

    const RadixIndices idx = radix_indices(va.value() >> offset_bits(PageSize::Small), PageSize::Small);
    const unsigned cacheable = std::min(leg.walk.pointer_count, kPwcLevels);
    unsigned skip = 0;
    ++stats_.pwc_lookups;
    for (unsigned level = 0; level < kPwcLevels; ++level) {
        const std::uint64_t prefix = pwc_prefix(idx, level);
        const bool hit = pwc_[level].lookup(pwc_key(prefix, pid), prefix).has_value();
        // A cached pointer implies the node exists, so a hit never exceeds the walk.
        if (hit && level < cacheable) skip = level + 1;
    }
    stats_.pwc_hits += skip > 0;
    leg.latency = pwc_[0].latency();

    for (unsigned i = skip; i < leg.walk.access_count; ++i) {
        const PhysAddr addr = leg.walk.accesses[i];
        const auto r = memory_.access(addr, memsys::BlockKind::PtNode, false);
        record(out, addr, memsys::BlockKind::PtNode, r);
        leg.latency += r.latency;
        leg.dram_accesses += r.serviced_at == memsys::Level::Dram;
    }
    for (unsigned level = 0; level < cacheable; ++level) {
        const std::uint64_t prefix = pwc_prefix(idx, level);
        pwc_[level].insert(pwc_key(prefix, pid), prefix, 0);
    }
    return leg;
}

void Mmu::fill_tlbs(Pid pid, VirtAddr va, AccessOp op, Pfn pfn, bool include_l2) {
    const Vpn vpn = vpn_of(pid, va, pfn.size);
    if (op == AccessOp::InstrFetch) {
        l1i_.insert(vpn, pfn);
    } else if (pfn.size == PageSize::Small) {
        l1d_small_.insert(vpn, pfn);
    } else {
        l1d_large_.insert(vpn, pfn);
    }
    if (include_l2) l2_.insert(vpn, pfn);
}

TranslationOutcome Mmu::translate(VirtAddr va, Pid pid, AccessOp op, Cycles now) {
    if (!loaded_ || pid != current_) {
        throw StateError("translation for pid " + std::to_string(pid) + " while another process is loaded");
    }
    TranslationOutcome out;
    const Cycles l1_latency = op == AccessOp::InstrFetch
                                  ? l1i_.latency()
                                  : std::max(l1d_small_.latency(), l1d_large_.latency());
    if (cfg_.perfect_tlb) {
        out.pfn = host_.resolve_untimed(pid, va, op, now);
        out.latency = l1_latency;
        out.l1_hit = true;
        return out;
    }

    out.stall_cycles = host_.migration_stall(pid, va, now);
    now += out.stall_cycles;
    out.latency = out.stall_cycles + l1_latency;

    if (l1_lookup(pid, va, op, out.pfn)) {
        out.l1_hit = true;
        return out;
    }

    out.l2_probed = true;
    Pfn l2_pfn;
    out.l2_hit = l2_lookup(pid, va, l2_pfn);
    const Cycles l2_latency = l2_.latency();

    if (out.l2_hit && !cfg_.walk_parallel) {
        out.latency += l2_latency;
        out.pfn = l2_pfn;
        out.resolved_by = ResolvedBy::L2Tlb;
        fill_tlbs(pid, va, op, out.pfn, false);
        return out;
    }

    bool rsw_hit = false;
    Cycles rsw_hit_latency = 0;
    Cycles rsw_slowest = 0;
    Pfn rsw_pfn;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const RswLeg leg = rsw_leg(i, pid, va, out);
        rsw_slowest = std::max(rsw_slowest, leg.latency);
        if (leg.result.hit && (!rsw_hit || leg.latency < rsw_hit_latency)) {
            rsw_hit = true;
            rsw_hit_latency = leg.latency;
            rsw_pfn = leg.result.pfn;
        }
    }

    if (cfg_.walk_parallel) {
        if (out.l2_hit && (!rsw_hit || l2_latency <= rsw_hit_latency)) {
            out.latency += l2_latency;
            out.pfn = l2_pfn;
            out.resolved_by = ResolvedBy::L2Tlb;
            fill_tlbs(pid, va, op, out.pfn, false);
            return out;
        }
        if (rsw_hit) {
            out.latency += rsw_hit_latency;
            out.pfn = rsw_pfn;
            out.resolved_by = ResolvedBy::Rsw;
            fill_tlbs(pid, va, op, out.pfn, true);
            return out;
        }
        out.latency += std::max(l2_latency, rsw_slowest);
    } else {
        out.latency += l2_latency;
        if (rsw_hit) {
            out.latency += rsw_hit_latency;
            out.pfn = rsw_pfn;
            out.resolved_by = ResolvedBy::Rsw;
            fill_tlbs(pid, va, op, out.pfn, true);
            return out;
        }
        out.latency += rsw_slowest;
    }

    if (cfg_.flex_walks) {
        const FswLeg leg = fsw_leg(pid, va, out);
        out.latency += leg.latency;
        if (leg.walk.status == flexseg::WalkStatus::Mapped) {
            out.pfn = leg.walk.pfn;
            out.resolved_by = ResolvedBy::Fsw;
            host_.flex_walk_completed(pid, va, leg.walk.size, leg.dram_accesses,
                                     now + out.latency - out.stall_cycles);
            fill_tlbs(pid, va, op, out.pfn, true);
            return out;
        }
    }

    const FaultResolution fault = host_.handle_fault(pid, va, op, now + out.latency - out.stall_cycles);
    out.fault_cycles = fault.latency;
    out.latency += fault.latency;
    out.pfn = fault.pfn;
    out.resolved_by = ResolvedBy::PageFault;
    fill_tlbs(pid, va, op, out.pfn, true);
    return out;
}

void Mmu::tlb_invalidate(const Vpn& vpn) {
    l1i_.invalidate(vpn);
    if (vpn.size == PageSize::Small) {
        l1d_small_.invalidate(vpn);
    } else {
        l1d_large_.invalidate(vpn);
    }
    l2_.invalidate(vpn);
}

void Mmu::metadata_cache_shootdown(const Vpn& vpn) {
    const auto it = contexts_.find(vpn.pid);
    if (it == contexts_.end()) return;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const restseg::Config& cfg = segments_[i]->cfg;
        if (cfg.page_size != vpn.size) continue;
        const restseg::ProcessTables& tables = *it->second.restsegs[i];
        const std::uint64_t set = cfg.set_of(vpn.number);
        const std::uint64_t first = restseg::tar_row_addr(cfg, tables.tar_base, set) / kLineBytes;
        const std::uint64_t last = restseg::tar_row_last_addr(cfg, tables.tar_base, set) / kLineBytes;
        for (std::uint64_t line = first; line <= last; ++line) tar_caches_[i].erase(line, line);
        const std::uint64_t sf_line = restseg::sf_counter_addr(cfg, tables.sf_base, set) / kLineBytes;
        sf_caches_[i].erase(sf_line, sf_line);
    }
}

}  // namespace hvm::mmu
