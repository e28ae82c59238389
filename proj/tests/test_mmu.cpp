#include <list>
#include <random>

#include "doctest.h"
#include "hvm/core/error.hpp"
#include "hvm/mmu/mmu.hpp"

using namespace hvm;
using namespace hvm::mmu;
using memsys::BlockKind;

namespace {

class FakeHost : public TranslationHost {
public:
    Cycles stall = 0;
    Cycles fault_latency = 1000;
    Pfn fault_pfn{4242, PageSize::Small};
    int faults = 0;
    int flex_walks = 0;
    unsigned last_dram = 0;

    Cycles migration_stall(Pid, VirtAddr, Cycles) override { return stall; }
    FaultResolution handle_fault(Pid, VirtAddr, AccessOp, Cycles) override {
        ++faults;
        return {fault_pfn, fault_latency};
    }
    void flex_walk_completed(Pid, VirtAddr, PageSize, unsigned dram, Cycles) override {
        ++flex_walks;
        last_dram = dram;
    }
    Pfn resolve_untimed(Pid, VirtAddr, AccessOp, Cycles) override { return {77, PageSize::Small}; }
};

struct Rig {
    memsys::MemorySystem memory{memsys::MemoryConfig{}, 1ull << 32};
    FakeHost host;
    restseg::Segment segment;
    restseg::ProcessTables tables1, tables2;
    flexseg::RadixPageTable pt1{10}, pt2{11};
    std::uint64_t next_node = 1000;
    Mmu mmu;

    static restseg::Config seg_cfg() {
        restseg::Config c;
        c.base_frame = {4096, PageSize::Small};
        c.total_bytes = 1 << 20;
        c.associativity = 4;
        return c;
    }

    explicit Rig(MmuConfig cfg = {}, bool with_segment = true)
        : segment(seg_cfg()),
          tables1(seg_cfg(), 0x100000, 0x200000),
          tables2(seg_cfg(), 0x300000, 0x400000),
          mmu(cfg, memory, with_segment ? std::vector<restseg::Segment*>{&segment} : std::vector<restseg::Segment*>{},
              host) {
        ProcessContext c1{&pt1, {}}, c2{&pt2, {}};
        if (with_segment) {
            c1.restsegs = {&tables1};
            c2.restsegs = {&tables2};
        }
        mmu.register_process(1, c1);
        mmu.register_process(2, c2);
        mmu.context_switch(1);
    }

    void map_flex(flexseg::RadixPageTable& pt, Pid pid, std::uint64_t va, std::uint64_t frame) {
        pt.map(vpn_of(pid, VirtAddr(va), PageSize::Small), {frame, PageSize::Small},
               [this] { return next_node++; });
    }

    Pfn map_rest(Pid pid, std::uint64_t va) {
        const Vpn v = vpn_of(pid, VirtAddr(va), PageSize::Small);
        const auto set = segment.cfg.set_of(v.number);
        const int way = segment.global.free_way(set);
        REQUIRE(way >= 0);
        auto& t = pid == 1 ? tables1 : tables2;
        restseg::insert(segment.global, t.tar, t.sf, segment.cfg, v, set, static_cast<unsigned>(way));
        return segment.cfg.frame_of(set, static_cast<unsigned>(way));
    }
};

Cycles memory_latency(const TranslationOutcome& o, const memsys::Dram& dram) {
    Cycles total = 0;
    for (const auto& a : o.metadata_accesses) {
        total += 16;
        if (a.serviced_at != memsys::Level::L2) total += 35;
        if (a.serviced_at == memsys::Level::Dram) total += dram.latency_of(a.row);
    }
    return total;
}

struct RefLru {
    std::uint64_t sets;
    unsigned ways;
    std::vector<std::list<std::uint64_t>> order;
    RefLru(std::uint64_t s, unsigned w) : sets(s), ways(w), order(s) {}
    bool access(std::uint64_t key) {
        auto& l = order[key % sets];
        for (auto it = l.begin(); it != l.end(); ++it) {
            if (*it == key) {
                l.erase(it);
                l.push_front(key);
                return true;
            }
        }
        if (l.size() == ways) l.pop_back();
        l.push_front(key);
        return false;
    }
};

}  // namespace

TEST_CASE("associative table matches an LRU reference") {
    AssocTable t("t", {64, 4, 1});
    RefLru ref(16, 4);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50000; ++i) {
        const std::uint64_t k = rng() % 150;
        const bool hit = t.lookup(k, k).has_value();
        if (!hit) t.insert(k, k, k * 3);
        REQUIRE(hit == ref.access(k));
        REQUIRE(t.size() <= t.capacity());
    }
    t.insert(1000, 1000, 7);
    CHECK(t.lookup(1000, 1000) == 7u);
    CHECK_THROWS_AS(AssocTable("bad", {10, 4, 1}), ConfigError);
}

TEST_CASE("cold flexible walk reads four table entries in order, then the L1 TLB hits") {
    Rig rig(MmuConfig{}, false);
    const std::uint64_t va = 0x7f00'1234'5000ull;
    rig.map_flex(rig.pt1, 1, va, 555);
    const TranslationOutcome first = rig.mmu.translate(VirtAddr(va), 1, AccessOp::Read, 0);
    CHECK(first.resolved_by == ResolvedBy::Fsw);
    CHECK(first.pfn == Pfn{555, PageSize::Small});
    REQUIRE(first.metadata_accesses.size() == 4);
    const auto walk = rig.pt1.walk(VirtAddr(va));
    for (unsigned i = 0; i < 4; ++i) {
        CHECK(first.metadata_accesses[i].paddr == walk.accesses[i]);
        CHECK(first.metadata_accesses[i].kind == BlockKind::PtNode);
    }
    CHECK(first.latency == 1 + 12 + 2 + memory_latency(first, rig.memory.dram()));
    CHECK(rig.host.flex_walks == 1);
    CHECK(rig.host.last_dram == 4);

    const TranslationOutcome again = rig.mmu.translate(VirtAddr(va + 8), 1, AccessOp::Write, 100);
    CHECK(again.resolved_by == ResolvedBy::L1Tlb);
    CHECK(again.latency == 1);
    CHECK(again.metadata_accesses.empty());
}

TEST_CASE("page walk caches skip the upper levels") {
    Rig rig(MmuConfig{}, false);
    rig.map_flex(rig.pt1, 1, 0x1000, 1);
    rig.map_flex(rig.pt1, 1, 0x2000, 2);
    rig.mmu.translate(VirtAddr(0x1000), 1, AccessOp::Read, 0);
    const TranslationOutcome o = rig.mmu.translate(VirtAddr(0x2000), 1, AccessOp::Read, 0);
    CHECK(o.resolved_by == ResolvedBy::Fsw);
    REQUIRE(o.metadata_accesses.size() == 1);
    CHECK(o.metadata_accesses[0].paddr == rig.pt1.walk(VirtAddr(0x2000)).accesses[3]);
    CHECK(rig.mmu.stats().pwc_hits == 1);
}

TEST_CASE("L2 TLB hit costs L1 plus L2 latency") {
    for (bool parallel : {false, true}) {
        MmuConfig cfg;
        cfg.l1d_small = {1, 1, 1};
        cfg.walk_parallel = parallel;
        Rig rig(cfg, false);
        rig.map_flex(rig.pt1, 1, 0x1000, 1);
        rig.map_flex(rig.pt1, 1, 0x2000, 2);
        rig.mmu.translate(VirtAddr(0x1000), 1, AccessOp::Read, 0);
        rig.mmu.translate(VirtAddr(0x2000), 1, AccessOp::Read, 0);
        const TranslationOutcome o = rig.mmu.translate(VirtAddr(0x1000), 1, AccessOp::Read, 0);
        CHECK(o.resolved_by == ResolvedBy::L2Tlb);
        CHECK(o.latency == 13);
        CHECK(o.pfn == Pfn{1, PageSize::Small});
    }
}

TEST_CASE("restrictive walk fetches at most the filter and one tag row") {
    Rig rig;
    const Pfn where = rig.map_rest(1, 0x5000);
    const TranslationOutcome cold = rig.mmu.translate(VirtAddr(0x5000), 1, AccessOp::Read, 0);
    CHECK(cold.resolved_by == ResolvedBy::Rsw);
    CHECK(cold.pfn == where);
    CHECK(cold.rsw_walks == 1);
    CHECK(cold.rsw_tar_probes == 1);
    REQUIRE(cold.metadata_accesses.size() == 2);
    CHECK(cold.metadata_accesses[0].kind == BlockKind::SfLine);
    CHECK(cold.metadata_accesses[1].kind == BlockKind::TarLine);
    CHECK_FALSE(cold.fsw);

    // With both lines cached the walk is just the cache latency.
    rig.mmu.tlb_invalidate(vpn_of(1, VirtAddr(0x5000), PageSize::Small));
    const TranslationOutcome warm = rig.mmu.translate(VirtAddr(0x5000), 1, AccessOp::Read, 0);
    CHECK(warm.resolved_by == ResolvedBy::Rsw);
    CHECK(warm.latency == 3);
    CHECK(warm.metadata_accesses.empty());
    CHECK(rig.segment.global.hits(rig.segment.cfg.set_of(0x5), 0) == 2);

    // After a shootdown both lines are fetched again.
    rig.mmu.tlb_invalidate(vpn_of(1, VirtAddr(0x5000), PageSize::Small));
    rig.mmu.metadata_cache_shootdown(vpn_of(1, VirtAddr(0x5000), PageSize::Small));
    CHECK(rig.mmu.translate(VirtAddr(0x5000), 1, AccessOp::Read, 0).metadata_accesses.size() == 2);
}

TEST_CASE("an empty set is resolved by the filter alone") {
    Rig rig;
    rig.map_flex(rig.pt1, 1, 0x9000, 9);
    rig.mmu.translate(VirtAddr(0x9000), 1, AccessOp::Read, 0);  // warms the filter line
    rig.mmu.tlb_invalidate(vpn_of(1, VirtAddr(0x9000), PageSize::Small));
    const TranslationOutcome o = rig.mmu.translate(VirtAddr(0x9000), 1, AccessOp::Read, 0);
    CHECK(o.resolved_by == ResolvedBy::Fsw);
    CHECK(o.rsw_walks == 1);
    CHECK(o.rsw_tar_probes == 0);
    for (const auto& a : o.metadata_accesses) CHECK(a.kind == BlockKind::PtNode);
}

TEST_CASE("missing pages go to the fault handler") {
    Rig rig;
    const TranslationOutcome o = rig.mmu.translate(VirtAddr(0xabc000), 1, AccessOp::Write, 0);
    CHECK(o.resolved_by == ResolvedBy::PageFault);
    CHECK(o.fault_cycles == 1000);
    CHECK(o.pfn == rig.host.fault_pfn);
    CHECK(rig.host.faults == 1);
    CHECK(rig.mmu.translate(VirtAddr(0xabc000), 1, AccessOp::Read, 0).resolved_by == ResolvedBy::L1Tlb);
}

TEST_CASE("migration stalls are charged before the lookup") {
    Rig rig;
    rig.map_rest(1, 0x5000);
    rig.mmu.translate(VirtAddr(0x5000), 1, AccessOp::Read, 0);
    rig.host.stall = 50;
    const TranslationOutcome o = rig.mmu.translate(VirtAddr(0x5000), 1, AccessOp::Read, 0);
    CHECK(o.stall_cycles == 50);
    CHECK(o.latency == 51);
}

TEST_CASE("perfect TLB translates in one cycle without walking") {
    MmuConfig cfg;
    cfg.perfect_tlb = true;
    Rig rig(cfg);
    const TranslationOutcome o = rig.mmu.translate(VirtAddr(0x123000), 1, AccessOp::Read, 0);
    CHECK(o.latency == 1);
    CHECK(o.l1_hit);
    CHECK(o.pfn == Pfn{77, PageSize::Small});
    CHECK(o.metadata_accesses.empty());
}

TEST_CASE("TLB entries of both processes survive context switches") {
    MmuConfig cfg;
    cfg.context_switch_cost = 500;
    Rig rig(cfg, false);
    rig.map_flex(rig.pt1, 1, 0x1000, 1);
    rig.map_flex(rig.pt2, 2, 0x1000, 2);
    rig.mmu.translate(VirtAddr(0x1000), 1, AccessOp::Read, 0);
    CHECK_THROWS_AS(rig.mmu.translate(VirtAddr(0x1000), 2, AccessOp::Read, 0), StateError);
    CHECK(rig.mmu.context_switch(2) == 500);
    CHECK(rig.mmu.context_switch(2) == 0);
    CHECK(rig.mmu.translate(VirtAddr(0x1000), 2, AccessOp::Read, 0).pfn == Pfn{2, PageSize::Small});
    CHECK(rig.mmu.context_switch(1) == 500);
    const TranslationOutcome o = rig.mmu.translate(VirtAddr(0x1000), 1, AccessOp::Read, 0);
    CHECK(o.resolved_by == ResolvedBy::L1Tlb);
    CHECK(o.pfn == Pfn{1, PageSize::Small});
    CHECK(rig.mmu.stats().context_switches == 2);
    CHECK_THROWS_AS(rig.mmu.context_switch(99), StateError);
}

TEST_CASE("instruction fetches use the instruction TLB") {
    Rig rig(MmuConfig{}, false);
    rig.map_flex(rig.pt1, 1, 0x400000, 3);
    rig.mmu.translate(VirtAddr(0x400000), 1, AccessOp::InstrFetch, 0);
    CHECK(rig.mmu.l1i().contains(vpn_of(1, VirtAddr(0x400000), PageSize::Small)));
    CHECK_FALSE(rig.mmu.l1d(PageSize::Small).contains(vpn_of(1, VirtAddr(0x400000), PageSize::Small)));
    rig.mmu.tlb_invalidate(vpn_of(1, VirtAddr(0x400000), PageSize::Small));
    CHECK_FALSE(rig.mmu.l1i().contains(vpn_of(1, VirtAddr(0x400000), PageSize::Small)));
    CHECK_FALSE(rig.mmu.l2().contains(vpn_of(1, VirtAddr(0x400000), PageSize::Small)));
}

TEST_CASE("registration checks the segment count") {
    Rig rig;
    CHECK_THROWS_AS(rig.mmu.register_process(3, ProcessContext{&rig.pt1, {}}), StateError);
}
