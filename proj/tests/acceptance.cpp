// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is nonzero when any criterion fails.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "hvm/core/error.hpp"
#include "hvm/harness/config.hpp"
#include "hvm/harness/report.hpp"
#include "hvm/harness/simulator.hpp"
#include "hvm/mmu/mmu.hpp"
#include "hvm/os/os.hpp"
#include "hvm/restseg/restseg.hpp"
#include "json.hpp"

namespace {

using namespace hvm;
using harness::SimConfig;
using harness::StatsReport;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) { return harness::format_number(v); }

// ---------------------------------------------------------------------------

Verdict formula_fidelity() {
    restseg::Config tiny;
    tiny.total_bytes = 16 * 1024;
    tiny.associativity = 2;
    restseg::Config big;
    big.total_bytes = 512ull << 20;
    big.associativity = 16;
    const auto tar_tiny = restseg::tar_size_bits(tiny);
    const auto sf_tiny = restseg::sf_size_bits(tiny);
    const auto tar_big = restseg::tar_size_bits(big);
    const bool ok = tar_tiny == 180 && sf_tiny == 4 && tar_big == 528ull * 1024 * 8;
    return {ok, "tar(16KB,4KB,2-way)=" + std::to_string(tar_tiny) + " bits, sf=" + std::to_string(sf_tiny) +
                    " bits, tar(512MB,4KB,16-way)=" + std::to_string(tar_big / 8 / 1024) + " KiB"};
}

// ---------------------------------------------------------------------------

class StubHost : public mmu::TranslationHost {
public:
    Cycles migration_stall(Pid, VirtAddr, Cycles) override { return 0; }
    mmu::FaultResolution handle_fault(Pid, VirtAddr, AccessOp, Cycles) override {
        return {{1, PageSize::Small}, 2000};
    }
    void flex_walk_completed(Pid, VirtAddr, PageSize, unsigned, Cycles) override {}
    Pfn resolve_untimed(Pid, VirtAddr, AccessOp, Cycles) override { return {1, PageSize::Small}; }
};

Verdict walk_access_counts() {
    constexpr int kTranslations = 100'000;
    restseg::Config small_cfg{{0x10000, PageSize::Small}, 64ull << 20, PageSize::Small, 16, restseg::HashFn::Mod};
    restseg::Config large_cfg{{0x100, PageSize::Large}, 128ull << 20, PageSize::Large, 16, restseg::HashFn::Mod};
    restseg::Segment small_seg(small_cfg), large_seg(large_cfg);
    memsys::MemorySystem memory(memsys::MemoryConfig{}, 4ull << 30);
    StubHost host;

    struct Proc {
        std::vector<std::unique_ptr<restseg::ProcessTables>> tables;
        std::unique_ptr<flexseg::RadixPageTable> pt;
    };
    std::map<Pid, Proc> procs;
    PhysAddr kernel = 3ull << 30;
    std::uint64_t next_node = 0x40000;
    for (Pid pid : {1u, 2u}) {
        Proc p;
        for (const auto* c : {&small_cfg, &large_cfg}) {
            const PhysAddr tar = kernel;
            kernel += restseg::image_bytes(restseg::tar_size_bits(*c)) + 64;
            const PhysAddr sf = kernel;
            kernel += restseg::image_bytes(restseg::sf_size_bits(*c)) + 64;
            p.tables.push_back(std::make_unique<restseg::ProcessTables>(*c, tar, sf));
        }
        p.pt = std::make_unique<flexseg::RadixPageTable>(next_node++);
        procs.emplace(pid, std::move(p));
    }

    struct Page {
        Pid pid;
        VirtAddr va;
        std::optional<Pfn> pfn;
    };
    std::vector<Page> pages;
    std::set<std::uint64_t> used;
    std::mt19937_64 rng(2024);
    std::uint64_t next_frame = 0x80000;
    const auto alloc = [&] { return next_node++; };
    for (int i = 0; i < 40'000; ++i) {
        const Pid pid = 1 + rng() % 2;
        const VirtAddr va(((rng() % (1ull << 34)) << 12) | (rng() & 0xfff));
        const Vpn v = vpn_of(pid, va, PageSize::Small);
        if (!used.insert(pack_vpn(v)).second) continue;
        Proc& p = procs.at(pid);
        const auto set = small_cfg.set_of(v.number);
        const int way = small_seg.global.free_way(set);
        if (rng() % 2 == 0 && way >= 0) {
            restseg::insert(small_seg.global, p.tables[0]->tar, p.tables[0]->sf, small_cfg, v, set,
                            static_cast<unsigned>(way));
            pages.push_back({pid, va, small_cfg.frame_of(set, static_cast<unsigned>(way))});
        } else {
            const Pfn pfn{next_frame++, PageSize::Small};
            p.pt->map(v, pfn, alloc);
            pages.push_back({pid, va, pfn});
        }
    }
    for (int i = 0; i < 200; ++i) {
        const Pid pid = 1 + rng() % 2;
        const VirtAddr va((0x7000ull << 32) + (rng() % 4096) * kLargePageBytes + rng() % kLargePageBytes);
        const Vpn v = vpn_of(pid, va, PageSize::Large);
        const auto set = large_cfg.set_of(v.number);
        const int way = large_seg.global.free_way(set);
        if (way < 0 || !used.insert(pack_vpn(v)).second) continue;
        Proc& p = procs.at(pid);
        restseg::insert(large_seg.global, p.tables[1]->tar, p.tables[1]->sf, large_cfg, v, set,
                        static_cast<unsigned>(way));
        pages.push_back({pid, va, large_cfg.frame_of(set, static_cast<unsigned>(way))});
    }

    const auto in_images = [&](Pid pid, std::size_t seg, PhysAddr a) {
        const auto& t = *procs.at(pid).tables[seg];
        const auto& c = seg == 0 ? small_cfg : large_cfg;
        const PhysAddr tar_end = t.tar_base + restseg::image_bytes(restseg::tar_size_bits(c));
        const PhysAddr sf_end = t.sf_base + restseg::image_bytes(restseg::sf_size_bits(c));
        return (a >= t.tar_base / 64 * 64 && a < tar_end) || (a >= t.sf_base / 64 * 64 && a < sf_end);
    };

    std::uint64_t failures = 0, fsw4 = 0, rsw_cold = 0, rsw_warm = 0, max_rsw_requests = 0;
    for (int i = 0; i < kTranslations; ++i) {
        Page page;
        if (rng() % 10 == 0) {
            page = {static_cast<Pid>(1 + rng() % 2), VirtAddr((rng() % (1ull << 46)) & ~0xfffull), std::nullopt};
            if (used.contains(pack_vpn(vpn_of(page.pid, page.va, PageSize::Small)))) continue;
        } else {
            page = pages[rng() % pages.size()];
        }
        mmu::Mmu mmu(mmu::MmuConfig{}, memory, {&small_seg, &large_seg}, host);
        for (auto& [pid, p] : procs) mmu.register_process(pid, {p.pt.get(), {p.tables[0].get(), p.tables[1].get()}});
        mmu.context_switch(page.pid);
        const auto o = mmu.translate(page.va, page.pid, AccessOp::Read, 0);

        if (page.pfn && o.pfn != *page.pfn) ++failures;
        std::vector<PhysAddr> pt;
        std::uint64_t per_seg[2] = {0, 0};
        for (const auto& m : o.metadata_accesses) {
            if (m.kind == memsys::BlockKind::PtNode) {
                pt.push_back(m.paddr);
            } else {
                for (std::size_t s = 0; s < 2; ++s) per_seg[s] += in_images(page.pid, s, m.paddr);
            }
        }
        for (auto n : per_seg) {
            max_rsw_requests = std::max(max_rsw_requests, n);
            if (n > 2) ++failures;
        }
        if (o.fsw) {
            const auto walk = procs.at(page.pid).pt->walk(page.va);
            const std::vector<PhysAddr> expect(walk.accesses.begin(), walk.accesses.begin() + walk.access_count);
            if (pt != expect) ++failures;
            if (walk.status == flexseg::WalkStatus::Mapped) {
                if (pt.size() != 4) ++failures;
                ++fsw4;
            }
        } else if (!pt.empty()) {
            ++failures;
        }
        if (o.resolved_by == mmu::ResolvedBy::Rsw) {
            ++rsw_cold;
            mmu.tlb_invalidate(vpn_of(page.pid, page.va, o.pfn.size));
            const auto again = mmu.translate(page.va, page.pid, AccessOp::Read, 0);
            if (again.resolved_by != mmu::ResolvedBy::Rsw || !again.metadata_accesses.empty() || again.pfn != o.pfn) {
                ++failures;
            }
            ++rsw_warm;
        }
    }
    return {failures == 0 && fsw4 > 0 && rsw_cold > 0,
            std::to_string(kTranslations) + " translations: " + std::to_string(fsw4) +
                " mapped 4KB FSWs with 4 ordered PT requests, " + std::to_string(rsw_cold) +
                " RSW hits (max " + std::to_string(max_rsw_requests) + " requests per segment, " +
                std::to_string(rsw_warm) + " warm re-walks with 0), " + std::to_string(failures) + " violations"};
}

// ---------------------------------------------------------------------------

Verdict oracle_equivalence() {
    constexpr int kOps = 100'000;
    restseg::Config cfg{{100, PageSize::Small}, 64 * 4 * 4096, PageSize::Small, 4, restseg::HashFn::Mod};
    restseg::GlobalTar global(cfg);
    std::map<Pid, std::pair<restseg::TagArray, restseg::SetFilter>> procs;
    for (Pid p : {1u, 2u, 3u}) procs.emplace(p, std::make_pair(restseg::TagArray(cfg), restseg::SetFilter(cfg)));
    std::mt19937_64 rng(77);
    std::vector<Vpn> resident;
    std::uint64_t mismatches = 0;
    const restseg::HashFn fns[] = {restseg::HashFn::Mod, restseg::HashFn::XorFold, restseg::HashFn::PrimeDisp,
                                   restseg::HashFn::MersenneMod};

    for (int phase = 0; phase < 4; ++phase) {
        cfg.hash = fns[phase];
        global = restseg::GlobalTar(cfg);
        for (auto& [p, t] : procs) t = std::make_pair(restseg::TagArray(cfg), restseg::SetFilter(cfg));
        resident.clear();
        for (int op = 0; op < kOps / 4; ++op) {
            const Pid pid = 1 + rng() % 3;
            const Vpn v{pid, rng() % 512, PageSize::Small};
            auto& [tar, sf] = procs.at(pid);
            const auto kind = rng() % 3;
            if (kind == 0) {
                const auto set = cfg.set_of(v.number);
                if (!restseg::rsw(tar, sf, cfg, v).hit) {
                    int way = global.free_way(set);
                    if (way < 0) {
                        way = static_cast<int>(restseg::select_victim(global, set));
                        const Vpn victim{global.owner(set, way), global.vpn(set, way), PageSize::Small};
                        auto& vt = procs.at(victim.pid);
                        restseg::remove(global, vt.first, vt.second, cfg, victim, set, static_cast<unsigned>(way));
                        std::erase(resident, victim);
                    }
                    restseg::insert(global, tar, sf, cfg, v, set, static_cast<unsigned>(way));
                    resident.push_back(v);
                }
            } else if (kind == 1 && !resident.empty()) {
                const Vpn victim = resident[rng() % resident.size()];
                auto& vt = procs.at(victim.pid);
                const auto r = restseg::rsw(vt.first, vt.second, cfg, victim);
                if (!r.hit) {
                    ++mismatches;
                    continue;
                }
                restseg::remove(global, vt.first, vt.second, cfg, victim, r.set, r.way);
                std::erase(resident, victim);
            } else {
                const auto r = restseg::rsw(tar, sf, cfg, v);
                std::optional<Pfn> expect;
                for (std::uint64_t s = 0; s < cfg.num_sets(); ++s) {
                    for (unsigned w = 0; w < cfg.associativity; ++w) {
                        if (global.occupied(s, w) && global.owner(s, w) == pid && global.vpn(s, w) == v.number) {
                            expect = cfg.frame_of(s, w);
                        }
                    }
                }
                if (r.hit != expect.has_value() || (r.hit && r.pfn != *expect)) ++mismatches;
                if (r.hit) restseg::touch(global, r.set, r.way);
            }
            const auto set = cfg.set_of(v.number);
            for (auto& [p, t] : procs) {
                unsigned owned = 0;
                for (unsigned w = 0; w < cfg.associativity; ++w) owned += global.occupied(set, w) && global.owner(set, w) == p;
                if (t.second.count(set) != owned) ++mismatches;
            }
        }
        if (global.occupied_count() != resident.size()) ++mismatches;
    }
    return {mismatches == 0, std::to_string(kOps) + " insert/remove/rsw operations over 4 hash functions, " +
                                 std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------------------

Verdict coherence_fuzz() {
    constexpr int kSteps = 10'000;
    os::OsConfig cfg;
    cfg.mode = os::MappingMode::Hybrid;
    cfg.memory_bytes = 48ull << 20;
    cfg.swap_bytes = 512ull << 20;
    cfg.kernel_bytes = 16ull << 20;
    cfg.segments = {{4ull << 20, PageSize::Small}, {16ull << 20, PageSize::Large}};
    cfg.associativity = 4;
    cfg.thresholds = {2, 0};
    memsys::MemorySystem memory(memsys::MemoryConfig{}, os::Os::addressable_bytes(cfg));
    os::Os sys(cfg, memory);
    mmu::MmuConfig mc;
    mc.l2 = {96, 12, 12};
    mmu::Mmu mmu(mc, memory, sys.segments(), sys);
    sys.attach(mmu);
    const std::vector<HugeRegion> huge{{0x4000'0000, 0x4100'0000}};
    sys.add_process(1, huge);
    sys.add_process(2, huge);

    std::mt19937_64 rng(5);
    Cycles now = 0;
    std::uint64_t stale = 0, broken = 0, translations = 0, shootdowns = 0;
    std::vector<std::pair<Pid, VirtAddr>> touched;
    for (int step = 0; step < kSteps; ++step) {
        const auto action = rng() % 20;
        if (action < 14 || touched.empty()) {
            const Pid pid = 1 + rng() % 2;
            now += mmu.context_switch(pid);
            const VirtAddr va(rng() % 4 == 0 ? 0x4000'0000 + rng() % (16ull << 20) : (rng() % 4096) * 4096 + rng() % 4096);
            now += 5;
            sys.run_pending_migrations(now);
            const auto o = mmu.translate(va, pid, AccessOp::Read, now);
            now += o.latency;
            ++translations;
            const auto truth = sys.lookup(pid, va);
            if (!truth || *truth != o.pfn) ++stale;
            touched.emplace_back(pid, va);
        } else if (action < 18) {
            const auto [pid, va] = touched[rng() % touched.size()];
            const Vpn v = vpn_of(pid, va, sys.page_size_for(pid, va));
            const auto r = sys.residence(v);
            if (r == os::Residence::FlexSeg || r == os::Residence::RestSeg) sys.request_migration(v);
            now += 5;
            sys.run_pending_migrations(now);
        } else {
            const auto [pid, va] = touched[rng() % touched.size()];
            const Vpn v = vpn_of(pid, va, sys.page_size_for(pid, va));
            mmu.tlb_invalidate(v);
            mmu.metadata_cache_shootdown(v);
            ++shootdowns;
        }
        try {
            sys.check_invariants();
        } catch (const StateError&) {
            ++broken;
        }
    }
    const auto& s = sys.stats();
    return {stale == 0 && broken == 0,
            std::to_string(kSteps) + " steps (" + std::to_string(translations) + " translations, " +
                std::to_string(s.migrations_flex_to_rest + s.migrations_rest_to_flex) + " migrations, " +
                std::to_string(shootdowns) + " shootdowns, " + std::to_string(sys.swap().swap_outs()) +
                " swap-outs): " + std::to_string(stale) + " stale translations, " + std::to_string(broken) +
                " invariant violations"};
}

// ---------------------------------------------------------------------------

Verdict perfect_bound() {
    SimConfig c;
    harness::set_key(c, "mode", "perfect");
    harness::set_key(c, "os.memory_bytes", "512MB");
    harness::set_key(c, "os.swap_bytes", "2GB");
    harness::set_key(c, "restseg.segments", "64MB:4KB,64MB:2MB");
    harness::set_key(c, "workload.pattern", "mix");
    harness::set_key(c, "workload.footprint_bytes", "768MB");
    harness::set_key(c, "workload.huge_fraction", "0.25");
    harness::set_key(c, "workload.fetch_fraction", "0.1");
    harness::set_key(c, "workload.processes", "3");
    harness::set_key(c, "workload.accesses", "200000");
    const StatsReport r = harness::run(c, harness::workload_trace(c));
    const double mean = r.aggregate.mean_translation_latency();
    return {r.aggregate.metadata_accesses == 0 && mean == 1.0,
            "metadata accesses " + std::to_string(r.aggregate.metadata_accesses) + ", mean translation latency " +
                fmt(mean) + " cycles over " + std::to_string(r.aggregate.translations) + " translations"};
}

// ---------------------------------------------------------------------------

Verdict swap_blowup() {
    SimConfig c;
    harness::set_key(c, "os.memory_bytes", "64MB");
    harness::set_key(c, "os.swap_bytes", "1GB");
    harness::set_key(c, "workload.pattern", "zipf");
    harness::set_key(c, "workload.zipf_s", "0.8");
    harness::set_key(c, "workload.footprint_bytes", "128MB");
    harness::set_key(c, "workload.accesses", "5000000");
    const Trace t = harness::workload_trace(c);
    harness::set_key(c, "mode", "radix");
    const StatsReport radix = harness::run(c, t);
    harness::set_key(c, "mode", "restrictive");
    const StatsReport rest = harness::run(c, t);
    const double ratio = static_cast<double>(rest.swap_accesses()) / static_cast<double>(radix.swap_accesses());
    return {ratio >= 1.5, "swap accesses restrictive " + std::to_string(rest.swap_accesses()) + " / radix " +
                              std::to_string(radix.swap_accesses()) + " = " + fmt(ratio) + " (need >= 1.5)"};
}

// ---------------------------------------------------------------------------

SimConfig traffic_config() {
    SimConfig c;
    harness::set_key(c, "workload.pattern", "uniform");
    harness::set_key(c, "workload.footprint_bytes", "512MB");
    harness::set_key(c, "workload.accesses", "1000000");
    return c;
}

Verdict metadata_reduction(const Trace& t) {
    SimConfig c = traffic_config();
    harness::set_key(c, "mode", "radix");
    const StatsReport radix = harness::run(c, t);
    harness::set_key(c, "mode", "hybrid");
    const StatsReport hybrid = harness::run(c, t);
    const double mpki = radix.aggregate.l2_tlb_mpki();
    const double ratio =
        static_cast<double>(hybrid.metadata_dram_requests()) / static_cast<double>(radix.metadata_dram_requests());
    return {mpki > 20 && ratio <= 0.5,
            "radix L2 TLB MPKI " + fmt(mpki) + "; metadata DRAM requests hybrid " +
                std::to_string(hybrid.metadata_dram_requests()) + " / radix " +
                std::to_string(radix.metadata_dram_requests()) + " = " + fmt(ratio) + " (need MPKI > 20, <= 0.5)"};
}

Verdict serial_vs_parallel(const Trace& t) {
    SimConfig c = traffic_config();
    harness::set_key(c, "mode", "hybrid");
    harness::set_key(c, "mmu.walk_parallel", "true");
    const StatsReport par = harness::run(c, t);
    harness::set_key(c, "mmu.walk_parallel", "false");
    const StatsReport ser = harness::run(c, t);
    const double p = par.aggregate.mean_translation_latency();
    const double s = ser.aggregate.mean_translation_latency();
    const bool l2_hits = par.aggregate.l2_tlb_hits > 0;
    return {l2_hits ? p < s : p <= s, "mean translation latency parallel " + fmt(p) + " vs serial " + fmt(s) +
                                          " cycles (L2 TLB hits " + std::to_string(par.aggregate.l2_tlb_hits) + ")"};
}

// ---------------------------------------------------------------------------

Verdict histogram_buckets() {
    StatsReport r;
    r.mode = "hybrid";
    harness::ProcessStats p;
    for (Cycles lat : {299, 300, 500, 1500, 3000, 3001}) {
        mmu::TranslationOutcome o;
        o.latency = lat;
        o.resolved_by = mmu::ResolvedBy::Fsw;
        o.fsw = true;
        p.account({1, AccessOp::Read, VirtAddr(0), 1}, o, memsys::AccessResult{});
    }
    r.processes[1] = p;
    r.aggregate.merge(p);
    const auto doc = nlohmann::json::parse(harness::report_json(r));
    const auto& b = doc["aggregate"]["walk_latency"]["buckets"];
    const std::map<std::string, std::uint64_t> expect{
        {"0_300", 1}, {"300_500", 1}, {"500_1500", 1}, {"1500_3000", 1}, {"3000_inf", 2}};
    bool ok = b.size() == expect.size();
    std::string seen;
    for (const auto& [k, v] : expect) {
        const auto got = b.value(k, std::uint64_t{0});
        ok = ok && got == v;
        seen += (seen.empty() ? "" : " ") + k + "=" + std::to_string(got);
    }
    return {ok, "{299,300,500,1500,3000,3001} -> " + seen};
}

// ---------------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string directory_image(const std::filesystem::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) files[e.path().filename().string()] = slurp(e.path());
    std::string out;
    for (const auto& [name, body] : files) out += name + "\n" + body;
    return out;
}

Verdict determinism() {
    SimConfig c;
    harness::set_key(c, "os.memory_bytes", "256MB");
    harness::set_key(c, "restseg.segments", "32MB:4KB,32MB:2MB");
    harness::set_key(c, "workload.pattern", "mix");
    harness::set_key(c, "workload.footprint_bytes", "384MB");
    harness::set_key(c, "workload.huge_fraction", "0.2");
    harness::set_key(c, "workload.processes", "2");
    harness::set_key(c, "workload.accesses", "50000");
    const std::vector<harness::SweepAxis> axes{harness::parse_axis("mode=radix,restrictive,hybrid"),
                                               harness::parse_axis("mmu.walk_parallel=true,false")};
    bool ok = harness::report_json(harness::run(c, harness::workload_trace(c))) ==
              harness::report_json(harness::run(c, harness::workload_trace(c)));
    const auto a = harness::sweep(c, nullptr, axes, 1);
    const auto b = harness::sweep(c, nullptr, axes, 4);
    for (std::size_t i = 0; i < a.size(); ++i) ok = ok && harness::report_json(a[i]) == harness::report_json(b[i]);
    std::string detail = "in-process run x2 and 6-point sweep (1 vs 4 jobs) identical: " + std::string(ok ? "yes" : "no");

#ifdef HVMSIM_PATH
    const auto dir = std::filesystem::temp_directory_path() / ("hvm_accept_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    const std::string sim = HVMSIM_PATH;
    const std::string common =
        " -s os.memory_bytes=256MB -s restseg.segments=32MB:4KB,32MB:2MB -s workload.pattern=mix"
        " -s workload.footprint_bytes=384MB -s workload.accesses=40000 -s workload.processes=2";
    bool cli = true;
    for (int i = 0; i < 2; ++i) {
        const auto n = std::to_string(i);
        cli = cli && std::system((sim + " run" + common + " -o " + (dir / ("run" + n + ".json")).string() + " --csv " +
                                  (dir / ("run" + n + ".csv")).string())
                                     .c_str()) == 0;
        cli = cli && std::system((sim + " sweep" + common + " -a mode=radix,hybrid -a tlb.l2.entries=768,1536 -j 3 -o " +
                                  (dir / ("sweep" + n)).string())
                                     .c_str()) == 0;
    }
    cli = cli && slurp(dir / "run0.json") == slurp(dir / "run1.json") && !slurp(dir / "run0.json").empty() &&
          slurp(dir / "run0.csv") == slurp(dir / "run1.csv") &&
          directory_image(dir / "sweep0") == directory_image(dir / "sweep1");
    std::filesystem::remove_all(dir);
    ok = ok && cli;
    detail += "; CLI run and sweep byte-identical: " + std::string(cli ? "yes" : "no");
#endif
    return {ok, detail};
}

}  // namespace

int main() {
    std::vector<std::pair<std::string, std::function<Verdict()>>> criteria;
    criteria.emplace_back("TAR/SF size formulas", formula_fidelity);
    criteria.emplace_back("walk access counts", walk_access_counts);
    criteria.emplace_back("restricted-segment oracle equivalence", oracle_equivalence);
    criteria.emplace_back("coherence fuzz", coherence_fuzz);
    criteria.emplace_back("perfect-TLB bound", perfect_bound);
    criteria.emplace_back("restrictive-only swap blowup", swap_blowup);
    Trace traffic;
    const auto shared = [&traffic] {
        if (traffic.records.empty()) traffic = harness::workload_trace(traffic_config());
        return traffic;
    };
    criteria.emplace_back("metadata DRAM traffic reduction", [&] { return metadata_reduction(shared()); });
    criteria.emplace_back("parallel vs serial restricted walks", [&] { return serial_vs_parallel(shared()); });
    criteria.emplace_back("walk histogram buckets", histogram_buckets);
    criteria.emplace_back("determinism", determinism);

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        failed += !v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << "  C" << (i + 1) << " " << criteria[i].first << ": " << v.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
