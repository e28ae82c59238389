#include "hvm/os/os.hpp"

#include <algorithm>
#include <sstream>
#include <string>

#include "hvm/core/error.hpp"

namespace hvm::os {
namespace {

std::uint64_t align_up(std::uint64_t v, std::uint64_t a) { return (v + a - 1) / a * a; }

std::vector<restseg::Config> layout(const OsConfig& cfg) {
    std::vector<restseg::Config> out;
    if (cfg.mode == MappingMode::RestrictiveOnly) {
        out.push_back({Pfn{0, PageSize::Small}, cfg.memory_bytes, PageSize::Small, cfg.associativity, cfg.hash});
    } else if (cfg.mode == MappingMode::Hybrid) {
        std::uint64_t start = 0;
        for (const SegmentSpec& s : cfg.segments) {
            start = align_up(start, page_bytes(s.page_size));
            out.push_back({Pfn{start / page_bytes(s.page_size), s.page_size}, s.bytes, s.page_size,
                           cfg.associativity, cfg.hash});
            start += s.bytes;
        }
        if (start > cfg.memory_bytes) {
            throw ConfigError("restricted segments (" + std::to_string(start) +
                              " bytes) exceed physical memory (" + std::to_string(cfg.memory_bytes) + " bytes)");
        }
    }
    for (const auto& c : out) c.validate();
    return out;
}

std::uint64_t reserved_frames(const std::vector<restseg::Config>& segs) {
    std::uint64_t end = 0;
    for (const auto& c : segs) end = std::max(end, c.base_frame.paddr() + c.total_bytes);
    return end / kSmallPageBytes;
}

flexseg::FlexSegment boot_flex(const OsConfig& cfg) {
    cfg.validate();
    const auto segs = layout(cfg);
    return flexseg::FlexSegment(flexseg::FrameAllocator(cfg.memory_bytes / kSmallPageBytes, reserved_frames(segs)),
                                flexseg::SwapSpace(cfg.swap_bytes / kSmallPageBytes));
}

std::string describe(const Vpn& v) {
    std::ostringstream os;
    os << "pid " << v.pid << " vpn 0x" << std::hex << v.number << " (" << to_string(v.size) << ")";
    return os.str();
}

}  // namespace

std::string_view to_string(MappingMode mode) {
    switch (mode) {
        case MappingMode::RadixOnly: return "radix";
        case MappingMode::RestrictiveOnly: return "restrictive";
        case MappingMode::Hybrid: return "hybrid";
        case MappingMode::PerfectTlb: return "perfect";
    }
    return "unknown";
}

MappingMode parse_mapping_mode(std::string_view name) {
    for (auto m : {MappingMode::RadixOnly, MappingMode::RestrictiveOnly, MappingMode::Hybrid, MappingMode::PerfectTlb}) {
        if (to_string(m) == name) return m;
    }
    throw ConfigError("unknown mapping mode '" + std::string(name) + "' (expected radix, restrictive, hybrid or perfect)");
}

std::string_view to_string(Direction d) { return d == Direction::FlexToRest ? "flex_to_rest" : "rest_to_flex"; }

std::string_view to_string(Residence r) {
    switch (r) {
        case Residence::Unmapped: return "unmapped";
        case Residence::RestSeg: return "restseg";
        case Residence::FlexSeg: return "flexseg";
        case Residence::Swapped: return "swapped";
    }
    return "unknown";
}

unsigned reuse_bucket(std::uint64_t hits) {
    if (hits == 0) return 0;
    if (hits <= 5) return 1;
    if (hits <= 20) return 2;
    return 3;
}

void OsConfig::validate() const {
    if (memory_bytes == 0 || memory_bytes % kSmallPageBytes != 0) {
        throw ConfigError("physical memory must be a positive multiple of 4KB");
    }
    if (swap_bytes % kSmallPageBytes != 0) throw ConfigError("swap size must be a multiple of 4KB");
    if (kernel_bytes == 0 || kernel_bytes % kLineBytes != 0) {
        throw ConfigError("kernel metadata region must be a positive multiple of 64 bytes");
    }
    if (associativity == 0) throw ConfigError("associativity must be at least 1");
}

Os::Os(const OsConfig& cfg, memsys::MemorySystem& memory)
    : cfg_(cfg), memory_(memory), flex_(boot_flex(cfg)), kernel_next_(cfg.memory_bytes) {
    for (const auto& c : layout(cfg_)) segments_.push_back(std::make_unique<restseg::Segment>(c));
    if (memory_.addressable_bytes() < addressable_bytes(cfg_)) {
        throw ConfigError("memory system does not cover the kernel metadata region");
    }
    sink_ = [this](const Vpn& victim, std::uint64_t) { on_flex_evicted(victim); };
}

std::vector<restseg::Segment*> Os::segments() {
    std::vector<restseg::Segment*> out;
    for (auto& s : segments_) out.push_back(s.get());
    return out;
}

std::optional<std::size_t> Os::segment_for(PageSize size) const {
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        if (segments_[i]->cfg.page_size == size) return i;
    }
    return std::nullopt;
}

PhysAddr Os::kernel_alloc(std::uint64_t bytes) {
    const PhysAddr at = kernel_next_;
    const PhysAddr next = align_up(at + bytes, kLineBytes);
    if (next > cfg_.memory_bytes + cfg_.kernel_bytes) {
        throw OutOfMemoryError("kernel metadata region exhausted; raise os.kernel_bytes");
    }
    kernel_next_ = next;
    return at;
}

Os::Process& Os::process(Pid pid) {
    const auto it = processes_.find(pid);
    if (it == processes_.end()) throw StateError("unknown pid " + std::to_string(pid));
    return it->second;
}

const Os::Process& Os::process(Pid pid) const {
    const auto it = processes_.find(pid);
    if (it == processes_.end()) throw StateError("unknown pid " + std::to_string(pid));
    return it->second;
}

const restseg::ProcessTables& Os::tables(Pid pid, std::size_t segment) const {
    return *process(pid).tables.at(segment);
}

void Os::add_process(Pid pid, std::vector<HugeRegion> huge) {
    if (mmu_ == nullptr) throw StateError("attach an MMU before adding processes");
    if (pid > kMaxPid) throw ConfigError("pid " + std::to_string(pid) + " exceeds the supported range");
    if (processes_.contains(pid)) throw StateError("pid " + std::to_string(pid) + " already exists");
    for (const HugeRegion& r : huge) {
        if (r.begin % kLargePageBytes != 0 || r.end % kLargePageBytes != 0 || r.end <= r.begin) {
            throw ConfigError("huge region of pid " + std::to_string(pid) + " is not a non-empty 2MB-aligned range");
        }
    }

    Process proc;
    proc.huge = std::move(huge);
    mmu::ProcessContext ctx;
    for (const auto& seg : segments_) {
        const PhysAddr tar = kernel_alloc(restseg::image_bytes(restseg::tar_size_bits(seg->cfg)));
        const PhysAddr sf = kernel_alloc(restseg::image_bytes(restseg::sf_size_bits(seg->cfg)));
        proc.tables.push_back(std::make_unique<restseg::ProcessTables>(seg->cfg, tar, sf));
        ctx.restsegs.push_back(proc.tables.back().get());
    }
    if (uses_flex()) {
        flex_.add_process(pid, sink_);
        ctx.page_table = &flex_.table(pid);
    }
    processes_.emplace(pid, std::move(proc));
    mmu_->register_process(pid, std::move(ctx));
}

PageSize Os::page_size_for(Pid pid, VirtAddr va) const {
    if (cfg_.mode == MappingMode::RestrictiveOnly) return PageSize::Small;
    for (const HugeRegion& r : process(pid).huge) {
        if (va.value() >= r.begin && va.value() < r.end) return PageSize::Large;
    }
    return PageSize::Small;
}

const Os::Place* Os::place(const Vpn& vpn) const {
    const auto it = places_.find(pack_vpn(vpn));
    return it == places_.end() ? nullptr : &it->second;
}

Residence Os::residence(const Vpn& vpn) const {
    const Place* p = place(vpn);
    return p == nullptr ? Residence::Unmapped : p->kind;
}

Pfn Os::page_frame(const Vpn& vpn, const Place& where) const {
    if (where.kind == Residence::RestSeg) return segments_[where.segment]->cfg.frame_of(where.set, where.way);
    return flex_.table(vpn.pid).leaf(vpn)->pfn();
}

std::optional<Pfn> Os::lookup(Pid pid, VirtAddr va) const {
    const Vpn vpn = vpn_of(pid, va, page_size_for(pid, va));
    const Place* p = place(vpn);
    if (p == nullptr || (p->kind != Residence::RestSeg && p->kind != Residence::FlexSeg)) return std::nullopt;
    return page_frame(vpn, *p);
}

void Os::shootdown(const Vpn& vpn) {
    if (mmu_ == nullptr) return;
    mmu_->tlb_invalidate(vpn);
    mmu_->metadata_cache_shootdown(vpn);
}

void Os::on_flex_evicted(const Vpn& victim) {
    places_[pack_vpn(victim)] = Place{Residence::Swapped};
    shootdown(victim);
}

Pfn Os::place_in_restseg(const Vpn& vpn, std::size_t segment, std::uint64_t set, unsigned way) {
    restseg::Segment& seg = *segments_[segment];
    restseg::ProcessTables& t = *process(vpn.pid).tables[segment];
    restseg::insert(seg.global, t.tar, t.sf, seg.cfg, vpn, set, way);
    places_[pack_vpn(vpn)] = Place{Residence::RestSeg, static_cast<std::uint8_t>(segment), set, way};
    return seg.cfg.frame_of(set, way);
}

void Os::remove_from_restseg(const Vpn& vpn, const Place& where) {
    restseg::Segment& seg = *segments_[where.segment];
    restseg::ProcessTables& t = *process(vpn.pid).tables[where.segment];
    stats_.reuse[reuse_bucket(seg.global.hits(where.set, where.way))] += 1;
    restseg::remove(seg.global, t.tar, t.sf, seg.cfg, vpn, where.set, where.way);
    places_.erase(pack_vpn(vpn));
}

Pfn Os::place_in_flexseg(const Vpn& vpn, bool from_swap) {
    const Pfn pfn = from_swap ? flex_.swap_in(vpn, sink_) : flex_.map_new(vpn, sink_);
    places_[pack_vpn(vpn)] = Place{Residence::FlexSeg};
    return pfn;
}

mmu::FaultResolution Os::handle_page_fault(const Vpn& vpn, Cycles now) {
    (void)now;
    process(vpn.pid);
    const Place* existing = place(vpn);
    if (existing != nullptr && existing->kind != Residence::Swapped) {
        throw StateError("page fault on resident page " + describe(vpn));
    }
    const bool swapped = existing != nullptr;
    ++stats_.page_faults;
    const std::uint64_t outs_before = flex_.swap().swap_outs();

    Pfn pfn;
    bool placed = false;
    if (cfg_.mode == MappingMode::RestrictiveOnly) {
        restseg::Segment& seg = *segments_[0];
        const std::uint64_t set = seg.cfg.set_of(vpn.number);
        int way = seg.global.free_way(set);
        if (way < 0) {
            way = static_cast<int>(restseg::select_victim(seg.global, set));
            const Vpn victim{seg.global.owner(set, static_cast<unsigned>(way)),
                             seg.global.vpn(set, static_cast<unsigned>(way)), seg.cfg.page_size};
            const Place where = *place(victim);
            remove_from_restseg(victim, where);
            flex_.swap().swap_out(victim);
            places_[pack_vpn(victim)] = Place{Residence::Swapped};
            ++stats_.restseg_swap_evictions;
            shootdown(victim);
        }
        if (swapped) flex_.swap().swap_in(vpn);
        pfn = place_in_restseg(vpn, 0, set, static_cast<unsigned>(way));
        placed = true;
    } else if (cfg_.mode == MappingMode::Hybrid) {
        if (const auto s = segment_for(vpn.size)) {
            restseg::Segment& seg = *segments_[*s];
            const std::uint64_t set = seg.cfg.set_of(vpn.number);
            const int way = seg.global.free_way(set);
            if (way >= 0) {
                if (swapped) flex_.take_swapped(vpn);
                pfn = place_in_restseg(vpn, *s, set, static_cast<unsigned>(way));
                placed = true;
            }
        }
    }
    if (placed) {
        ++stats_.restseg_allocations;
    } else {
        pfn = place_in_flexseg(vpn, swapped);
        ++stats_.flexseg_allocations;
    }

    const std::uint64_t swap_ops = (flex_.swap().swap_outs() - outs_before) + (swapped ? 1 : 0);
    return {pfn, cfg_.page_fault_latency + swap_ops * cfg_.swap_latency};
}

std::vector<MigrationEvent> Os::maybe_migrate(const Vpn& vpn, unsigned walk_dram_accesses, Cycles now) {
    (void)now;
    if (!uses_flex()) return {};
    flexseg::Pte* pte = flex_.table(vpn.pid).leaf(vpn);
    if (pte == nullptr || !pte->present) return {};
    const bool candidate = flexseg::record_walk_cost(*pte, walk_dram_accesses, cfg_.thresholds);
    if (!candidate || cfg_.mode != MappingMode::Hybrid || !cfg_.migrations) return {};
    return request_migration(vpn);
}

std::vector<MigrationEvent> Os::request_migration(const Vpn& vpn) {
    const Place* p = place(vpn);
    if (p == nullptr || (p->kind != Residence::FlexSeg && p->kind != Residence::RestSeg)) {
        throw StateError("only resident pages migrate: " + describe(vpn));
    }
    const auto queued = [this](const Vpn& v) {
        return std::any_of(pending_.begin(), pending_.end(), [&](const MigrationEvent& e) { return e.vpn == v; });
    };
    if (queued(vpn)) return {};

    std::vector<MigrationEvent> events;
    if (p->kind == Residence::RestSeg) {
        events.push_back({vpn, Direction::RestToFlex});
    } else {
        const auto s = segment_for(vpn.size);
        if (!s) return {};
        restseg::Segment& seg = *segments_[*s];
        const std::uint64_t set = seg.cfg.set_of(vpn.number);
        if (seg.global.free_way(set) < 0) {
            const unsigned way = restseg::select_victim(seg.global, set);
            const Vpn victim{seg.global.owner(set, way), seg.global.vpn(set, way), seg.cfg.page_size};
            if (!queued(victim)) events.push_back({victim, Direction::RestToFlex});
        }
        events.push_back({vpn, Direction::FlexToRest});
    }
    pending_.insert(pending_.end(), events.begin(), events.end());
    return events;
}

bool Os::perform_migration(MigrationEvent& event, Cycles now) {
    const Vpn vpn = event.vpn;
    const Place* p = place(vpn);
    const Residence source = event.direction == Direction::FlexToRest ? Residence::FlexSeg : Residence::RestSeg;
    if (p == nullptr || p->kind != source) return false;
    const Place from = *p;

    std::optional<std::pair<std::size_t, std::uint64_t>> target;
    if (event.direction == Direction::FlexToRest) {
        const auto s = segment_for(vpn.size);
        if (!s) return false;
        restseg::Segment& seg = *segments_[*s];
        const std::uint64_t set = seg.cfg.set_of(vpn.number);
        if (seg.global.free_way(set) < 0) {
            // The set filled up after the request; make room first.
            const unsigned way = restseg::select_victim(seg.global, set);
            MigrationEvent evict{{seg.global.owner(set, way), seg.global.vpn(set, way), seg.cfg.page_size},
                                 Direction::RestToFlex};
            perform_migration(evict, now);
            now = evict.end_cycle;
        }
        target.emplace(*s, set);
    }

    event.start_cycle = now;
    shootdown(vpn);
    const Pfn src = page_frame(vpn, from);
    event.flushed_lines = memory_.flush_range(src.paddr(), page_bytes(vpn.size));
    const std::uint64_t outs_before = flex_.swap().swap_outs();

    if (event.direction == Direction::FlexToRest) {
        flex_.unmap(vpn);
        places_.erase(pack_vpn(vpn));
        const auto [s, set] = *target;
        const int way = segments_[s]->global.free_way(set);
        place_in_restseg(vpn, s, set, static_cast<unsigned>(way));
        ++stats_.migrations_flex_to_rest;
    } else {
        remove_from_restseg(vpn, from);
        place_in_flexseg(vpn, false);
        ++stats_.migrations_rest_to_flex;
    }

    const std::uint64_t swap_outs = flex_.swap().swap_outs() - outs_before;
    event.end_cycle = event.start_cycle + event.flushed_lines * cfg_.flush_line_latency +
                      cfg_.migration_copy_latency + swap_outs * cfg_.swap_latency;
    history_.push_back(event);
    locks_[pack_vpn(vpn)] = history_.size() - 1;
    return true;
}

std::size_t Os::run_pending_migrations(Cycles now) {
    std::size_t ran = 0;
    while (!pending_.empty()) {
        MigrationEvent event = pending_.front();
        pending_.pop_front();
        if (perform_migration(event, now)) {
            now = event.end_cycle;
            ++ran;
        }
    }
    return ran;
}

bool Os::locked(const Vpn& vpn, Cycles now) const {
    const auto it = locks_.find(pack_vpn(vpn));
    return it != locks_.end() && history_[it->second].end_cycle > now;
}

Cycles Os::migration_stall(Pid pid, VirtAddr va, Cycles now) {
    if (locks_.empty()) return 0;
    const auto it = locks_.find(pack_vpn(vpn_of(pid, va, page_size_for(pid, va))));
    if (it == locks_.end()) return 0;
    MigrationEvent& event = history_[it->second];
    if (event.end_cycle <= now) {
        locks_.erase(it);
        return 0;
    }
    const Cycles stall = event.end_cycle - now;
    ++event.stalled_accesses;
    ++stats_.stalled_accesses;
    stats_.stall_cycles += stall;
    return stall;
}

mmu::FaultResolution Os::handle_fault(Pid pid, VirtAddr va, AccessOp, Cycles now) {
    return handle_page_fault(vpn_of(pid, va, page_size_for(pid, va)), now);
}

void Os::flex_walk_completed(Pid pid, VirtAddr va, PageSize size, unsigned dram_accesses, Cycles now) {
    const Vpn vpn = vpn_of(pid, va, size);
    flex_.reference(vpn);
    maybe_migrate(vpn, dram_accesses, now);
}

Pfn Os::resolve_untimed(Pid pid, VirtAddr va, AccessOp, Cycles now) {
    const Vpn vpn = vpn_of(pid, va, page_size_for(pid, va));
    const Place* p = place(vpn);
    if (p != nullptr && (p->kind == Residence::RestSeg || p->kind == Residence::FlexSeg)) {
        if (p->kind == Residence::FlexSeg) flex_.reference(vpn);
        return page_frame(vpn, *p);
    }
    return handle_page_fault(vpn, now).pfn;
}

void Os::finalize_reuse() {
    if (reuse_finalized_) return;
    reuse_finalized_ = true;
    for (const auto& [key, p] : places_) {
        if (p.kind != Residence::RestSeg) continue;
        stats_.reuse[reuse_bucket(segments_[p.segment]->global.hits(p.set, p.way))] += 1;
    }
}

void Os::check_invariants() const {
    const auto fail = [](const std::string& what) { throw StateError("invariant violated: " + what); };
    std::uint64_t rest = 0, flex = 0, swapped = 0, flex_frames = 0;
    for (const auto& [key, p] : places_) {
        const Vpn vpn = unpack_vpn(key);
        const flexseg::Pte* pte = uses_flex() ? flex_.table(vpn.pid).leaf(vpn) : nullptr;
        const bool in_swap = flex_.swap().contains(vpn);
        switch (p.kind) {
            case Residence::RestSeg: {
                ++rest;
                const restseg::Segment& seg = *segments_[p.segment];
                if (seg.cfg.page_size != vpn.size || seg.cfg.set_of(vpn.number) != p.set) {
                    fail(describe(vpn) + " sits in the wrong segment or set");
                }
                if (seg.global.owner(p.set, p.way) != vpn.pid || seg.global.vpn(p.set, p.way) != vpn.number) {
                    fail(describe(vpn) + " disagrees with the global tag array");
                }
                if (tables(vpn.pid, p.segment).tar.match(p.set, vpn.number) != static_cast<int>(p.way)) {
                    fail(describe(vpn) + " missing from its process tag array");
                }
                if (in_swap || (pte != nullptr && (pte->present || pte->swapped()))) {
                    fail(describe(vpn) + " is also mapped outside its restricted segment");
                }
                break;
            }
            case Residence::FlexSeg:
                ++flex;
                flex_frames += page_bytes(vpn.size) / kSmallPageBytes;
                if (pte == nullptr || !pte->present || !flex_.resident(vpn) || in_swap) {
                    fail(describe(vpn) + " is not a clean FlexSeg resident");
                }
                break;
            case Residence::Swapped:
                ++swapped;
                if (!in_swap || (pte != nullptr && pte->present)) fail(describe(vpn) + " is not cleanly swapped");
                if (uses_flex() && (pte == nullptr || !pte->swapped())) {
                    fail(describe(vpn) + " lost its swap marker");
                }
                break;
            case Residence::Unmapped:
                fail(describe(vpn) + " recorded as unmapped");
        }
    }
    std::uint64_t occupied = 0;
    for (const auto& seg : segments_) occupied += seg->global.occupied_count();
    if (occupied != rest) fail("global tag arrays hold " + std::to_string(occupied) + " pages, expected " + std::to_string(rest));
    if (flex_.resident_pages() != flex) fail("clock tracks a different FlexSeg page count");
    if (flex_.swap().pages() != swapped) fail("swap holds a different page count");

    const auto& frames = flex_.frames();
    using flexseg::FrameUse;
    const std::uint64_t total = frames.count(FrameUse::Free) + frames.count(FrameUse::Table) +
                                frames.count(FrameUse::RestSeg) + frames.count(FrameUse::Data);
    if (total != frames.total_frames()) fail("frame accounting does not sum to physical memory");
    if (frames.count(FrameUse::Data) != flex_frames) fail("data frame count differs from FlexSeg residents");

    for (const auto& [pid, proc] : processes_) {
        for (std::size_t s = 0; s < segments_.size(); ++s) {
            const restseg::ProcessTables& t = *proc.tables[s];
            for (std::uint64_t set = 0; set < t.sf.sets(); ++set) {
                unsigned valid = 0;
                for (unsigned w = 0; w < t.tar.ways(); ++w) valid += t.tar.valid(set, w);
                if (valid != t.sf.count(set)) fail("set filter of pid " + std::to_string(pid) + " is inexact");
            }
        }
    }
}

}  // namespace hvm::os
