#include "hvm/flexseg/flexseg.hpp"

#include <string>

#include "hvm/core/error.hpp"

namespace hvm::flexseg {
namespace {
std::uint64_t first_small_frame(Pfn pfn) {
    return pfn.size == PageSize::Small ? pfn.number : pfn.number * (kLargePageBytes / kSmallPageBytes);
}
}  // namespace

FlexSegment::FlexSegment(FrameAllocator frames, SwapSpace swap)
    : frames_(std::move(frames)), swap_(std::move(swap)) {}

void FlexSegment::add_process(Pid pid, const EvictionSink& on_evict) {
    if (tables_.contains(pid)) throw StateError("process " + std::to_string(pid) + " already has a page table");
    const Pfn root = obtain_frame(PageSize::Small, FrameUse::Table, on_evict);
    tables_.emplace(pid, RadixPageTable(root.number));
}

RadixPageTable& FlexSegment::table(Pid pid) {
    const auto it = tables_.find(pid);
    if (it == tables_.end()) throw StateError("no page table for process " + std::to_string(pid));
    return it->second;
}

const RadixPageTable& FlexSegment::table(Pid pid) const {
    const auto it = tables_.find(pid);
    if (it == tables_.end()) throw StateError("no page table for process " + std::to_string(pid));
    return it->second;
}

void FlexSegment::evict_one(const EvictionSink& on_evict) {
    const auto victim = clock_.victim();
    if (!victim) throw OutOfMemoryError("physical memory exhausted and no page left to swap out");
    const std::uint64_t slot = swap_out(*victim);
    if (on_evict) on_evict(*victim, slot);
}

Pfn FlexSegment::obtain_frame(PageSize size, FrameUse use, const EvictionSink& on_evict) {
    for (;;) {
        if (auto pfn = frames_.alloc(size, use)) return *pfn;
        evict_one(on_evict);
    }
}

RadixPageTable::NodeAllocator FlexSegment::node_allocator(const EvictionSink& on_evict) {
    return [this, &on_evict] { return obtain_frame(PageSize::Small, FrameUse::Table, on_evict).number; };
}

Pfn FlexSegment::map_new(const Vpn& vpn, const EvictionSink& on_evict) {
    const Pfn pfn = obtain_frame(vpn.size, FrameUse::Data, on_evict);
    map(vpn, pfn, on_evict);
    return pfn;
}

void FlexSegment::map(const Vpn& vpn, Pfn pfn, const EvictionSink& on_evict) {
    RadixPageTable& pt = table(vpn.pid);
    if (const Pte* pte = pt.leaf(vpn); pte != nullptr && pte->swapped()) pt.clear_swapped(vpn);
    pt.map(vpn, pfn, node_allocator(on_evict));
    clock_.insert(vpn, first_small_frame(pfn));
}

Pfn FlexSegment::unmap(const Vpn& vpn) {
    const Pfn pfn = table(vpn.pid).unmap(vpn);
    clock_.erase(vpn);
    frames_.release(pfn, FrameUse::Data);
    return pfn;
}

std::uint64_t FlexSegment::swap_out(const Vpn& vpn) {
    RadixPageTable& pt = table(vpn.pid);
    const Pte* pte = pt.leaf(vpn);
    if (pte == nullptr || !pte->present) throw StateError("cannot swap out a page that is not resident");
    const std::uint64_t slot = swap_.swap_out(vpn);
    const Pfn pfn = pt.mark_swapped(vpn, slot);
    clock_.erase(vpn);
    frames_.release(pfn, FrameUse::Data);
    return slot;
}

Pfn FlexSegment::swap_in(const Vpn& vpn, const EvictionSink& on_evict) {
    const Pfn pfn = obtain_frame(vpn.size, FrameUse::Data, on_evict);
    swap_.swap_in(vpn);
    map(vpn, pfn, on_evict);
    return pfn;
}

std::uint64_t FlexSegment::take_swapped(const Vpn& vpn) {
    const std::uint64_t slot = swap_.swap_in(vpn);
    table(vpn.pid).clear_swapped(vpn);
    return slot;
}

}  // namespace hvm::flexseg
