#include "hvm/flexseg/radix_table.hpp"

#include <algorithm>

#include "hvm/core/error.hpp"

namespace hvm::flexseg {

bool record_walk_cost(Pte& pte, unsigned dram_accesses, const PtwThresholds& thresholds) {
    if (pte.ptw_freq < kPtwFreqMax) ++pte.ptw_freq;
    const unsigned cost = pte.ptw_cost + dram_accesses;
    pte.ptw_cost = static_cast<std::uint8_t>(std::min<unsigned>(cost, kPtwCostMax));
    return pte.ptw_freq >= thresholds.frequency && pte.ptw_cost >= thresholds.cost;
}

RadixPageTable::RadixPageTable(std::uint64_t root_frame) {
    nodes_.push_back(Node{root_frame, {}});
}

WalkResult RadixPageTable::walk(VirtAddr va) const {
    WalkResult r;
    const RadixIndices idx = radix_indices(split_vaddr(va, PageSize::Small).vpn_number, PageSize::Small);
    std::size_t node = 0;
    for (unsigned level = 0; level < 4; ++level) {
        const Node& n = nodes_[node];
        const Slot& slot = n.slots[idx.index[level]];
        r.accesses[r.access_count++] = n.frame * kSmallPageBytes + idx.index[level] * kPteBytes;
        const bool leaf_level = level == 3 || (level == 2 && slot.pte.huge);
        if (leaf_level) {
            r.size = slot.pte.huge ? PageSize::Large : PageSize::Small;
            if (slot.pte.present) {
                r.status = WalkStatus::Mapped;
                r.pfn = slot.pte.pfn();
            } else if (slot.pte.swapped()) {
                r.status = WalkStatus::Swapped;
                r.swap_slot = slot.pte.swap_slot;
            }
            return r;
        }
        if (slot.child < 0) return r;
        ++r.pointer_count;
        node = static_cast<std::size_t>(slot.child);
    }
    return r;
}

void RadixPageTable::map(const Vpn& vpn, Pfn pfn, const NodeAllocator& alloc_node) {
    if (pfn.size != vpn.size) throw StateError("frame size does not match page size");
    const RadixIndices idx = radix_indices(vpn.number, vpn.size);
    std::size_t node = 0;
    for (unsigned level = 0; level + 1 < idx.levels; ++level) {
        Slot& slot = nodes_[node].slots[idx.index[level]];
        if (slot.pte.huge) throw StateError("range already covered by a 2MB mapping");
        if (slot.child < 0) {
            // The allocator may evict pages, which only edits leaves, so
            // indices into nodes_ stay valid; references may not.
            const std::uint64_t frame = alloc_node();
            nodes_.push_back(Node{frame, {}});
            nodes_[node].slots[idx.index[level]].child = static_cast<std::int32_t>(nodes_.size() - 1);
        }
        node = static_cast<std::size_t>(nodes_[node].slots[idx.index[level]].child);
    }
    Slot& leaf = nodes_[node].slots[idx.index[idx.levels - 1]];
    if (leaf.pte.present) throw StateError("page is already mapped");
    if (vpn.size == PageSize::Large && leaf.child >= 0) {
        throw StateError("2MB page overlaps an existing 4KB page table");
    }
    leaf.pte = Pte{true, vpn.size == PageSize::Large, pfn.number, kNoSwapSlot, 0, 0};
}

const RadixPageTable::Slot* RadixPageTable::find_leaf_slot(const Vpn& vpn) const {
    const RadixIndices idx = radix_indices(vpn.number, vpn.size);
    std::size_t node = 0;
    for (unsigned level = 0; level + 1 < idx.levels; ++level) {
        const Slot& slot = nodes_[node].slots[idx.index[level]];
        if (slot.child < 0) return nullptr;
        node = static_cast<std::size_t>(slot.child);
    }
    const Slot& leaf = nodes_[node].slots[idx.index[idx.levels - 1]];
    if (vpn.size == PageSize::Large && !leaf.pte.huge) return nullptr;
    return &leaf;
}

Pte* RadixPageTable::leaf(const Vpn& vpn) {
    const Slot* s = find_leaf_slot(vpn);
    if (s == nullptr || (!s->pte.present && !s->pte.swapped())) return nullptr;
    return const_cast<Pte*>(&s->pte);
}

const Pte* RadixPageTable::leaf(const Vpn& vpn) const {
    const Slot* s = find_leaf_slot(vpn);
    if (s == nullptr || (!s->pte.present && !s->pte.swapped())) return nullptr;
    return &s->pte;
}

Pfn RadixPageTable::unmap(const Vpn& vpn) {
    Pte* pte = leaf(vpn);
    if (pte == nullptr || !pte->present) throw StateError("page is not mapped");
    const Pfn pfn = pte->pfn();
    *pte = Pte{};
    return pfn;
}

Pfn RadixPageTable::mark_swapped(const Vpn& vpn, std::uint64_t slot) {
    Pte* pte = leaf(vpn);
    if (pte == nullptr || !pte->present) throw StateError("page is not mapped");
    const Pfn pfn = pte->pfn();
    const bool huge = pte->huge;
    *pte = Pte{};
    pte->huge = huge;
    pte->swap_slot = slot;
    return pfn;
}

void RadixPageTable::clear_swapped(const Vpn& vpn) {
    Pte* pte = leaf(vpn);
    if (pte == nullptr || !pte->swapped()) throw StateError("page is not swapped");
    *pte = Pte{};
}

std::vector<std::uint64_t> RadixPageTable::node_frames() const {
    std::vector<std::uint64_t> out;
    out.reserve(nodes_.size());
    for (const Node& n : nodes_) out.push_back(n.frame);
    return out;
}

}  // namespace hvm::flexseg
